#ifndef STPOISSON_SPATIAL_GRAPH_HPP
#define STPOISSON_SPATIAL_GRAPH_HPP

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stpoisson/errors.hpp"
#include "stpoisson/rng.hpp"

namespace stpoisson {

/// Areal neighborhood structure: per-region neighbor sets N_s with strictly
/// positive similarity weights g_kl, plus the across-time neighbor sets C_l
/// used by the contamination evolution (default: same as the spatial sets).
/// Region indices are 0-based in memory; edge files on disk are 1-based.
struct RegionGraph {
  int n_regions = 0;
  std::vector<std::vector<int>> neighbors;              // N_s, sorted
  std::vector<std::vector<double>> weights;             // g_sl, aligned with neighbors
  std::vector<std::vector<int>> across_time_neighbors;  // C_l, sorted

  struct Edge {
    int a = 0;
    int b = 0;
    double weight = 1.0;
  };

  /// Builds a graph from an undirected edge list (0-based indices). Weights
  /// default to 1 (binary adjacency). Across-time edges default to the
  /// spatial edges when absent.
  static RegionGraph from_edges(int n_regions, const std::vector<Edge>& edges,
                                const std::optional<std::vector<Edge>>& across_edges = std::nullopt);
};

/// Checks symmetry of the neighbor relation and of the weights, strict
/// positivity of weights, and absence of self-neighbors. Throws
/// ValidationError naming the offending pair.
void validate_graph(const RegionGraph& graph);

RegionGraph path_graph(int n_regions);
RegionGraph lattice_graph(int rows, int cols);

/// Reads "k l [g_kl]" lines, one edge per line, 1-based region indices,
/// weight defaulting to 1. Lines starting with '#' and blank lines are
/// skipped. When n_regions <= 0 the region count is inferred from the
/// largest index seen. The optional second file gives across-time neighbor
/// sets in the same format; without it C_l = N_l.
RegionGraph load_region_graph(const std::string& edge_path,
                              const std::optional<std::string>& across_path = std::nullopt,
                              int n_regions = 0);

/// Structure matrix of the field: -g_kl off the diagonal for neighbors,
/// neighbor weight sums on the diagonal. Every row sums to zero and the
/// matrix is positive semidefinite. The spectral decomposition is computed
/// once and cached: every (tau, phi) determinant, density, and sampling
/// evaluation reuses it.
struct NeighborhoodMatrix {
  Eigen::MatrixXd m;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns

  int size() const { return static_cast<int>(m.rows()); }
};

NeighborhoodMatrix build_neighborhood_matrix(const RegionGraph& graph);

/// Scale and spatial-dependence parameters of the field innovations; the
/// precision matrix is tau * (I + phi * M). phi = 0 degenerates to spatially
/// independent innovations with precision tau * I.
struct PgmrfParams {
  double tau = 1.0;
  double phi = 0.0;
};

void validate_params(const PgmrfParams& p);

Eigen::MatrixXd pgmrf_precision(const NeighborhoodMatrix& nb, const PgmrfParams& p);

/// log det(tau (I + phi M)) = sum_i [log tau + log(1 + phi lambda_i)].
double pgmrf_log_det(const NeighborhoodMatrix& nb, const PgmrfParams& p);

/// Normalized zero-mean Gaussian log-density with precision tau (I + phi M).
double pgmrf_log_density(const Eigen::VectorXd& omega, const NeighborhoodMatrix& nb,
                         const PgmrfParams& p);

/// Draw from N(0, [tau (I + phi M)]^{-1}) through the cached eigenbasis.
Eigen::VectorXd pgmrf_sample(const NeighborhoodMatrix& nb, const PgmrfParams& p, Rng& rng);

}  // namespace stpoisson

#endif

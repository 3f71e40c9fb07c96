#include "stpoisson/spatial_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace stpoisson {

namespace {

void check_index(int s, int n_regions, const std::string& where) {
  if (s < 0 || s >= n_regions) {
    std::ostringstream msg;
    msg << where << ": region index " << s + 1 << " outside 1.." << n_regions;
    throw ValidationError(msg.str());
  }
}

// Deduplicated symmetric adjacency from an edge list; conflicting duplicate
// weights are rejected.
std::map<std::pair<int, int>, double> edge_map(int n_regions,
                                               const std::vector<RegionGraph::Edge>& edges,
                                               const std::string& where) {
  std::map<std::pair<int, int>, double> out;
  for (const auto& e : edges) {
    check_index(e.a, n_regions, where);
    check_index(e.b, n_regions, where);
    if (e.a == e.b) {
      std::ostringstream msg;
      msg << where << ": self edge at region " << e.a + 1;
      throw ValidationError(msg.str());
    }
    if (!(e.weight > 0.0)) {
      std::ostringstream msg;
      msg << where << ": nonpositive weight " << e.weight << " on edge (" << e.a + 1 << ", "
          << e.b + 1 << ")";
      throw ValidationError(msg.str());
    }
    const auto key = std::minmax(e.a, e.b);
    auto [it, inserted] = out.emplace(key, e.weight);
    if (!inserted && it->second != e.weight) {
      std::ostringstream msg;
      msg << where << ": conflicting weights for edge (" << key.first + 1 << ", "
          << key.second + 1 << ")";
      throw ValidationError(msg.str());
    }
  }
  return out;
}

}  // namespace

RegionGraph RegionGraph::from_edges(int n_regions, const std::vector<Edge>& edges,
                                    const std::optional<std::vector<Edge>>& across_edges) {
  if (n_regions < 1) throw ValidationError("graph: region count must be positive");
  RegionGraph g;
  g.n_regions = n_regions;
  g.neighbors.resize(n_regions);
  g.weights.resize(n_regions);
  g.across_time_neighbors.resize(n_regions);

  for (const auto& [key, w] : edge_map(n_regions, edges, "adjacency")) {
    g.neighbors[key.first].push_back(key.second);
    g.weights[key.first].push_back(w);
    g.neighbors[key.second].push_back(key.first);
    g.weights[key.second].push_back(w);
  }

  if (across_edges) {
    for (const auto& [key, w] : edge_map(n_regions, *across_edges, "across-time adjacency")) {
      (void)w;  // across-time sets are unweighted
      g.across_time_neighbors[key.first].push_back(key.second);
      g.across_time_neighbors[key.second].push_back(key.first);
    }
  } else {
    g.across_time_neighbors = g.neighbors;
  }
  return g;
}

void validate_graph(const RegionGraph& graph) {
  const int S = graph.n_regions;
  if (S < 1) throw ValidationError("graph: region count must be positive");
  if (static_cast<int>(graph.neighbors.size()) != S ||
      static_cast<int>(graph.weights.size()) != S ||
      static_cast<int>(graph.across_time_neighbors.size()) != S) {
    throw ValidationError("graph: neighbor structures do not match the region count");
  }

  auto weight_of = [&](int k, int l) -> const double* {
    const auto& nb = graph.neighbors[k];
    for (std::size_t j = 0; j < nb.size(); ++j) {
      if (nb[j] == l) return &graph.weights[k][j];
    }
    return nullptr;
  };

  for (int k = 0; k < S; ++k) {
    if (graph.weights[k].size() != graph.neighbors[k].size()) {
      throw ValidationError("graph: weights not aligned with neighbors at region " +
                            std::to_string(k + 1));
    }
    for (std::size_t j = 0; j < graph.neighbors[k].size(); ++j) {
      const int l = graph.neighbors[k][j];
      const double w = graph.weights[k][j];
      std::ostringstream pair;
      pair << "(" << k + 1 << ", " << l + 1 << ")";
      if (l < 0 || l >= S) throw ValidationError("graph: neighbor index out of range at " + pair.str());
      if (l == k) throw ValidationError("graph: region is its own neighbor at " + pair.str());
      if (!(w > 0.0)) throw ValidationError("graph: nonpositive weight at " + pair.str());
      const double* back = weight_of(l, k);
      if (back == nullptr) {
        throw ValidationError("graph: asymmetric neighbor sets at " + pair.str());
      }
      if (*back != w) {
        throw ValidationError("graph: asymmetric weights at " + pair.str());
      }
    }
    for (int l : graph.across_time_neighbors[k]) {
      if (l == k) {
        throw ValidationError("graph: region " + std::to_string(k + 1) +
                              " is its own across-time neighbor");
      }
      if (l < 0 || l >= S) {
        throw ValidationError("graph: across-time neighbor index out of range at region " +
                              std::to_string(k + 1));
      }
    }
  }
}

RegionGraph path_graph(int n_regions) {
  std::vector<RegionGraph::Edge> edges;
  for (int s = 0; s + 1 < n_regions; ++s) edges.push_back({s, s + 1, 1.0});
  return RegionGraph::from_edges(n_regions, edges);
}

RegionGraph lattice_graph(int rows, int cols) {
  if (rows < 1 || cols < 1) throw ValidationError("lattice: dimensions must be positive");
  auto at = [cols](int r, int c) { return r * cols + c; };
  std::vector<RegionGraph::Edge> edges;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({at(r, c), at(r, c + 1), 1.0});
      if (r + 1 < rows) edges.push_back({at(r, c), at(r + 1, c), 1.0});
    }
  }
  return RegionGraph::from_edges(rows * cols, edges);
}

namespace {

std::vector<RegionGraph::Edge> read_edge_file(const std::string& path, int* max_index) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open adjacency file: " + path);
  std::vector<RegionGraph::Edge> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    long k = 0, l = 0;
    double w = 1.0;
    if (!(ls >> k >> l)) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected 'k l [g_kl]'");
    }
    ls >> w;  // optional third column
    if (k < 1 || l < 1) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": indices are 1-based");
    }
    edges.push_back({static_cast<int>(k - 1), static_cast<int>(l - 1), w});
    *max_index = std::max({*max_index, static_cast<int>(k), static_cast<int>(l)});
  }
  return edges;
}

}  // namespace

RegionGraph load_region_graph(const std::string& edge_path,
                              const std::optional<std::string>& across_path, int n_regions) {
  int max_index = 0;
  const auto edges = read_edge_file(edge_path, &max_index);
  std::optional<std::vector<RegionGraph::Edge>> across;
  if (across_path) across = read_edge_file(*across_path, &max_index);
  const int S = n_regions > 0 ? n_regions : max_index;
  if (S < 1) throw ValidationError(edge_path + ": no edges and no explicit region count");
  return RegionGraph::from_edges(S, edges, across);
}

NeighborhoodMatrix build_neighborhood_matrix(const RegionGraph& graph) {
  validate_graph(graph);
  const int S = graph.n_regions;
  NeighborhoodMatrix nb;
  nb.m = Eigen::MatrixXd::Zero(S, S);
  for (int k = 0; k < S; ++k) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < graph.neighbors[k].size(); ++j) {
      const int l = graph.neighbors[k][j];
      const double w = graph.weights[k][j];
      nb.m(k, l) = -w;
      row_sum += w;
    }
    nb.m(k, k) = row_sum;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nb.m);
  if (es.info() != Eigen::Success) {
    throw NumericalError("neighborhood matrix: eigendecomposition failed");
  }
  nb.eigenvalues = es.eigenvalues();
  nb.eigenvectors = es.eigenvectors();
  return nb;
}

void validate_params(const PgmrfParams& p) {
  if (!(p.tau > 0.0)) {
    throw ValidationError("pgmrf: tau must be positive, got " + std::to_string(p.tau));
  }
  if (!(p.phi >= 0.0)) {
    throw ValidationError("pgmrf: phi must be nonnegative, got " + std::to_string(p.phi));
  }
}

Eigen::MatrixXd pgmrf_precision(const NeighborhoodMatrix& nb, const PgmrfParams& p) {
  validate_params(p);
  const int S = nb.size();
  return p.tau * (Eigen::MatrixXd::Identity(S, S) + p.phi * nb.m);
}

double pgmrf_log_det(const NeighborhoodMatrix& nb, const PgmrfParams& p) {
  validate_params(p);
  return (std::log(p.tau) + (1.0 + p.phi * nb.eigenvalues.array()).log()).sum();
}

double pgmrf_log_density(const Eigen::VectorXd& omega, const NeighborhoodMatrix& nb,
                         const PgmrfParams& p) {
  validate_params(p);
  const int S = nb.size();
  if (omega.size() != S) {
    throw ValidationError("pgmrf: vector length " + std::to_string(omega.size()) +
                          " does not match field size " + std::to_string(S));
  }
  const double quad = p.tau * (omega.squaredNorm() + p.phi * omega.dot(nb.m * omega));
  return -0.5 * S * std::log(2.0 * std::numbers::pi) + 0.5 * pgmrf_log_det(nb, p) - 0.5 * quad;
}

Eigen::VectorXd pgmrf_sample(const NeighborhoodMatrix& nb, const PgmrfParams& p, Rng& rng) {
  validate_params(p);
  const Eigen::ArrayXd pivots = p.tau * (1.0 + p.phi * nb.eigenvalues.array());
  if (pivots.minCoeff() <= 0.0) {
    throw NumericalError("pgmrf: precision not positive definite (min pivot " +
                         std::to_string(pivots.minCoeff()) + ")");
  }
  const Eigen::VectorXd z = draw_std_normal(nb.size(), rng);
  return nb.eigenvectors * (z.array() / pivots.sqrt()).matrix();
}

}  // namespace stpoisson

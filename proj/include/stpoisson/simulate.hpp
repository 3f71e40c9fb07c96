#ifndef STPOISSON_SIMULATE_HPP
#define STPOISSON_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "stpoisson/effbs.hpp"
#include "stpoisson/model_spec.hpp"

namespace stpoisson {

struct SimConfig {
  SpecId spec;
  HyperParams hyper;
  RegionGraph graph;
  Eigen::MatrixXd population;  // T x S
  StateBelief init;
  int horizon = 0;
  std::uint64_t seed = 0;
  bool deterministic_latent = false;  // test seam: beta_0 = init mean, zero innovations
  double clamp_window = 40.0;         // |theta| beyond this aborts generation
};

struct SimulatedData {
  Observation obs;
  Eigen::MatrixXd beta_path;  // (T+1) x p
};

/// Forward generation: beta_0 ~ N(m_0, C_0), beta_t = G beta_{t-1} + omega_t
/// with blockwise field/gradient innovations, y_ts ~ Poisson(n_ts e^theta).
/// Deterministic given the seed.
SimulatedData simulate_dataset(const SimConfig& cfg);

/// Per-time Gaussian pseudo-observation for the oracle: y_t with a diagonal
/// observation precision (entries may be zero).
struct GaussianObs {
  Eigen::VectorXd y;
  Eigen::VectorXd precision_diag;
};

/// Joint precision and linear shift of beta_{0:T}: the initial-state block,
/// the block-tridiagonal evolution terms, and the per-time observation
/// blocks. Exposed so tests can cross-assemble the same system from explicit
/// per-time quadratic forms.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> oracle_joint_precision(
    const std::vector<SystemMatrices>& sys, const StateBelief& init,
    const std::vector<GaussianObs>& obs);

/// Exact linear-Gaussian reference: assembles the joint precision of
/// beta_{0:T} (block tridiagonal from the evolution plus observation
/// blocks), solves it densely, and returns the smoothed marginal moments for
/// t = 0..T. Guarded to (T+1) p <= 200; a test-scale tool, not a fitting
/// path. An empty observation vector means no data.
std::vector<StateBelief> dense_joint_oracle(const std::vector<SystemMatrices>& sys,
                                            const StateBelief& init,
                                            const std::vector<GaussianObs>& obs);

/// Filtered marginal moments of beta_t given observations 1..t, by solving
/// each prefix of the joint system.
std::vector<StateBelief> dense_joint_oracle_filtered(const std::vector<SystemMatrices>& sys,
                                                     const StateBelief& init,
                                                     const std::vector<GaussianObs>& obs);

}  // namespace stpoisson

#endif

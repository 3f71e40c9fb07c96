#ifndef STPOISSON_EFFBS_HPP
#define STPOISSON_EFFBS_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "stpoisson/linalg.hpp"
#include "stpoisson/model_spec.hpp"
#include "stpoisson/rng.hpp"

namespace stpoisson {

using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Count panel: counts and population sizes, T x S, with an optional
/// missingness mask (empty mask means fully observed). Missing cells hold a
/// zero count and contribute no information to the filter or likelihoods.
struct Observation {
  Eigen::MatrixXd counts;
  Eigen::MatrixXd population;
  MissingMask missing;

  int horizon() const { return static_cast<int>(counts.rows()); }
  int n_regions() const { return static_cast<int>(counts.cols()); }
};

void validate_observation(const Observation& obs);

struct StateBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct FilterOutput {
  std::vector<StateBelief> priors;      // (a_t, R_t), t = 1..T; entry 0 mirrors the init
  std::vector<StateBelief> posteriors;  // (m_t, C_t), t = 0..T; entry 0 is the init
  long clamp_events = 0;

  int horizon() const { return static_cast<int>(posteriors.size()) - 1; }
};

struct LinearizedObs {
  Eigen::VectorXd y_hat;
  Eigen::VectorXd v_inv;  // diagonal of the approximate precision
  int clamped = 0;
};

/// First-order expansion of the Poisson response n e^theta around theta_hat:
/// artificial observation y_hat_s = (y_s - n_s e^th) / (n_s e^th) + th and
/// approximate precision n_s e^th. theta_hat is clamped to the given window
/// before exponentiation; clamp events are counted, not errors.
LinearizedObs linearize_observation(const Eigen::VectorXd& y, const Eigen::VectorXd& n,
                                    const Eigen::VectorXd& theta_hat, double clamp_window = 40.0);

/// Seam for the observation update: maps (y_t, n_t, theta_hat_t) to the
/// artificial observation and its precision. The Poisson linearizer is the
/// production path; the Gaussian and zero-information linearizers exist for
/// exact linear-model checks.
using Linearizer = std::function<LinearizedObs(
    const Eigen::VectorXd& y, const Eigen::VectorXd& n, const Eigen::VectorXd& theta_hat)>;

Linearizer poisson_linearizer(double clamp_window = 40.0);
Linearizer gaussian_identity_linearizer(double obs_precision = 1.0);
Linearizer zero_information_linearizer();

/// One-pass extended forward filter. For each t: a_t = G m_{t-1},
/// R_t = G C_{t-1} G' + W, linearization at theta_hat = F' a_t, then
/// C_t = (R_t^{-1} + F V_inv F')^{-1} and m_t = C_t (F V_inv y_hat +
/// R_t^{-1} a_t). Covariances are symmetrized after every inversion;
/// a failed factorization raises NumericalError carrying t and the
/// offending matrix's minimum eigenvalue.
FilterOutput forward_filter(const Eigen::MatrixXd& y, const Eigen::MatrixXd& n,
                            const SystemMatrices& sys, const StateBelief& init,
                            const Linearizer& lin, const MissingMask* missing = nullptr);

FilterOutput forward_filter(const Observation& obs, const SystemMatrices& sys,
                            const StateBelief& init, double clamp_window = 40.0);

/// Backward sampler over a completed filter pass. Precomputes the per-time
/// conditional gains and Cholesky factors once so repeated draws are cheap.
class BackwardSampler {
public:
  BackwardSampler(const FilterOutput& filt, const SystemMatrices& sys);

  /// One joint draw of beta_{0:T}; row t is beta_t. Deterministic given the
  /// random source state.
  Eigen::MatrixXd draw(Rng& rng) const;

  /// Moments of beta_t given beta_{t+1}: mean B_t (G'W^{-1} beta_{t+1} +
  /// C_t^{-1} m_t), covariance B_t = (C_t^{-1} + G'W^{-1}G)^{-1}.
  StateBelief conditional(int t, const Eigen::VectorXd& beta_next) const;

  /// K_t = B_t G' W^{-1}, the coefficient of beta_{t+1} in the conditional mean.
  const Eigen::MatrixXd& gain(int t) const { return gain_.at(t); }

private:
  int horizon_ = 0;
  int p_ = 0;
  std::vector<Eigen::MatrixXd> gain_;    // B_t G' W^{-1}
  std::vector<Eigen::VectorXd> offset_;  // B_t C_t^{-1} m_t
  std::vector<Eigen::MatrixXd> cov_;     // B_t
  std::vector<Eigen::MatrixXd> chol_;    // lower factor of B_t
  Eigen::VectorXd last_mean_;
  Eigen::MatrixXd last_cov_;
  Eigen::MatrixXd last_chol_;
};

Eigen::MatrixXd backward_sample(const FilterOutput& filt, const SystemMatrices& sys, Rng& rng);

/// Marginal smoothed moments implied by the backward recursion.
std::vector<StateBelief> smoothed_moments(const FilterOutput& filt, const SystemMatrices& sys);

/// Exact Poisson log-likelihood of one time slice,
/// sum_s [y (theta + log n) - n e^theta - log Gamma(y + 1)].
double poisson_log_lik(const Eigen::VectorXd& y, const Eigen::VectorXd& n,
                       const Eigen::VectorXd& theta, const BoolArray* missing = nullptr);

/// Gaussian pseudo-likelihood implied by the linearization, evaluated at
/// theta with expansion point theta_hat:
/// -0.5 sum_s [log(2 pi) + log S_s + S_s^{-1} (y - S_s + S_s (th - theta))^2]
/// with S_s = n e^{th}. All constants are kept so values are comparable
/// across models.
double approx_log_lik(const Eigen::VectorXd& y, const Eigen::VectorXd& n,
                      const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta);

}  // namespace stpoisson

#endif

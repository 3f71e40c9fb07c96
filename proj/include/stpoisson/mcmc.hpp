#ifndef STPOISSON_MCMC_HPP
#define STPOISSON_MCMC_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stpoisson/effbs.hpp"
#include "stpoisson/model_spec.hpp"
#include "stpoisson/priors.hpp"
#include "stpoisson/rng.hpp"

namespace stpoisson {

struct McmcOptions {
  int n_iter = 20000;
  int burn_in = 10000;
  int n_chains = 2;
  double rw_scale_log_phi = 0.5;
  double rw_scale_logit_kappa = 0.5;
  bool adapt_during_burn_in = false;  // frozen after burn-in either way
  bool random_scan = false;           // permute hyperparameter blocks each sweep
  int latent_thin = 10;               // 0 disables latent path storage
  bool record_last_state = false;     // keep beta_T every iteration (predictive runs)
  std::vector<std::pair<int, int>> monitor_latent;  // (t, coordinate) pairs
  double clamp_window = 40.0;
};

void validate_options(const McmcOptions& opts);

struct Trace {
  std::vector<std::string> hyper_names;
  Eigen::MatrixXd hyper;  // kept x |hyper_names|
  std::vector<std::string> monitored_names;
  Eigen::MatrixXd monitored;              // kept x monitored
  std::vector<Eigen::MatrixXd> latent;    // thinned beta paths, each (T+1) x p
  Eigen::MatrixXd last_state;             // kept x p when recorded
  std::map<std::string, double> acceptance_rates;
  std::uint64_t seed = 0;
  int n_iter = 0;
  int burn_in = 0;
  int latent_thin = 0;
  long clamp_events = 0;

  int kept() const { return static_cast<int>(hyper.rows()); }
};

// ---- Hyperparameter blocks ----------------------------------------------

struct GammaPosterior {
  double shape = 0.0;
  double rate = 0.0;
};

/// Full conditional of one field block's tau given its innovations (rows are
/// omega_t') and phi: Gamma(a + T S / 2, b + 0.5 sum_t omega_t'(I + phi M)
/// omega_t).
GammaPosterior tau_full_conditional(const Eigen::MatrixXd& innovations, double phi,
                                    const NeighborhoodMatrix& nb, const GammaSpec& prior);
double sample_tau(const Eigen::MatrixXd& innovations, double phi, const NeighborhoodMatrix& nb,
                  const GammaSpec& prior, Rng& rng);

/// Full conditional of psi given the common-gradient path beta2_{0:T}:
/// Gamma(a + T / 2, b + 0.5 sum_t (beta2_t - beta2_{t-1})^2).
GammaPosterior psi_full_conditional(const Eigen::VectorXd& beta2_path, const GammaSpec& prior);
double sample_psi(const Eigen::VectorXd& beta2_path, const GammaSpec& prior, Rng& rng);

/// Unnormalized log target for phi: prior plus the innovation density terms
/// that involve phi (determinant and quadratic form).
double phi_log_target(double phi, const Eigen::MatrixXd& innovations, double tau,
                      const NeighborhoodMatrix& nb, double phi_upper);

struct MetropolisDraw {
  double value = 0.0;
  bool accepted = false;
};

/// Random-walk Metropolis on log phi with the log-scale Jacobian; proposals
/// outside (0, phi_upper) are rejected through the prior support.
MetropolisDraw sample_phi(double current, const Eigen::MatrixXd& innovations, double tau,
                          const NeighborhoodMatrix& nb, double phi_upper, double rw_scale,
                          Rng& rng);

/// Unnormalized log target for kappa: field evolution quadratic forms
/// recomputed under G(kappa); the field precision does not involve kappa, so
/// no determinant term appears. Uniform(0,1) prior.
double kappa_log_target(double kappa, const Eigen::MatrixXd& beta_path, const SpecId& spec,
                        const RegionGraph& graph, const NeighborhoodMatrix& nb, double tau,
                        double phi);

/// Random-walk Metropolis on logit kappa with the logistic Jacobian.
MetropolisDraw sample_kappa(double current, const Eigen::MatrixXd& beta_path, const SpecId& spec,
                            const RegionGraph& graph, const NeighborhoodMatrix& nb, double tau,
                            double phi, double rw_scale, Rng& rng);

/// Innovations of one field block under the current evolution matrix:
/// row t-1 holds the block rows of beta_t - G beta_{t-1}, t = 1..T.
Eigen::MatrixXd field_innovations(const Eigen::MatrixXd& beta_path, int block,
                                  const SpecId& spec, const HyperParams& hyper,
                                  const RegionGraph& graph);

/// Inverse of the trace column layout (tau_i, phi_i, kappa, psi).
HyperParams hyper_from_row(const SpecId& spec, const Eigen::VectorXd& row);

// ---- The chain -----------------------------------------------------------

struct SweepState {
  HyperParams hyper;
  Eigen::MatrixXd beta_path;  // (T+1) x p
};

/// One MCMC chain over (beta_{0:T}, hyperparameters): a forward-filter
/// backward-sampler block for the latent process followed by conjugate or
/// Metropolis blocks for the hyperparameters in the order tau_i, phi_i,
/// kappa, psi. Observations are held as a real matrix so the exact-Gaussian
/// seam can drive the same kernel in tests.
class ChainSampler {
public:
  ChainSampler(Eigen::MatrixXd y, Eigen::MatrixXd n, std::optional<MissingMask> missing,
               SpecId spec, RegionGraph graph, NeighborhoodMatrix nb, PriorConfig priors,
               McmcOptions opts, Linearizer lin);

  /// Draws initial hyperparameters from their priors (unless given) and the
  /// latent path from its conditional.
  void init_state(Rng& rng, const std::optional<HyperParams>& hyper = std::nullopt);

  /// One full scan; valid after init_state.
  void sweep(Rng& rng);

  /// Replace the observation panel (same shape); used by joint-distribution
  /// kernel tests that re-draw data.
  void set_observations(Eigen::MatrixXd y);

  SweepState& state() { return state_; }
  const SweepState& state() const { return state_; }
  std::map<std::string, double> acceptance_rates() const;
  long clamp_events() const { return clamp_events_; }

  /// init_state + n_iter sweeps, recording draws after burn-in.
  Trace run(Rng& rng, const std::optional<HyperParams>& init_hyper = std::nullopt);

  std::vector<std::string> hyper_names() const;
  Eigen::VectorXd hyper_vector() const;

private:
  void update_latent(Rng& rng);
  void update_hyper_block(int block_id, Rng& rng);
  void adapt_scales(int sweep_index);

  Eigen::MatrixXd y_, n_;
  std::optional<MissingMask> missing_;
  SpecId spec_;
  RegionGraph graph_;
  NeighborhoodMatrix nb_;
  PriorConfig priors_;
  McmcOptions opts_;
  Linearizer lin_;
  SweepState state_;
  bool adapting_ = false;
  long clamp_events_ = 0;
  std::map<std::string, long> accepted_, attempted_;
  std::map<std::string, long> window_accepted_, window_attempted_;
};

Trace run_chain(const Observation& obs, const SpecId& spec, const RegionGraph& graph,
                const NeighborhoodMatrix& nb, const PriorConfig& priors, const McmcOptions& opts,
                Rng& rng, const std::optional<HyperParams>& init_hyper = std::nullopt);

// ---- Convergence diagnostics ---------------------------------------------

struct PsrfResult {
  double value = 0.0;
  bool degenerate = false;  // zero within-chain variance
};

/// Potential scale reduction factor for one scalar series across chains of
/// equal length (between/within variance formula).
PsrfResult psrf(const std::vector<Eigen::VectorXd>& chains);

struct PsrfEntry {
  std::string name;
  PsrfResult result;
};

/// PSRF for every hyperparameter and monitored latent coordinate across
/// chains; requires at least two chains of equal length >= 10.
std::vector<PsrfEntry> gelman_rubin(const std::vector<Trace>& chains);

/// Column-wise PSRF over aligned matrices (one per chain).
std::vector<PsrfEntry> gelman_rubin(const std::vector<Eigen::MatrixXd>& chains,
                                    const std::vector<std::string>& names);

}  // namespace stpoisson

#endif

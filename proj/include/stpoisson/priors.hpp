#ifndef STPOISSON_PRIORS_HPP
#define STPOISSON_PRIORS_HPP

#include "stpoisson/effbs.hpp"
#include "stpoisson/model_spec.hpp"
#include "stpoisson/rng.hpp"

namespace stpoisson {

/// Shape-rate Gamma, fixed by the psi-prior arithmetic (variance ten times
/// the mean at shape 16, rate 0.1).
struct GammaSpec {
  double shape = 1.0;
  double rate = 1.0;
};

/// Hyperparameter priors and the initial latent belief. tau_i ~ Gamma(1, 1);
/// kappa ~ Uniform(0, 1); phi has density proportional to 1 on (0, 1) and to
/// phi^{-2} on (1, phi_upper); psi ~ Gamma(16, 0.1). The default initial
/// belief puts -16.25 on each log-risk coordinate (the reciprocal of an
/// 11.5-million state population), zero on gradient coordinates, and an
/// identity covariance.
struct PriorConfig {
  GammaSpec tau_prior{1.0, 1.0};
  double phi_upper = 100.0;
  GammaSpec psi_prior{16.0, 0.1};
  StateBelief init_state;
};

PriorConfig make_default_priors(const SpecId& spec, int n_regions,
                                double init_field_mean = -16.25);

/// Initial latent belief: init_field_mean on the log-risk block, zero on
/// gradient coordinates, diagonal covariance with the given spreads.
StateBelief make_init_state(const SpecId& spec, int n_regions, double field_mean,
                            double field_sd = 1.0, double gradient_sd = 1.0);

/// Normalized log-density of the phi prior on (0, phi_upper); -inf outside.
double phi_log_prior(double phi, double phi_upper);
double phi_prior_cdf(double phi, double phi_upper);
double sample_phi_prior(double phi_upper, Rng& rng);

double sample_gamma_prior(const GammaSpec& g, Rng& rng);

/// Independent prior draw of all components the family uses (phi forced to
/// zero under diagonal innovations).
HyperParams sample_hyper_prior(const SpecId& spec, const PriorConfig& priors, Rng& rng);

}  // namespace stpoisson

#endif

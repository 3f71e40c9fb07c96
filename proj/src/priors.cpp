#include "stpoisson/priors.hpp"

#include <cmath>
#include <limits>

namespace stpoisson {

PriorConfig make_default_priors(const SpecId& spec, int n_regions, double init_field_mean) {
  PriorConfig out;
  out.init_state = make_init_state(spec, n_regions, init_field_mean);
  return out;
}

StateBelief make_init_state(const SpecId& spec, int n_regions, double field_mean,
                            double field_sd, double gradient_sd) {
  if (!(field_sd > 0.0) || !(gradient_sd > 0.0)) {
    throw ValidationError("initial state: spreads must be positive");
  }
  const int p = latent_dimension(spec, n_regions);
  StateBelief init;
  // The leading block is the log-risk level; gradient coordinates start at zero.
  init.mean = Eigen::VectorXd::Zero(p);
  init.mean.head(n_regions).setConstant(field_mean);
  init.cov = Eigen::MatrixXd::Identity(p, p) * (gradient_sd * gradient_sd);
  init.cov.topLeftCorner(n_regions, n_regions) =
      Eigen::MatrixXd::Identity(n_regions, n_regions) * (field_sd * field_sd);
  return init;
}

namespace {

double phi_norm_constant(double phi_upper) {
  // integral of 1 on (0,1) plus integral of phi^{-2} on (1, upper)
  return 1.0 + (1.0 - 1.0 / phi_upper);
}

}  // namespace

double phi_log_prior(double phi, double phi_upper) {
  if (!(phi_upper > 1.0)) throw ValidationError("phi prior: upper bound must exceed 1");
  if (phi <= 0.0 || phi >= phi_upper) return -std::numeric_limits<double>::infinity();
  const double log_z = std::log(phi_norm_constant(phi_upper));
  if (phi < 1.0) return -log_z;
  return -2.0 * std::log(phi) - log_z;
}

double phi_prior_cdf(double phi, double phi_upper) {
  if (!(phi_upper > 1.0)) throw ValidationError("phi prior: upper bound must exceed 1");
  if (phi <= 0.0) return 0.0;
  if (phi >= phi_upper) return 1.0;
  const double z = phi_norm_constant(phi_upper);
  if (phi < 1.0) return phi / z;
  return (2.0 - 1.0 / phi) / z;
}

double sample_phi_prior(double phi_upper, Rng& rng) {
  // Inverse CDF: u z <= 1 lands in the flat part, otherwise in the tail.
  const double z = phi_norm_constant(phi_upper);
  const double u = draw_uniform(rng) * z;
  return u <= 1.0 ? u : 1.0 / (2.0 - u);
}

double sample_gamma_prior(const GammaSpec& g, Rng& rng) { return draw_gamma(g.shape, g.rate, rng); }

HyperParams sample_hyper_prior(const SpecId& spec, const PriorConfig& priors, Rng& rng) {
  const int blocks = n_field_blocks(spec.family);
  HyperParams hyper;
  hyper.tau.resize(blocks);
  hyper.phi = Eigen::VectorXd::Zero(blocks);
  for (int b = 0; b < blocks; ++b) {
    hyper.tau[b] = sample_gamma_prior(priors.tau_prior, rng);
    if (spec.innovations == Innovations::Spatial) {
      hyper.phi[b] = sample_phi_prior(priors.phi_upper, rng);
    }
  }
  if (has_contamination(spec.family)) hyper.kappa = draw_uniform(rng);
  if (has_common_gradient(spec.family)) hyper.psi = sample_gamma_prior(priors.psi_prior, rng);
  return hyper;
}

}  // namespace stpoisson

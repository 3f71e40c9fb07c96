#include "stpoisson/simulate.hpp"

#include <cmath>
#include <sstream>

#include "stpoisson/linalg.hpp"

namespace stpoisson {

SimulatedData simulate_dataset(const SimConfig& cfg) {
  validate_hyper(cfg.spec, cfg.hyper);
  validate_graph(cfg.graph);
  const int S = cfg.graph.n_regions;
  const int T = cfg.horizon;
  const int p = latent_dimension(cfg.spec, S);
  if (T < 1) throw ValidationError("simulate: horizon must be positive");
  if (cfg.population.rows() != T || cfg.population.cols() != S) {
    throw ValidationError("simulate: population matrix must be T x S");
  }
  if ((cfg.population.array() <= 0.0).any()) {
    throw ValidationError("simulate: population sizes must be positive");
  }
  if (cfg.init.mean.size() != p) {
    throw ValidationError("simulate: initial state dimension does not match the specification");
  }

  const NeighborhoodMatrix nb = build_neighborhood_matrix(cfg.graph);
  const Eigen::MatrixXd evo = evolution_matrix(cfg.spec, cfg.hyper, cfg.graph);
  const int blocks = n_field_blocks(cfg.spec.family);

  Rng rng(cfg.seed);
  SimulatedData out;
  out.beta_path.resize(T + 1, p);
  out.obs.counts.resize(T, S);
  out.obs.population = cfg.population;

  Eigen::VectorXd beta;
  if (cfg.deterministic_latent) {
    beta = cfg.init.mean;
  } else {
    beta = mvn_sample(cfg.init.mean, cfg.init.cov, rng, "simulate: initial covariance");
  }
  out.beta_path.row(0) = beta.transpose();

  for (int t = 1; t <= T; ++t) {
    beta = evo * beta;
    if (!cfg.deterministic_latent) {
      for (int b = 0; b < blocks; ++b) {
        const double phi =
            cfg.spec.innovations == Innovations::Spatial ? cfg.hyper.phi[b] : 0.0;
        beta.segment(b * S, S) += pgmrf_sample(nb, {cfg.hyper.tau[b], phi}, rng);
      }
      if (has_common_gradient(cfg.spec.family)) {
        beta[p - 1] += draw_normal(rng) / std::sqrt(cfg.hyper.psi.value());
      }
    }
    out.beta_path.row(t) = beta.transpose();

    for (int s = 0; s < S; ++s) {
      const double theta = beta[s];
      if (std::abs(theta) > cfg.clamp_window) {
        std::ostringstream msg;
        msg << "simulate: log risk " << theta << " at (t=" << t << ", s=" << s + 1
            << ") exceeds the overflow window " << cfg.clamp_window
            << "; rescale the hyperparameters or the initial level";
        throw NumericalError(msg.str());
      }
      const double mean = cfg.population(t - 1, s) * std::exp(theta);
      if (mean > 1e12) {
        throw NumericalError("simulate: Poisson mean overflow at (t=" + std::to_string(t) +
                             ", s=" + std::to_string(s + 1) + "); rescale the parameters");
      }
      out.obs.counts(t - 1, s) = static_cast<double>(draw_poisson(mean, rng));
    }
  }
  return out;
}

namespace {

constexpr int kOracleLimit = 200;

void check_oracle_inputs(const std::vector<SystemMatrices>& sys, const StateBelief& init,
                         const std::vector<GaussianObs>& obs) {
  if (sys.empty()) throw ValidationError("oracle: need at least one time step");
  const int p = sys[0].p;
  const int T = static_cast<int>(sys.size());
  if ((T + 1) * p > kOracleLimit) {
    throw ValidationError("oracle: joint dimension " + std::to_string((T + 1) * p) +
                          " exceeds the small-system guard " + std::to_string(kOracleLimit));
  }
  if (init.mean.size() != p) throw ValidationError("oracle: init dimension mismatch");
  if (!obs.empty() && static_cast<int>(obs.size()) != T) {
    throw ValidationError("oracle: observation sequence length must match the horizon");
  }
  for (const auto& s : sys) {
    if (s.p != p) throw ValidationError("oracle: time-varying state dimension not supported");
  }
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> assemble_joint(const std::vector<SystemMatrices>& sys,
                                                           const StateBelief& init,
                                                           const std::vector<GaussianObs>& obs,
                                                           int upto) {
  const int p = sys[0].p;
  const int dim = (upto + 1) * p;
  Eigen::MatrixXd prec = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(dim);

  const Eigen::MatrixXd c0_inv = spd_inverse(init.cov, "oracle: initial covariance");
  prec.topLeftCorner(p, p) += c0_inv;
  shift.head(p) += c0_inv * init.mean;

  for (int t = 1; t <= upto; ++t) {
    const SystemMatrices& s = sys[t - 1];
    const Eigen::MatrixXd gw = s.G.transpose() * s.W_inv;
    prec.block((t - 1) * p, (t - 1) * p, p, p) += gw * s.G;
    prec.block((t - 1) * p, t * p, p, p) -= gw;
    prec.block(t * p, (t - 1) * p, p, p) -= gw.transpose();
    prec.block(t * p, t * p, p, p) += s.W_inv;

    if (!obs.empty()) {
      const GaussianObs& o = obs[t - 1];
      if (o.y.size() != s.n_regions || o.precision_diag.size() != s.n_regions) {
        throw ValidationError("oracle: observation dimension mismatch at t=" + std::to_string(t));
      }
      prec.block(t * p, t * p, p, p) +=
          s.F * o.precision_diag.asDiagonal() * s.F.transpose();
      shift.segment(t * p, p) += s.F * o.precision_diag.cwiseProduct(o.y);
    }
  }
  return {symmetrized(prec), shift};
}

// Smoothed marginals of the first (upto+1) states given observations 1..upto.
std::vector<StateBelief> solve_prefix(const std::vector<SystemMatrices>& sys,
                                      const StateBelief& init,
                                      const std::vector<GaussianObs>& obs, int upto) {
  const int p = sys[0].p;
  const auto [prec, shift] = assemble_joint(sys, init, obs, upto);
  const Eigen::MatrixXd cov = spd_inverse(prec, "oracle: joint precision");
  const Eigen::VectorXd mean = cov * shift;

  std::vector<StateBelief> out(upto + 1);
  for (int t = 0; t <= upto; ++t) {
    out[t].mean = mean.segment(t * p, p);
    out[t].cov = cov.block(t * p, t * p, p, p);
  }
  return out;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::VectorXd> oracle_joint_precision(
    const std::vector<SystemMatrices>& sys, const StateBelief& init,
    const std::vector<GaussianObs>& obs) {
  check_oracle_inputs(sys, init, obs);
  return assemble_joint(sys, init, obs, static_cast<int>(sys.size()));
}

std::vector<StateBelief> dense_joint_oracle(const std::vector<SystemMatrices>& sys,
                                            const StateBelief& init,
                                            const std::vector<GaussianObs>& obs) {
  check_oracle_inputs(sys, init, obs);
  return solve_prefix(sys, init, obs, static_cast<int>(sys.size()));
}

std::vector<StateBelief> dense_joint_oracle_filtered(const std::vector<SystemMatrices>& sys,
                                                     const StateBelief& init,
                                                     const std::vector<GaussianObs>& obs) {
  check_oracle_inputs(sys, init, obs);
  const int T = static_cast<int>(sys.size());
  std::vector<StateBelief> out(T + 1);
  out[0] = init;
  for (int t = 1; t <= T; ++t) {
    std::vector<GaussianObs> prefix_obs;
    if (!obs.empty()) prefix_obs.assign(obs.begin(), obs.begin() + t);
    out[t] = solve_prefix(sys, init, prefix_obs, t).back();
  }
  return out;
}

}  // namespace stpoisson

#include "stpoisson/effbs.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace stpoisson {

void validate_observation(const Observation& obs) {
  const int T = obs.horizon();
  const int S = obs.n_regions();
  if (T < 1 || S < 1) throw ValidationError("observation: empty panel");
  if (obs.population.rows() != T || obs.population.cols() != S) {
    throw ValidationError("observation: population dimensions do not match counts");
  }
  const bool has_mask = obs.missing.size() > 0;
  if (has_mask && (obs.missing.rows() != T || obs.missing.cols() != S)) {
    throw ValidationError("observation: missingness mask dimensions do not match counts");
  }
  for (int t = 0; t < T; ++t) {
    for (int s = 0; s < S; ++s) {
      if (!(obs.population(t, s) > 0.0)) {
        std::ostringstream msg;
        msg << "observation: population must be positive at (t=" << t + 1 << ", s=" << s + 1
            << "), got " << obs.population(t, s);
        throw ValidationError(msg.str());
      }
      if (has_mask && obs.missing(t, s)) continue;
      const double y = obs.counts(t, s);
      if (!(y >= 0.0) || y != std::floor(y)) {
        std::ostringstream msg;
        msg << "observation: counts must be nonnegative integers at (t=" << t + 1
            << ", s=" << s + 1 << "), got " << y;
        throw ValidationError(msg.str());
      }
    }
  }
}

LinearizedObs linearize_observation(const Eigen::VectorXd& y, const Eigen::VectorXd& n,
                                    const Eigen::VectorXd& theta_hat, double clamp_window) {
  if (y.size() != n.size() || y.size() != theta_hat.size()) {
    throw ValidationError("linearize_observation: dimension mismatch");
  }
  LinearizedObs out;
  out.y_hat.resize(y.size());
  out.v_inv.resize(y.size());
  for (Eigen::Index s = 0; s < y.size(); ++s) {
    double th = theta_hat[s];
    if (th > clamp_window || th < -clamp_window) {
      th = std::clamp(th, -clamp_window, clamp_window);
      ++out.clamped;
    }
    const double fitted = n[s] * std::exp(th);  // f(th) = f'(th) = Var
    out.y_hat[s] = (y[s] - fitted) / fitted + th;
    out.v_inv[s] = fitted;
  }
  return out;
}

Linearizer poisson_linearizer(double clamp_window) {
  return [clamp_window](const Eigen::VectorXd& y, const Eigen::VectorXd& n,
                        const Eigen::VectorXd& theta_hat) {
    return linearize_observation(y, n, theta_hat, clamp_window);
  };
}

Linearizer gaussian_identity_linearizer(double obs_precision) {
  return [obs_precision](const Eigen::VectorXd& y, const Eigen::VectorXd&,
                         const Eigen::VectorXd&) {
    LinearizedObs out;
    out.y_hat = y;
    out.v_inv = Eigen::VectorXd::Constant(y.size(), obs_precision);
    return out;
  };
}

Linearizer zero_information_linearizer() {
  return [](const Eigen::VectorXd& y, const Eigen::VectorXd&, const Eigen::VectorXd&) {
    LinearizedObs out;
    out.y_hat = Eigen::VectorXd::Zero(y.size());
    out.v_inv = Eigen::VectorXd::Zero(y.size());
    return out;
  };
}

FilterOutput forward_filter(const Eigen::MatrixXd& y, const Eigen::MatrixXd& n,
                            const SystemMatrices& sys, const StateBelief& init,
                            const Linearizer& lin, const MissingMask* missing) {
  const int T = static_cast<int>(y.rows());
  const int S = sys.n_regions;
  if (y.cols() != S || n.rows() != T || n.cols() != S) {
    throw ValidationError("forward_filter: panel dimensions do not match the system");
  }
  if (init.mean.size() != sys.p || init.cov.rows() != sys.p || init.cov.cols() != sys.p) {
    throw ValidationError("forward_filter: initial belief dimension does not match the system");
  }

  FilterOutput out;
  out.priors.reserve(T + 1);
  out.posteriors.reserve(T + 1);
  out.priors.push_back(init);
  out.posteriors.push_back(init);

  for (int t = 1; t <= T; ++t) {
    const auto tag = [t](const char* name) {
      return std::string(name) + " at t=" + std::to_string(t);
    };
    const StateBelief& prev = out.posteriors.back();
    StateBelief prior;
    prior.mean = sys.G * prev.mean;
    prior.cov = symmetrized(sys.G * prev.cov * sys.G.transpose() + sys.W);

    const Eigen::VectorXd theta_hat = sys.F.transpose() * prior.mean;
    LinearizedObs obs = lin(y.row(t - 1).transpose(), n.row(t - 1).transpose(), theta_hat);
    out.clamp_events += obs.clamped;
    if (missing != nullptr && missing->size() > 0) {
      for (int s = 0; s < S; ++s) {
        if ((*missing)(t - 1, s)) {
          obs.v_inv[s] = 0.0;
          obs.y_hat[s] = 0.0;
        }
      }
    }

    const Eigen::MatrixXd prior_prec = spd_inverse(prior.cov, tag("prior covariance R"));
    const Eigen::MatrixXd post_prec =
        prior_prec + sys.F * obs.v_inv.asDiagonal() * sys.F.transpose();
    StateBelief post;
    post.cov = spd_inverse(post_prec, tag("posterior precision"));
    post.mean = post.cov * (sys.F * obs.v_inv.cwiseProduct(obs.y_hat) + prior_prec * prior.mean);

    out.priors.push_back(std::move(prior));
    out.posteriors.push_back(std::move(post));
  }
  return out;
}

FilterOutput forward_filter(const Observation& obs, const SystemMatrices& sys,
                            const StateBelief& init, double clamp_window) {
  validate_observation(obs);
  const MissingMask* mask = obs.missing.size() > 0 ? &obs.missing : nullptr;
  return forward_filter(obs.counts, obs.population, sys, init, poisson_linearizer(clamp_window),
                        mask);
}

BackwardSampler::BackwardSampler(const FilterOutput& filt, const SystemMatrices& sys) {
  horizon_ = filt.horizon();
  p_ = sys.p;
  if (horizon_ < 1) throw ValidationError("backward sampler: empty filter output");

  last_mean_ = filt.posteriors[horizon_].mean;
  last_cov_ = filt.posteriors[horizon_].cov;
  last_chol_ = spd_cholesky(last_cov_, "smoothing covariance at t=T").matrixL();

  gain_.resize(horizon_);
  offset_.resize(horizon_);
  cov_.resize(horizon_);
  chol_.resize(horizon_);
  const Eigen::MatrixXd gwg = sys.G.transpose() * sys.W_inv * sys.G;
  const Eigen::MatrixXd gw = sys.G.transpose() * sys.W_inv;
  for (int t = horizon_ - 1; t >= 0; --t) {
    const auto tag = [t](const char* name) {
      return std::string(name) + " at t=" + std::to_string(t);
    };
    const StateBelief& post = filt.posteriors[t];
    const Eigen::MatrixXd post_prec = spd_inverse(post.cov, tag("filtered covariance C"));
    cov_[t] = spd_inverse(symmetrized(post_prec + gwg), tag("smoothing precision"));
    gain_[t] = cov_[t] * gw;
    offset_[t] = cov_[t] * (post_prec * post.mean);
    chol_[t] = spd_cholesky(cov_[t], tag("smoothing covariance B")).matrixL();
  }
}

Eigen::MatrixXd BackwardSampler::draw(Rng& rng) const {
  Eigen::MatrixXd path(horizon_ + 1, p_);
  Eigen::VectorXd state = last_mean_ + last_chol_ * draw_std_normal(p_, rng);
  path.row(horizon_) = state.transpose();
  for (int t = horizon_ - 1; t >= 0; --t) {
    state = gain_[t] * state + offset_[t] + chol_[t] * draw_std_normal(p_, rng);
    path.row(t) = state.transpose();
  }
  return path;
}

StateBelief BackwardSampler::conditional(int t, const Eigen::VectorXd& beta_next) const {
  if (t < 0 || t >= horizon_) throw ValidationError("backward sampler: t out of range");
  return StateBelief{gain_[t] * beta_next + offset_[t], cov_[t]};
}

Eigen::MatrixXd backward_sample(const FilterOutput& filt, const SystemMatrices& sys, Rng& rng) {
  return BackwardSampler(filt, sys).draw(rng);
}

std::vector<StateBelief> smoothed_moments(const FilterOutput& filt, const SystemMatrices& sys) {
  const BackwardSampler bs(filt, sys);
  const int T = filt.horizon();
  std::vector<StateBelief> out(T + 1);
  out[T] = filt.posteriors[T];
  for (int t = T - 1; t >= 0; --t) {
    const StateBelief cond = bs.conditional(t, out[t + 1].mean);
    const Eigen::MatrixXd& k = bs.gain(t);
    out[t].mean = cond.mean;
    out[t].cov = symmetrized(cond.cov + k * out[t + 1].cov * k.transpose());
  }
  return out;
}

double poisson_log_lik(const Eigen::VectorXd& y, const Eigen::VectorXd& n,
                       const Eigen::VectorXd& theta, const BoolArray* missing) {
  if (y.size() != n.size() || y.size() != theta.size()) {
    throw ValidationError("poisson_log_lik: dimension mismatch");
  }
  double ll = 0.0;
  for (Eigen::Index s = 0; s < y.size(); ++s) {
    if (missing != nullptr && missing->size() > 0 && (*missing)[s]) continue;
    const double log_mean = theta[s] + std::log(n[s]);
    ll += y[s] * log_mean - std::exp(log_mean) - std::lgamma(y[s] + 1.0);
  }
  return ll;
}

double approx_log_lik(const Eigen::VectorXd& y, const Eigen::VectorXd& n,
                      const Eigen::VectorXd& theta_hat, const Eigen::VectorXd& theta) {
  if (y.size() != n.size() || y.size() != theta_hat.size() || y.size() != theta.size()) {
    throw ValidationError("approx_log_lik: dimension mismatch");
  }
  double ll = 0.0;
  for (Eigen::Index s = 0; s < y.size(); ++s) {
    const double fitted = n[s] * std::exp(theta_hat[s]);
    const double resid = y[s] - fitted + fitted * (theta_hat[s] - theta[s]);
    ll += -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(fitted) + resid * resid / fitted);
  }
  return ll;
}

}  // namespace stpoisson

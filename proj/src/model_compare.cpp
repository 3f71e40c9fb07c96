#include "stpoisson/model_compare.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "stpoisson/linalg.hpp"

namespace stpoisson {

namespace {

// Jackknife standard error of log(mean(exp(l))) from the per-draw log terms.
double jackknife_se(const Eigen::VectorXd& log_terms, double lse_total) {
  const Eigen::Index g = log_terms.size();
  if (g < 2) return 0.0;
  Eigen::VectorXd loo(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    const double frac = std::exp(log_terms[i] - lse_total);
    if (frac >= 1.0) {
      // one draw carries the whole sum; the jackknife is uninformative
      return std::numeric_limits<double>::infinity();
    }
    loo[i] = lse_total + std::log1p(-frac) - std::log(static_cast<double>(g - 1));
  }
  const double mean = loo.mean();
  const double ss = (loo.array() - mean).square().sum();
  return std::sqrt(ss * (g - 1.0) / g);
}

}  // namespace

OneStepEstimate one_step_predictive(const Eigen::VectorXd& y_t, const Eigen::VectorXd& n_t,
                                    const PredictiveDraws& draws, const SpecId& spec,
                                    const RegionGraph& graph, const NeighborhoodMatrix& nb,
                                    Rng& rng, const BoolArray* missing) {
  const int g = static_cast<int>(draws.last_state.rows());
  if (g < 1) throw ValidationError("one_step_predictive: need at least one posterior draw");
  if (static_cast<int>(draws.hyper.size()) != g) {
    throw ValidationError("one_step_predictive: draw counts disagree");
  }
  const int S = graph.n_regions;
  const int p = latent_dimension(spec, S);
  if (draws.last_state.cols() != p || y_t.size() != S || n_t.size() != S) {
    throw ValidationError("one_step_predictive: dimension mismatch");
  }

  const int blocks = n_field_blocks(spec.family);
  Eigen::VectorXd log_terms(g);
  for (int i = 0; i < g; ++i) {
    const HyperParams& hyper = draws.hyper[i];
    const Eigen::MatrixXd evo = evolution_matrix(spec, hyper, graph);
    Eigen::VectorXd beta = evo * draws.last_state.row(i).transpose();
    for (int b = 0; b < blocks; ++b) {
      const double phi = spec.innovations == Innovations::Spatial ? hyper.phi[b] : 0.0;
      beta.segment(b * S, S) += pgmrf_sample(nb, {hyper.tau[b], phi}, rng);
    }
    if (has_common_gradient(spec.family)) {
      beta[p - 1] += draw_normal(rng) / std::sqrt(hyper.psi.value());
    }
    log_terms[i] = poisson_log_lik(y_t, n_t, beta.head(S), missing);
  }

  const double lse = log_sum_exp(log_terms);
  if (!std::isfinite(lse)) {
    throw NumericalError("one_step_predictive: all likelihood terms vanished");
  }
  OneStepEstimate out;
  out.log_pred = lse - std::log(static_cast<double>(g));
  out.se = jackknife_se(log_terms, lse);
  return out;
}

ModelPredictive joint_log_predictive(const Observation& obs, const SpecId& spec,
                                     const RegionGraph& graph, const NeighborhoodMatrix& nb,
                                     const PriorConfig& priors, const McmcOptions& step_opts,
                                     int t_star, std::uint64_t seed) {
  validate_observation(obs);
  const int T = obs.horizon();
  if (t_star < 1 || t_star >= T) {
    throw ValidationError("joint_log_predictive: training size must satisfy 1 <= t* < T, got " +
                          std::to_string(t_star) + " with T = " + std::to_string(T));
  }

  McmcOptions opts = step_opts;
  opts.record_last_state = true;
  opts.latent_thin = 0;
  opts.monitor_latent.clear();

  ModelPredictive out;
  out.spec = spec;
  out.t_star = t_star;
  out.joint_log_pred = 0.0;
  for (int t = t_star + 1; t <= T; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    Observation window;
    window.counts = obs.counts.topRows(t - 1);
    window.population = obs.population.topRows(t - 1);
    if (obs.missing.size() > 0) window.missing = obs.missing.topRows(t - 1);

    Trace trace;
    try {
      trace = run_chain(window, spec, graph, nb, priors, opts, rng);
    } catch (const NumericalError& err) {
      throw NumericalError("predictive run for time " + std::to_string(t) + ": " + err.what());
    }

    PredictiveDraws draws;
    draws.last_state = trace.last_state;
    draws.hyper.reserve(trace.kept());
    for (int k = 0; k < trace.kept(); ++k) {
      draws.hyper.push_back(hyper_from_row(spec, trace.hyper.row(k).transpose()));
    }

    BoolArray mask;
    const BoolArray* mask_ptr = nullptr;
    if (obs.missing.size() > 0) {
      mask = obs.missing.row(t - 1).transpose();
      mask_ptr = &mask;
    }
    StepEstimate step;
    step.t = t;
    step.estimate =
        one_step_predictive(obs.counts.row(t - 1).transpose(), obs.population.row(t - 1).transpose(),
                            draws, spec, graph, nb, rng, mask_ptr);
    out.joint_log_pred += step.estimate.log_pred;
    out.steps.push_back(step);
  }
  return out;
}

Eigen::MatrixXd bayes_factor_matrix(const Eigen::VectorXd& joint_log_predictives) {
  const Eigen::Index q = joint_log_predictives.size();
  Eigen::MatrixXd bf(q, q);
  for (Eigen::Index m = 0; m < q; ++m) {
    for (Eigen::Index n = 0; n < q; ++n) {
      bf(m, n) = joint_log_predictives[m] - joint_log_predictives[n];
    }
  }
  return bf;
}

PredictiveReport make_predictive_report(std::vector<ModelPredictive> models) {
  if (models.empty()) throw ValidationError("predictive report: no models");
  PredictiveReport report;
  report.t_star = models.front().t_star;
  for (const auto& model : models) {
    if (model.t_star != report.t_star) {
      throw ValidationError("predictive report: models were evaluated with different training "
                            "windows (" +
                            std::to_string(model.t_star) + " vs " +
                            std::to_string(report.t_star) + ")");
    }
  }
  Eigen::VectorXd joints(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) joints[i] = models[i].joint_log_pred;
  report.log_bf = bayes_factor_matrix(joints);
  report.models = std::move(models);
  return report;
}

}  // namespace stpoisson

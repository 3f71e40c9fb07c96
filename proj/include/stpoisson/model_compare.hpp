#ifndef STPOISSON_MODEL_COMPARE_HPP
#define STPOISSON_MODEL_COMPARE_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "stpoisson/mcmc.hpp"

namespace stpoisson {

/// Posterior draws of (beta_{t-1}, hyperparameters) given data through t-1;
/// one row of last_state per draw.
struct PredictiveDraws {
  Eigen::MatrixXd last_state;       // G x p
  std::vector<HyperParams> hyper;   // size G
};

struct OneStepEstimate {
  double log_pred = 0.0;
  double se = 0.0;  // jackknife standard error of log_pred
};

/// Monte Carlo one-step-ahead predictive density: for each posterior draw,
/// one evolution-equation draw of beta_t followed by the exact Poisson
/// likelihood of y_t, averaged with log-sum-exp stabilization.
OneStepEstimate one_step_predictive(const Eigen::VectorXd& y_t, const Eigen::VectorXd& n_t,
                                    const PredictiveDraws& draws, const SpecId& spec,
                                    const RegionGraph& graph, const NeighborhoodMatrix& nb,
                                    Rng& rng, const BoolArray* missing = nullptr);

struct StepEstimate {
  int t = 0;  // 1-based time index of the predicted slice
  OneStepEstimate estimate;
};

struct ModelPredictive {
  SpecId spec;
  int t_star = 0;
  std::vector<StepEstimate> steps;  // t = t_star+1 .. T
  double joint_log_pred = 0.0;      // sum of per-step log estimates
};

/// Joint log predictive density over t = t_star+1..T: for each t, a fresh
/// MCMC run on the data through t-1 (budgeted by step_opts, seeded with
/// mix_seed(seed, t) so sub-windows reproduce) followed by
/// one_step_predictive.
ModelPredictive joint_log_predictive(const Observation& obs, const SpecId& spec,
                                     const RegionGraph& graph, const NeighborhoodMatrix& nb,
                                     const PriorConfig& priors, const McmcOptions& step_opts,
                                     int t_star, std::uint64_t seed);

/// log B_mn = joint_m - joint_n; antisymmetric with a zero diagonal.
Eigen::MatrixXd bayes_factor_matrix(const Eigen::VectorXd& joint_log_predictives);

struct PredictiveReport {
  std::vector<ModelPredictive> models;
  Eigen::MatrixXd log_bf;
  int t_star = 0;
};

/// Builds the pairwise matrix, rejecting models evaluated on different
/// training windows.
PredictiveReport make_predictive_report(std::vector<ModelPredictive> models);

}  // namespace stpoisson

#endif

#ifndef STPOISSON_COMMANDS_HPP
#define STPOISSON_COMMANDS_HPP

#include <string>
#include <vector>

#include "stpoisson/dataset.hpp"
#include "stpoisson/model_compare.hpp"
#include "stpoisson/run_config.hpp"
#include "stpoisson/simulate.hpp"

namespace stpoisson {

struct FitResult {
  std::vector<Trace> chains;
  std::vector<PsrfEntry> diagnostics;
  std::vector<std::string> files;
};

struct CompareResult {
  PredictiveReport report;
  std::vector<std::string> files;
};

struct SimulateResult {
  SimulatedData data;
  std::vector<std::string> files;
};

/// Runs the configured number of chains (prior-drawn starting points,
/// seed-streamed per chain, optionally in parallel) and writes the trace,
/// diagnostic, posterior-summary, common-gradient, and fitted-risk CSVs.
FitResult fit_command(const RunConfig& cfg);

/// Evaluates the joint one-step-ahead predictive of each configured model
/// over t > t_star and writes the per-step, totals, pairwise-matrix, and
/// families-by-innovations Bayes factor CSVs.
CompareResult compare_command(const RunConfig& cfg);

/// Forward-generates a dataset and writes it in the ingestion format; the
/// latent path and generating hyperparameters are written only when
/// sim_write_truth is set.
SimulateResult simulate_command(const RunConfig& cfg);

/// Recomputes scale-reduction diagnostics from existing trace CSVs.
std::vector<PsrfEntry> diagnose_command(const RunConfig& cfg);

/// Trace CSV round trip used by fit and diagnose.
void write_trace_csv(const std::string& path, const RunConfig& cfg, int chain_index,
                     const Trace& trace);
std::pair<Eigen::MatrixXd, std::vector<std::string>> read_trace_csv(const std::string& path);

/// Linear-interpolation quantile of an unsorted sample.
double sample_quantile(std::vector<double> values, double q);

/// Exit-code policy: ValidationError 2, NumericalError 3, IoError 4, else 1.
int exit_code_for(const std::exception& err);

}  // namespace stpoisson

#endif

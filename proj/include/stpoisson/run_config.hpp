#ifndef STPOISSON_RUN_CONFIG_HPP
#define STPOISSON_RUN_CONFIG_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stpoisson/mcmc.hpp"
#include "stpoisson/model_spec.hpp"

namespace stpoisson {

/// Flat view of a "[section] / key = value" config file; keys are stored as
/// "section.key". '#' and ';' start comments.
class ConfigMap {
public:
  ConfigMap() = default;
  static ConfigMap from_file(const std::string& path);
  static ConfigMap from_string(const std::string& text, const std::string& origin = "<config>");

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

private:
  std::map<std::string, std::string> entries_;
};

/// Everything a command needs to run; parsed from the config file and then
/// overridden by command-line flags.
struct RunConfig {
  // data
  std::string counts_path;
  std::string populations_path;
  std::string adjacency_path;
  std::optional<std::string> across_adjacency_path;

  // model (fit) and model list (compare)
  SpecId spec;
  std::vector<SpecId> models;
  int baseline_model = 0;

  // priors
  double tau_shape = 1.0, tau_rate = 1.0;
  double phi_upper = 100.0;
  double psi_shape = 16.0, psi_rate = 0.1;
  double init_field_mean = -16.25;
  bool init_field_mean_auto = false;  // log(1 / total population in the first time row)
  double init_field_sd = 1.0;
  double init_gradient_sd = 1.0;

  McmcOptions mcmc;
  int monitor_latent_count = 4;

  // compare
  int t_star = -1;
  McmcOptions compare_mcmc;

  // simulate
  std::optional<SpecId> sim_spec;
  std::map<std::string, double> sim_hyper;  // tau1, phi1, tau2, phi2, kappa, psi
  int sim_horizon = 0;
  double sim_population = 0.0;  // constant population; or a file
  std::optional<std::string> sim_population_path;
  double sim_init_field_mean = -16.25;
  double sim_init_field_sd = 1.0;
  // A unit-variance gradient start drifts by e^{+-T} over the horizon;
  // generation defaults to a modest one.
  double sim_init_gradient_sd = 0.1;
  bool sim_write_truth = false;

  // diagnose
  std::vector<std::string> trace_paths;

  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;

  /// Canonical "key = value" listing; hashed into every report header.
  std::string canonical_string() const;
  std::uint64_t config_hash() const;
};

RunConfig parse_run_config(const ConfigMap& cfg);

std::vector<SpecId> parse_model_list(const std::string& csv_tokens);

}  // namespace stpoisson

#endif

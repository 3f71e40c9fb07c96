#include "stpoisson/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "stpoisson/csv.hpp"

namespace stpoisson {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str(), path);
}

ConfigMap ConfigMap::from_string(const std::string& text, const std::string& origin) {
  ConfigMap cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    cfg.set(section.empty() ? key : section + "." + key, value);
  }
  return cfg;
}

void ConfigMap::set(const std::string& key, const std::string& value) { entries_[key] = value; }

bool ConfigMap::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string ConfigMap::get_string(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ValidationError("config: missing required key '" + key + "'");
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config: key '" + key + "' is not numeric: '" + it->second + "'");
  }
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config: key '" + key + "' is not an integer: '" + it->second + "'");
  }
}

std::uint64_t ConfigMap::get_uint64(const std::string& key, std::uint64_t fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ValidationError("config: key '" + key + "' is not an integer: '" + it->second + "'");
  }
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ValidationError("config: key '" + key + "' is not a boolean: '" + it->second + "'");
}

std::vector<SpecId> parse_model_list(const std::string& csv_tokens) {
  std::vector<SpecId> models;
  std::istringstream in(csv_tokens);
  std::string token;
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (!token.empty()) models.push_back(parse_spec_token(token));
  }
  return models;
}

RunConfig parse_run_config(const ConfigMap& cfg) {
  RunConfig rc;
  rc.counts_path = cfg.get_string("data.counts", "");
  rc.populations_path = cfg.get_string("data.populations", "");
  rc.adjacency_path = cfg.get_string("data.adjacency", "");
  if (cfg.has("data.across_adjacency")) {
    rc.across_adjacency_path = cfg.get_string("data.across_adjacency");
  }

  rc.spec.family = parse_family(cfg.get_string("model.family", "order1"));
  rc.spec.innovations = parse_innovations(cfg.get_string("model.innovations", "spatial"));

  rc.tau_shape = cfg.get_double("priors.tau_shape", 1.0);
  rc.tau_rate = cfg.get_double("priors.tau_rate", 1.0);
  rc.phi_upper = cfg.get_double("priors.phi_upper", 100.0);
  rc.psi_shape = cfg.get_double("priors.psi_shape", 16.0);
  rc.psi_rate = cfg.get_double("priors.psi_rate", 0.1);
  const std::string init_mean = cfg.get_string("priors.init_field_mean", "-16.25");
  if (init_mean == "auto") {
    rc.init_field_mean_auto = true;
  } else {
    rc.init_field_mean = cfg.get_double("priors.init_field_mean", -16.25);
  }
  rc.init_field_sd = cfg.get_double("priors.init_field_sd", 1.0);
  rc.init_gradient_sd = cfg.get_double("priors.init_gradient_sd", 1.0);

  rc.mcmc.n_iter = cfg.get_int("mcmc.iterations", 20000);
  rc.mcmc.burn_in = cfg.get_int("mcmc.burn_in", 10000);
  rc.mcmc.n_chains = cfg.get_int("mcmc.chains", 2);
  rc.mcmc.latent_thin = cfg.get_int("mcmc.latent_thin", 10);
  rc.mcmc.rw_scale_log_phi = cfg.get_double("mcmc.rw_log_phi", 0.5);
  rc.mcmc.rw_scale_logit_kappa = cfg.get_double("mcmc.rw_logit_kappa", 0.5);
  rc.mcmc.adapt_during_burn_in = cfg.get_bool("mcmc.adapt", false);
  rc.mcmc.random_scan = cfg.get_bool("mcmc.random_scan", false);
  rc.mcmc.clamp_window = cfg.get_double("mcmc.clamp_window", 40.0);
  rc.monitor_latent_count = cfg.get_int("mcmc.monitor_latent", 4);

  if (cfg.has("compare.models")) rc.models = parse_model_list(cfg.get_string("compare.models"));
  if (cfg.has("compare.baseline")) {
    const SpecId baseline = parse_spec_token(cfg.get_string("compare.baseline"));
    rc.baseline_model = -1;
    for (std::size_t i = 0; i < rc.models.size(); ++i) {
      if (spec_token(rc.models[i]) == spec_token(baseline)) {
        rc.baseline_model = static_cast<int>(i);
      }
    }
    if (rc.baseline_model < 0) {
      throw ValidationError("config: compare.baseline is not in compare.models");
    }
  }
  rc.t_star = cfg.get_int("compare.t_star", -1);
  rc.compare_mcmc = rc.mcmc;
  rc.compare_mcmc.n_iter = cfg.get_int("compare.iterations", 8000);
  rc.compare_mcmc.burn_in = cfg.get_int("compare.burn_in", 4000);
  rc.compare_mcmc.n_chains = 1;

  if (cfg.has("simulate.family")) {
    SpecId sim;
    sim.family = parse_family(cfg.get_string("simulate.family"));
    sim.innovations = parse_innovations(cfg.get_string("simulate.innovations", "spatial"));
    rc.sim_spec = sim;
  }
  for (const char* key : {"tau1", "phi1", "tau2", "phi2", "kappa", "psi"}) {
    if (cfg.has(std::string("simulate.") + key)) {
      rc.sim_hyper[key] = cfg.get_double(std::string("simulate.") + key, 0.0);
    }
  }
  rc.sim_horizon = cfg.get_int("simulate.horizon", 0);
  rc.sim_population = cfg.get_double("simulate.population", 0.0);
  if (cfg.has("simulate.population_file")) {
    rc.sim_population_path = cfg.get_string("simulate.population_file");
  }
  rc.sim_init_field_mean = cfg.get_double("simulate.init_field_mean", -16.25);
  rc.sim_init_field_sd = cfg.get_double("simulate.init_field_sd", 1.0);
  rc.sim_init_gradient_sd = cfg.get_double("simulate.init_gradient_sd", 0.1);
  rc.sim_write_truth = cfg.get_bool("simulate.write_truth", false);

  rc.out_dir = cfg.get_string("run.out", ".");
  rc.seed = cfg.get_uint64("run.seed", 0);
  rc.threads = cfg.get_int("run.threads", 1);
  if (rc.threads < 1) throw ValidationError("config: run.threads must be positive");
  return rc;
}

std::string RunConfig::canonical_string() const {
  std::ostringstream out;
  out << "counts=" << counts_path << "\npopulations=" << populations_path
      << "\nadjacency=" << adjacency_path
      << "\nacross_adjacency=" << (across_adjacency_path ? *across_adjacency_path : "")
      << "\nmodel=" << spec_token(spec) << "\nmodels=";
  for (const auto& m : models) out << spec_token(m) << ";";
  out << "\nbaseline=" << baseline_model << "\ntau_prior=" << tau_shape << "," << tau_rate
      << "\nphi_upper=" << phi_upper << "\npsi_prior=" << psi_shape << "," << psi_rate
      << "\ninit_field_mean=" << (init_field_mean_auto ? std::string("auto")
                                                       : format_double(init_field_mean))
      << "\ninit_field_sd=" << format_double(init_field_sd)
      << "\ninit_gradient_sd=" << format_double(init_gradient_sd)
      << "\niterations=" << mcmc.n_iter << "\nburn_in=" << mcmc.burn_in
      << "\nchains=" << mcmc.n_chains << "\nlatent_thin=" << mcmc.latent_thin
      << "\nrw_log_phi=" << format_double(mcmc.rw_scale_log_phi)
      << "\nrw_logit_kappa=" << format_double(mcmc.rw_scale_logit_kappa)
      << "\nadapt=" << mcmc.adapt_during_burn_in << "\nrandom_scan=" << mcmc.random_scan
      << "\nclamp_window=" << format_double(mcmc.clamp_window)
      << "\nmonitor_latent=" << monitor_latent_count << "\nt_star=" << t_star
      << "\ncompare_iterations=" << compare_mcmc.n_iter
      << "\ncompare_burn_in=" << compare_mcmc.burn_in
      << "\nsim=" << (sim_spec ? spec_token(*sim_spec) : "") << "\nsim_horizon=" << sim_horizon
      << "\nsim_population=" << format_double(sim_population)
      << "\nsim_init_field_mean=" << format_double(sim_init_field_mean)
      << "\nsim_init_field_sd=" << format_double(sim_init_field_sd)
      << "\nsim_init_gradient_sd=" << format_double(sim_init_gradient_sd)
      << "\nseed=" << seed;
  return out.str();
}

std::uint64_t RunConfig::config_hash() const { return fnv1a64(canonical_string()); }

}  // namespace stpoisson

#include "stpoisson/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "stpoisson/csv.hpp"
#include "stpoisson/version.hpp"

namespace stpoisson {

namespace {

namespace fs = std::filesystem;

std::vector<std::pair<std::string, std::string>> report_meta(const RunConfig& cfg) {
  std::ostringstream hash;
  hash << std::hex << cfg.config_hash();
  return {{"generator", std::string("stpoisson ") + kVersion},
          {"config_hash", hash.str()},
          {"seed", std::to_string(cfg.seed)}};
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

PriorConfig priors_from(const RunConfig& cfg, const SpecId& spec, int n_regions,
                        const Dataset* ds) {
  double field_mean = cfg.init_field_mean;
  if (cfg.init_field_mean_auto) {
    if (ds == nullptr) {
      throw ValidationError("priors: init_field_mean = auto needs a dataset");
    }
    field_mean = std::log(1.0 / ds->populations.row(0).sum());
  }
  PriorConfig priors;
  priors.init_state =
      make_init_state(spec, n_regions, field_mean, cfg.init_field_sd, cfg.init_gradient_sd);
  priors.tau_prior = {cfg.tau_shape, cfg.tau_rate};
  priors.phi_upper = cfg.phi_upper;
  priors.psi_prior = {cfg.psi_shape, cfg.psi_rate};
  return priors;
}

// A handful of latent coordinates spread over time and state dimension, for
// convergence monitoring.
std::vector<std::pair<int, int>> pick_monitor_coords(int horizon, int p, int count) {
  std::vector<std::pair<int, int>> coords;
  for (int j = 0; j < count; ++j) {
    const int t = static_cast<int>(std::lround((j + 0.5) / count * horizon));
    const int coord = static_cast<int>((static_cast<long>(j) * p) / std::max(count, 1));
    coords.emplace_back(std::min(t, horizon), std::min(coord, p - 1));
  }
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

void write_psrf_csv(const std::string& path, const RunConfig& cfg,
                    const std::vector<PsrfEntry>& entries) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : entries) {
    rows.push_back({e.name, e.result.degenerate ? "" : format_double(e.result.value),
                    e.result.degenerate ? "1" : "0"});
  }
  write_csv(path, report_meta(cfg), {"parameter", "psrf", "degenerate"}, rows);
}

}  // namespace

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * (static_cast<double>(values.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void write_trace_csv(const std::string& path, const RunConfig& cfg, int chain_index,
                     const Trace& trace) {
  auto meta = report_meta(cfg);
  meta.emplace_back("chain", std::to_string(chain_index + 1));
  meta.emplace_back("iterations", std::to_string(trace.n_iter));
  meta.emplace_back("burn_in", std::to_string(trace.burn_in));
  for (const auto& [name, rate] : trace.acceptance_rates) {
    meta.emplace_back("acceptance_" + name, format_double(rate));
  }
  if (trace.clamp_events > 0) {
    meta.emplace_back("warning", "linearization clamped " + std::to_string(trace.clamp_events) +
                                     " log-risk value(s)");
  }

  std::vector<std::string> header{"iteration"};
  header.insert(header.end(), trace.hyper_names.begin(), trace.hyper_names.end());
  header.insert(header.end(), trace.monitored_names.begin(), trace.monitored_names.end());

  std::vector<std::vector<std::string>> rows;
  rows.reserve(trace.kept());
  for (int k = 0; k < trace.kept(); ++k) {
    std::vector<std::string> row{std::to_string(trace.burn_in + k + 1)};
    for (Eigen::Index j = 0; j < trace.hyper.cols(); ++j) {
      row.push_back(format_double(trace.hyper(k, j)));
    }
    for (Eigen::Index j = 0; j < trace.monitored.cols(); ++j) {
      row.push_back(format_double(trace.monitored(k, j)));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, meta, header, rows);
}

std::pair<Eigen::MatrixXd, std::vector<std::string>> read_trace_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "iteration") {
    throw ValidationError(path + ": not a trace file (expected an 'iteration' column)");
  }
  const int cols = static_cast<int>(table.header.size()) - 1;
  const int rows = static_cast<int>(table.rows.size());
  std::vector<std::string> names(table.header.begin() + 1, table.header.end());
  Eigen::MatrixXd values(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(table.rows[r].size()) != cols + 1) {
      throw ValidationError(path + ": ragged row " + std::to_string(r + 2));
    }
    for (int c = 0; c < cols; ++c) {
      values(r, c) = parse_double(table.rows[r][c + 1], path, r + 2, c + 2);
    }
  }
  return {values, names};
}

FitResult fit_command(const RunConfig& cfg) {
  const Dataset ds = load_dataset(cfg.counts_path, cfg.populations_path);
  const RegionGraph graph =
      load_region_graph(cfg.adjacency_path, cfg.across_adjacency_path, ds.n_regions());
  const NeighborhoodMatrix nb = build_neighborhood_matrix(graph);
  const Observation obs = ds.observation();
  const PriorConfig priors = priors_from(cfg, cfg.spec, ds.n_regions(), &ds);

  McmcOptions opts = cfg.mcmc;
  const int p = latent_dimension(cfg.spec, ds.n_regions());
  if (cfg.monitor_latent_count > 0) {
    opts.monitor_latent = pick_monitor_coords(ds.horizon(), p, cfg.monitor_latent_count);
  }

  FitResult result;
  result.chains.resize(opts.n_chains);
  parallel_for(opts.n_chains, cfg.threads, [&](int c) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(c)));
    result.chains[c] = run_chain(obs, cfg.spec, graph, nb, priors, opts, rng);
    result.chains[c].seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(c));
  });

  for (int c = 0; c < opts.n_chains; ++c) {
    const std::string path = out_path(cfg, "trace_chain" + std::to_string(c + 1) + ".csv");
    write_trace_csv(path, cfg, c, result.chains[c]);
    result.files.push_back(path);
  }

  if (opts.n_chains >= 2) {
    result.diagnostics = gelman_rubin(result.chains);
    const std::string path = out_path(cfg, "psrf.csv");
    write_psrf_csv(path, cfg, result.diagnostics);
    result.files.push_back(path);
  }

  // Posterior summary over the pooled chains, the fitted-risk panel, and the
  // common-gradient trajectory where the family has one.
  {
    const auto& names = result.chains[0].hyper_names;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t j = 0; j < names.size(); ++j) {
      std::vector<double> pooled;
      for (const auto& trace : result.chains) {
        for (int k = 0; k < trace.kept(); ++k) pooled.push_back(trace.hyper(k, j));
      }
      const double mean =
          std::accumulate(pooled.begin(), pooled.end(), 0.0) / static_cast<double>(pooled.size());
      rows.push_back({names[j], format_double(mean), format_double(sample_quantile(pooled, 0.025)),
                      format_double(sample_quantile(pooled, 0.975))});
    }
    const std::string path = out_path(cfg, "posterior_summary.csv");
    write_csv(path, report_meta(cfg), {"parameter", "mean", "q025", "q975"}, rows);
    result.files.push_back(path);
  }

  std::vector<const Eigen::MatrixXd*> latent_draws;
  for (const auto& trace : result.chains) {
    for (const auto& path : trace.latent) latent_draws.push_back(&path);
  }

  if (!latent_draws.empty() && has_common_gradient(cfg.spec.family)) {
    std::vector<std::vector<std::string>> rows;
    for (int t = 1; t <= ds.horizon(); ++t) {
      std::vector<double> values;
      values.reserve(latent_draws.size());
      for (const auto* path : latent_draws) values.push_back((*path)(t, p - 1));
      const double mean =
          std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
      rows.push_back({ds.time_labels[t - 1], format_double(mean),
                      format_double(sample_quantile(values, 0.025)),
                      format_double(sample_quantile(values, 0.975))});
    }
    const std::string path = out_path(cfg, "common_gradient.csv");
    write_csv(path, report_meta(cfg), {"time", "mean", "q025", "q975"}, rows);
    result.files.push_back(path);
  }

  if (!latent_draws.empty()) {
    // Posterior mean of the risk per 100,000: E[1e5 exp(theta_ts)], averaged
    // over draws (not exp of the mean).
    Eigen::MatrixXd risk = Eigen::MatrixXd::Zero(ds.horizon(), ds.n_regions());
    for (const auto* path : latent_draws) {
      risk += (path->block(1, 0, ds.horizon(), ds.n_regions())).array().exp().matrix();
    }
    risk *= 1e5 / static_cast<double>(latent_draws.size());
    const std::string path = out_path(cfg, "fitted_risk.csv");
    write_panel_csv(path, report_meta(cfg), ds.time_labels, ds.region_labels, risk);
    result.files.push_back(path);
  }

  return result;
}

CompareResult compare_command(const RunConfig& cfg) {
  if (cfg.models.size() < 2) {
    throw ValidationError("compare: need at least two model tokens");
  }
  if (cfg.t_star < 1) {
    throw ValidationError("compare: t_star must be given (training window size, >= 1)");
  }
  const Dataset ds = load_dataset(cfg.counts_path, cfg.populations_path);
  const RegionGraph graph =
      load_region_graph(cfg.adjacency_path, cfg.across_adjacency_path, ds.n_regions());
  const NeighborhoodMatrix nb = build_neighborhood_matrix(graph);
  const Observation obs = ds.observation();

  const int q = static_cast<int>(cfg.models.size());
  std::vector<ModelPredictive> models(q);
  // Seed streams keyed by the model token so identical tokens reproduce
  // identical runs.
  parallel_for(q, cfg.threads, [&](int i) {
    const SpecId spec = cfg.models[i];
    const PriorConfig priors = priors_from(cfg, spec, ds.n_regions(), &ds);
    models[i] = joint_log_predictive(obs, spec, graph, nb, priors, cfg.compare_mcmc, cfg.t_star,
                                     mix_seed(cfg.seed, fnv1a64(spec_token(spec))));
  });

  CompareResult result;
  result.report = make_predictive_report(std::move(models));
  Eigen::VectorXd joints(q);
  for (int i = 0; i < q; ++i) joints[i] = result.report.models[i].joint_log_pred;

  auto meta = report_meta(cfg);
  meta.emplace_back("t_star", std::to_string(cfg.t_star));
  meta.emplace_back("per_step_iterations", std::to_string(cfg.compare_mcmc.n_iter));
  meta.emplace_back("per_step_burn_in", std::to_string(cfg.compare_mcmc.burn_in));

  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& model : result.report.models) {
      for (const auto& step : model.steps) {
        rows.push_back({spec_token(model.spec), std::to_string(step.t),
                        format_double(step.estimate.log_pred), format_double(step.estimate.se)});
      }
    }
    const std::string path = out_path(cfg, "predictive_steps.csv");
    write_csv(path, meta, {"model", "t", "log_predictive", "jackknife_se"}, rows);
    result.files.push_back(path);
  }

  {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < q; ++i) {
      rows.push_back({spec_token(cfg.models[i]), family_token(cfg.models[i].family),
                      innovations_token(cfg.models[i].innovations), format_double(joints[i]),
                      format_double(joints[i] - joints[cfg.baseline_model])});
    }
    const std::string path = out_path(cfg, "predictive_totals.csv");
    write_csv(path, meta,
              {"model", "family", "innovations", "joint_log_predictive", "log_bf_vs_baseline"},
              rows);
    result.files.push_back(path);
  }

  {
    std::vector<std::string> header{"model"};
    for (int i = 0; i < q; ++i) header.push_back(spec_token(cfg.models[i]));
    std::vector<std::vector<std::string>> rows;
    for (int m = 0; m < q; ++m) {
      std::vector<std::string> row{spec_token(cfg.models[m])};
      for (int n = 0; n < q; ++n) row.push_back(format_double(result.report.log_bf(m, n)));
      rows.push_back(std::move(row));
    }
    const std::string path = out_path(cfg, "log_bf_matrix.csv");
    write_csv(path, meta, header, rows);
    result.files.push_back(path);
  }

  {
    // Families across, innovation structures down: the familiar layout of a
    // model-comparison table, log BF against the configured baseline.
    std::vector<Family> families;
    std::vector<Innovations> innovations;
    for (const auto& m : cfg.models) {
      if (std::find(families.begin(), families.end(), m.family) == families.end()) {
        families.push_back(m.family);
      }
      if (std::find(innovations.begin(), innovations.end(), m.innovations) ==
          innovations.end()) {
        innovations.push_back(m.innovations);
      }
    }
    std::vector<std::string> header{"innovations"};
    for (const auto f : families) header.push_back(family_token(f));
    std::vector<std::vector<std::string>> rows;
    for (const auto innov : innovations) {
      std::vector<std::string> row{innovations_token(innov)};
      for (const auto f : families) {
        std::string cell;
        for (int i = 0; i < q; ++i) {
          if (cfg.models[i].family == f && cfg.models[i].innovations == innov) {
            cell = format_double(joints[i] - joints[cfg.baseline_model]);
          }
        }
        row.push_back(cell);
      }
      rows.push_back(std::move(row));
    }
    const std::string path = out_path(cfg, "bayes_factor_table.csv");
    write_csv(path, meta, header, rows);
    result.files.push_back(path);
  }

  return result;
}

SimulateResult simulate_command(const RunConfig& cfg) {
  if (!cfg.sim_spec) throw ValidationError("simulate: no family configured");
  const SpecId spec = *cfg.sim_spec;

  SimConfig sim;
  sim.spec = spec;
  sim.graph = load_region_graph(cfg.adjacency_path, cfg.across_adjacency_path, 0);
  const int S = sim.graph.n_regions;

  const int blocks = n_field_blocks(spec.family);
  sim.hyper.tau.resize(blocks);
  sim.hyper.phi = Eigen::VectorXd::Zero(blocks);
  for (int b = 0; b < blocks; ++b) {
    const std::string tau_key = "tau" + std::to_string(b + 1);
    if (!cfg.sim_hyper.count(tau_key)) {
      throw ValidationError("simulate: missing hyperparameter " + tau_key);
    }
    sim.hyper.tau[b] = cfg.sim_hyper.at(tau_key);
    const std::string phi_key = "phi" + std::to_string(b + 1);
    if (spec.innovations == Innovations::Spatial && cfg.sim_hyper.count(phi_key)) {
      sim.hyper.phi[b] = cfg.sim_hyper.at(phi_key);
    }
  }
  if (has_contamination(spec.family)) {
    if (!cfg.sim_hyper.count("kappa")) throw ValidationError("simulate: missing kappa");
    sim.hyper.kappa = cfg.sim_hyper.at("kappa");
  }
  if (has_common_gradient(spec.family)) {
    if (!cfg.sim_hyper.count("psi")) throw ValidationError("simulate: missing psi");
    sim.hyper.psi = cfg.sim_hyper.at("psi");
  }

  std::vector<std::string> time_labels, region_labels;
  if (cfg.sim_population_path) {
    const CsvTable table = read_csv(*cfg.sim_population_path);
    region_labels.assign(table.header.begin() + 1, table.header.end());
    const int T = static_cast<int>(table.rows.size());
    sim.population.resize(T, region_labels.size());
    for (int t = 0; t < T; ++t) {
      time_labels.push_back(table.rows[t][0]);
      for (std::size_t s = 0; s < region_labels.size(); ++s) {
        sim.population(t, s) =
            parse_double(table.rows[t][s + 1], *cfg.sim_population_path, t + 2, s + 2);
      }
    }
    sim.horizon = T;
    if (static_cast<int>(region_labels.size()) != S) {
      throw ValidationError("simulate: population file width does not match the graph");
    }
  } else {
    if (cfg.sim_horizon < 1) throw ValidationError("simulate: horizon must be positive");
    if (!(cfg.sim_population > 0.0)) {
      throw ValidationError("simulate: population must be positive");
    }
    sim.horizon = cfg.sim_horizon;
    sim.population = Eigen::MatrixXd::Constant(sim.horizon, S, cfg.sim_population);
    time_labels = default_time_labels(sim.horizon);
    region_labels = default_region_labels(S);
  }

  sim.init = make_init_state(spec, S, cfg.sim_init_field_mean, cfg.sim_init_field_sd,
                             cfg.sim_init_gradient_sd);
  sim.seed = cfg.seed;
  sim.clamp_window = cfg.mcmc.clamp_window;

  SimulateResult result;
  result.data = simulate_dataset(sim);

  const auto meta = report_meta(cfg);
  const std::string counts_path = out_path(cfg, "counts.csv");
  write_panel_csv(counts_path, meta, time_labels, region_labels, result.data.obs.counts);
  result.files.push_back(counts_path);
  const std::string pops_path = out_path(cfg, "populations.csv");
  write_panel_csv(pops_path, meta, time_labels, region_labels, result.data.obs.population);
  result.files.push_back(pops_path);

  if (cfg.sim_write_truth) {
    const int p = latent_dimension(spec, S);
    std::vector<std::string> latent_times{"t0"};
    latent_times.insert(latent_times.end(), time_labels.begin(), time_labels.end());
    std::vector<std::string> coords;
    for (int j = 1; j <= p; ++j) coords.push_back("b" + std::to_string(j));
    const std::string latent_path = out_path(cfg, "truth_latent.csv");
    write_panel_csv(latent_path, meta, latent_times, coords, result.data.beta_path);
    result.files.push_back(latent_path);

    std::vector<std::vector<std::string>> rows;
    for (int b = 0; b < blocks; ++b) {
      rows.push_back({"tau" + std::to_string(b + 1), format_double(sim.hyper.tau[b])});
      rows.push_back({"phi" + std::to_string(b + 1), format_double(sim.hyper.phi[b])});
    }
    if (sim.hyper.kappa) rows.push_back({"kappa", format_double(*sim.hyper.kappa)});
    if (sim.hyper.psi) rows.push_back({"psi", format_double(*sim.hyper.psi)});
    const std::string hyper_path = out_path(cfg, "truth_hyper.csv");
    write_csv(hyper_path, meta, {"parameter", "value"}, rows);
    result.files.push_back(hyper_path);
  }
  return result;
}

std::vector<PsrfEntry> diagnose_command(const RunConfig& cfg) {
  if (cfg.trace_paths.size() < 2) {
    throw ValidationError("diagnose: need at least two trace files");
  }
  std::vector<Eigen::MatrixXd> chains;
  std::vector<std::string> names;
  for (const auto& path : cfg.trace_paths) {
    auto [values, cols] = read_trace_csv(path);
    if (chains.empty()) {
      names = cols;
    } else if (cols != names) {
      throw ValidationError("diagnose: trace files carry different parameters");
    }
    chains.push_back(std::move(values));
  }
  const auto entries = gelman_rubin(chains, names);
  write_psrf_csv(out_path(cfg, "psrf.csv"), cfg, entries);
  return entries;
}

int exit_code_for(const std::exception& err) {
  if (dynamic_cast<const ValidationError*>(&err) != nullptr) return 2;
  if (dynamic_cast<const NumericalError*>(&err) != nullptr) return 3;
  if (dynamic_cast<const IoError*>(&err) != nullptr) return 4;
  return 1;
}

}  // namespace stpoisson

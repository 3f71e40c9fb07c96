// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. An optional argv[1] runs a single criterion by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

#include "stpoisson/commands.hpp"
#include "stpoisson/csv.hpp"
#include "stpoisson/model_compare.hpp"
#include "stpoisson/simulate.hpp"

#include "../test_support.hpp"

using namespace stpoisson;
namespace fs = std::filesystem;

namespace {

HyperParams hyper_for(const SpecId& spec, double tau, double phi, double kappa, double psi) {
  HyperParams hyper;
  const int blocks = n_field_blocks(spec.family);
  hyper.tau = Eigen::VectorXd::Constant(blocks, tau);
  hyper.phi = Eigen::VectorXd::Constant(
      blocks, spec.innovations == Innovations::Spatial ? phi : 0.0);
  if (has_contamination(spec.family)) hyper.kappa = kappa;
  if (has_common_gradient(spec.family)) hyper.psi = psi;
  return hyper;
}

const std::vector<Family> kFamilies{Family::Order1, Family::Contamination, Family::Order2,
                                    Family::CommonGradient, Family::ContaminationGradient};

HyperParams random_hyper(const SpecId& spec, Rng& rng) {
  return hyper_for(spec, 0.5 + 2.0 * draw_uniform(rng), 1.5 * draw_uniform(rng),
                   0.8 * draw_uniform(rng), 0.5 + 2.5 * draw_uniform(rng));
}

// ---- 1. linear-Gaussian oracle equivalence --------------------------------

bool criterion_oracle_equivalence(std::ostream& log) {
  Rng rng(101);
  bool ok = true;

  for (const Family family : kFamilies) {
    for (const Innovations innov : {Innovations::Spatial, Innovations::Diagonal}) {
      for (const int S : {1, 2, 3}) {
        for (const int T : {1, 3, 5}) {
          const SpecId spec{family, innov};
          const auto graph = path_graph(S);
          const auto nb = build_neighborhood_matrix(graph);
          const auto sys = assemble_system(spec, random_hyper(spec, rng), graph, nb);

          const StateBelief init{draw_std_normal(sys.p, rng),
                                 Eigen::MatrixXd::Identity(sys.p, sys.p)};
          Eigen::MatrixXd y(T, S);
          for (int t = 0; t < T; ++t) y.row(t) = draw_std_normal(S, rng).transpose();
          const Eigen::MatrixXd n = Eigen::MatrixXd::Ones(T, S);

          const auto filt = forward_filter(y, n, sys, init, gaussian_identity_linearizer());
          std::vector<GaussianObs> obs;
          for (int t = 0; t < T; ++t) {
            obs.push_back({y.row(t).transpose(), Eigen::VectorXd::Ones(S)});
          }
          const auto oracle =
              dense_joint_oracle_filtered(std::vector<SystemMatrices>(T, sys), init, obs);
          double err = 0.0;
          for (int t = 1; t <= T; ++t) {
            err = std::max(err, (filt.posteriors[t].mean - oracle[t].mean).cwiseAbs().maxCoeff());
            err = std::max(err, (filt.posteriors[t].cov - oracle[t].cov).cwiseAbs().maxCoeff());
          }
          if (err > 1e-8) {
            log << "  filter mismatch " << spec_token(spec) << " S=" << S << " T=" << T
                << " err=" << err << "\n";
            ok = false;
          }
        }
      }
    }
  }

  // backward sampler moments, 1e5 draws per family at S=2, T=3
  for (const Family family : kFamilies) {
    const SpecId spec{family, Innovations::Spatial};
    const int S = 2, T = 3;
    const auto graph = path_graph(S);
    const auto nb = build_neighborhood_matrix(graph);
    const auto sys = assemble_system(spec, random_hyper(spec, rng), graph, nb);
    const StateBelief init{draw_std_normal(sys.p, rng), Eigen::MatrixXd::Identity(sys.p, sys.p)};
    Eigen::MatrixXd y(T, S);
    for (int t = 0; t < T; ++t) y.row(t) = draw_std_normal(S, rng).transpose();
    const auto filt = forward_filter(y, Eigen::MatrixXd::Ones(T, S), sys, init,
                                     gaussian_identity_linearizer());
    const BackwardSampler bs(filt, sys);

    const int draws = 100000;
    std::vector<Eigen::VectorXd> mean(T + 1, Eigen::VectorXd::Zero(sys.p));
    std::vector<Eigen::MatrixXd> second(T + 1, Eigen::MatrixXd::Zero(sys.p, sys.p));
    for (int i = 0; i < draws; ++i) {
      const Eigen::MatrixXd path = bs.draw(rng);
      for (int t = 0; t <= T; ++t) {
        const Eigen::VectorXd state = path.row(t).transpose();
        mean[t] += state;
        second[t] += state * state.transpose();
      }
    }
    std::vector<GaussianObs> obs;
    for (int t = 0; t < T; ++t) obs.push_back({y.row(t).transpose(), Eigen::VectorXd::Ones(S)});
    const auto oracle = dense_joint_oracle(std::vector<SystemMatrices>(T, sys), init, obs);
    double err = 0.0;
    for (int t = 0; t <= T; ++t) {
      mean[t] /= draws;
      const Eigen::MatrixXd cov = second[t] / draws - mean[t] * mean[t].transpose();
      err = std::max(err, (mean[t] - oracle[t].mean).cwiseAbs().maxCoeff());
      err = std::max(err, (cov - oracle[t].cov).cwiseAbs().maxCoeff());
    }
    if (err > 0.02) {
      log << "  backward moments mismatch " << spec_token(spec) << " err=" << err << "\n";
      ok = false;
    }
  }
  return ok;
}

// ---- 2. conjugacy exactness ------------------------------------------------

bool criterion_conjugacy(std::ostream& log) {
  bool ok = true;

  const auto scalar_nb = build_neighborhood_matrix(RegionGraph::from_edges(1, {}));
  Eigen::MatrixXd unit_innovations(2, 1);
  unit_innovations << 1, 1;
  const auto tau_post = tau_full_conditional(unit_innovations, 0.0, scalar_nb, {1.0, 1.0});
  if (std::abs(tau_post.shape - 2.0) > 1e-14 || std::abs(tau_post.rate - 2.0) > 1e-14) {
    log << "  tau full conditional is not Gamma(2, 2): (" << tau_post.shape << ", "
        << tau_post.rate << ")\n";
    ok = false;
  }
  const auto psi_post =
      psi_full_conditional(Eigen::VectorXd::Constant(5, 0.4), {16.0, 0.1});
  if (std::abs(psi_post.shape - 18.0) > 1e-14 || std::abs(psi_post.rate - 0.1) > 1e-14) {
    log << "  psi full conditional is not Gamma(18, 0.1): (" << psi_post.shape << ", "
        << psi_post.rate << ")\n";
    ok = false;
  }

  const auto nb = build_neighborhood_matrix(path_graph(3));
  Eigen::MatrixXd innovations(4, 3);
  innovations << 0.3, -0.2, 0.5, 1.0, 0.1, -0.4, -0.7, 0.2, 0.0, 0.4, -0.1, 0.6;
  const auto post = tau_full_conditional(innovations, 0.8, nb, {1.0, 1.0});
  Rng rng(202);
  std::vector<double> tau_draws(100000), psi_draws(100000);
  Eigen::VectorXd beta2(4);
  beta2 << 0.0, 0.5, 0.3, 0.9;
  const auto psi_post2 = psi_full_conditional(beta2, {16.0, 0.1});
  for (std::size_t i = 0; i < tau_draws.size(); ++i) {
    tau_draws[i] = sample_tau(innovations, 0.8, nb, {1.0, 1.0}, rng);
    psi_draws[i] = sample_psi(beta2, {16.0, 0.1}, rng);
  }
  const double ks_tau = test_support::ks_distance(
      tau_draws, [&](double x) { return test_support::gamma_cdf(x, post.shape, post.rate); });
  const double ks_psi = test_support::ks_distance(psi_draws, [&](double x) {
    return test_support::gamma_cdf(x, psi_post2.shape, psi_post2.rate);
  });
  log << "  KS(tau) = " << ks_tau << ", KS(psi) = " << ks_psi << " (threshold 0.02)\n";
  if (ks_tau >= 0.02 || ks_psi >= 0.02) ok = false;
  return ok;
}

// ---- 3. Metropolis prior recovery ------------------------------------------

bool criterion_prior_recovery(std::ostream& log) {
  bool ok = true;
  const auto nb = build_neighborhood_matrix(path_graph(3));
  const Eigen::MatrixXd no_innovations(0, 3);

  {
    Rng rng(303);
    double phi = 0.5;
    const int burn = 2000, keep = 100000;
    std::vector<double> draws;
    draws.reserve(keep);
    for (int i = 0; i < burn + keep; ++i) {
      phi = sample_phi(phi, no_innovations, 1.0, nb, 100.0, 2.5, rng).value;
      if (i >= burn) draws.push_back(phi);
    }
    const double ks =
        test_support::ks_distance(draws, [](double x) { return phi_prior_cdf(x, 100.0); });
    log << "  KS(phi vs normalized prior) = " << ks << " (threshold 0.02)\n";
    if (ks >= 0.02) ok = false;
  }

  {
    Rng rng(304);
    const SpecId spec{Family::Contamination, Innovations::Spatial};
    const auto graph = path_graph(3);
    const Eigen::MatrixXd single_row = Eigen::MatrixXd::Zero(1, 3);  // T = 0 transitions
    double kappa = 0.5;
    const int burn = 2000, keep = 100000;
    std::vector<double> draws;
    draws.reserve(keep);
    for (int i = 0; i < burn + keep; ++i) {
      kappa = sample_kappa(kappa, single_row, spec, graph, nb, 1.0, 0.5, 2.5, rng).value;
      if (i >= burn) draws.push_back(kappa);
    }
    const double ks = test_support::ks_distance(
        draws, [](double x) { return std::clamp(x, 0.0, 1.0); });
    log << "  KS(kappa vs uniform prior) = " << ks << " (threshold 0.02)\n";
    if (ks >= 0.02) ok = false;
  }
  return ok;
}

// ---- 4. Geweke joint-distribution test --------------------------------------

bool criterion_geweke(std::ostream& log) {
  const SpecId spec{Family::Order1, Innovations::Spatial};
  const int S = 3, T = 5;
  const auto graph = path_graph(S);
  const auto nb = build_neighborhood_matrix(graph);
  const PriorConfig priors = make_default_priors(spec, S, 0.0);

  // forward simulation: iid prior draws of the hyperparameters
  const int forward_draws = 200000;
  Rng frng(404);
  Eigen::MatrixXd forward(forward_draws, 4);  // tau, tau^2, phi, phi^2
  for (int i = 0; i < forward_draws; ++i) {
    const HyperParams hyper = sample_hyper_prior(spec, priors, frng);
    forward.row(i) << hyper.tau[0], hyper.tau[0] * hyper.tau[0], hyper.phi[0],
        hyper.phi[0] * hyper.phi[0];
  }

  // successive-conditional simulation: MCMC sweep then data refresh
  const int burn = 5000, keep = 400000;
  Rng rng(405);

  const HyperParams hyper0 = sample_hyper_prior(spec, priors, rng);
  Eigen::MatrixXd beta0(T + 1, S);
  beta0.row(0) =
      mvn_sample(priors.init_state.mean, priors.init_state.cov, rng, "geweke init").transpose();
  for (int t = 1; t <= T; ++t) {
    beta0.row(t) =
        beta0.row(t - 1) +
        pgmrf_sample(nb, {hyper0.tau[0], hyper0.phi[0]}, rng).transpose();
  }

  McmcOptions opts;
  opts.n_iter = 2;  // unused; sweeps are driven manually
  opts.burn_in = 1;
  opts.rw_scale_log_phi = 1.5;
  ChainSampler sampler(Eigen::MatrixXd::Zero(T, S), Eigen::MatrixXd::Ones(T, S), std::nullopt,
                       spec, graph, nb, priors, opts, gaussian_identity_linearizer());
  sampler.state().hyper = hyper0;
  sampler.state().beta_path = beta0;

  auto refresh_observations = [&]() {
    Eigen::MatrixXd y(T, S);
    for (int t = 1; t <= T; ++t) {
      y.row(t - 1) = sampler.state().beta_path.row(t) + draw_std_normal(S, rng).transpose();
    }
    sampler.set_observations(std::move(y));
  };
  refresh_observations();

  Eigen::MatrixXd chain(keep, 4);
  for (int i = 0; i < burn + keep; ++i) {
    sampler.sweep(rng);
    refresh_observations();
    if (i >= burn) {
      const double tau = sampler.state().hyper.tau[0];
      const double phi = sampler.state().hyper.phi[0];
      chain.row(i - burn) << tau, tau * tau, phi, phi * phi;
    }
  }

  const char* names[4] = {"E[tau]", "E[tau^2]", "E[phi]", "E[phi^2]"};
  bool ok = true;
  for (int j = 0; j < 4; ++j) {
    const double mf = forward.col(j).mean();
    const double sf = std::sqrt((forward.col(j).array() - mf).square().sum() /
                                (forward_draws - 1.0) / forward_draws);
    const double mc = chain.col(j).mean();
    const double sc = test_support::batch_means_se(chain.col(j));
    const double diff = std::abs(mf - mc);
    const double band = 3.0 * std::sqrt(sf * sf + sc * sc);
    log << "  " << names[j] << ": forward " << mf << " +- " << sf << ", chain " << mc << " +- "
        << sc << ", |diff| " << diff << " vs 3 MCSE " << band << "\n";
    if (diff > band) ok = false;
  }
  return ok;
}

// ---- 5. PGMRF correctness ----------------------------------------------------

bool criterion_pgmrf(std::ostream& log) {
  bool ok = true;
  Rng rng(505);
  double worst_density = 0.0, worst_det = 0.0;
  for (int s = 1; s <= 6; ++s) {
    const auto graph = test_support::random_graph(s, rng, /*random_weights=*/true);
    const auto nb = build_neighborhood_matrix(graph);
    for (int rep = 0; rep < 10; ++rep) {
      const PgmrfParams p{0.2 + 3.0 * draw_uniform(rng), 2.0 * draw_uniform(rng)};
      const Eigen::MatrixXd prec = pgmrf_precision(nb, p);
      const Eigen::VectorXd omega = draw_std_normal(s, rng);
      worst_density = std::max(
          worst_density,
          std::abs(pgmrf_log_density(omega, nb, p) -
                   test_support::dense_mvn_log_density(omega, Eigen::VectorXd::Zero(s),
                                                       prec.inverse())));
      worst_det =
          std::max(worst_det, std::abs(pgmrf_log_det(nb, p) - std::log(prec.determinant())));
    }
  }
  log << "  max |log-density error| = " << worst_density << ", max |log-det error| = "
      << worst_det << " (threshold 1e-10)\n";
  if (worst_density > 1e-10 || worst_det > 1e-10) ok = false;

  const auto nb = build_neighborhood_matrix(path_graph(4));
  const PgmrfParams p{1.2, 0.8};
  const int draws = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd x = pgmrf_sample(nb, p, rng);
    mean += x;
    sum += x * x.transpose();
  }
  mean /= draws;
  const Eigen::MatrixXd cov = sum / draws - mean * mean.transpose();
  const double err = (cov - pgmrf_precision(nb, p).inverse().eval()).cwiseAbs().maxCoeff();
  log << "  max |sampler covariance error| = " << err << " (threshold 0.02)\n";
  if (err > 0.02) ok = false;
  return ok;
}

// ---- 6. simulation recovery (family V) ---------------------------------------

bool criterion_recovery(std::ostream& log) {
  const SpecId spec{Family::ContaminationGradient, Innovations::Spatial};
  const double tau = 7.0, phi = 0.5, kappa = 0.05, psi = 140.0;
  const double field_mean = std::log(5e-4);  // about 50 cases per 100,000
  const int reps = 20;

  std::map<std::string, int> covered{{"tau1", 0}, {"phi1", 0}, {"kappa", 0}, {"psi", 0}};
  std::map<std::string, double> truth{
      {"tau1", tau}, {"phi1", phi}, {"kappa", kappa}, {"psi", psi}};

  for (int r = 0; r < reps; ++r) {
    SimConfig sim;
    sim.spec = spec;
    sim.graph = lattice_graph(4, 4);
    sim.hyper = hyper_for(spec, tau, phi, kappa, psi);
    sim.horizon = 30;
    sim.population = Eigen::MatrixXd::Constant(30, 16, 100000.0);
    // The generating initial belief is tight and shared with the fit below.
    // A unit-variance field start makes the first filter step linearize an
    // O(1) distance from the path (biasing the innovation scale), and a
    // unit-variance gradient start compounds to e^30 over the horizon.
    sim.init = make_init_state(spec, 16, field_mean, 0.3, 0.01);
    sim.seed = mix_seed(606, r);
    const auto data = simulate_dataset(sim);

    const auto nb = build_neighborhood_matrix(sim.graph);
    PriorConfig priors = make_default_priors(spec, 16, field_mean);
    priors.init_state = sim.init;
    // Weakly informative tau prior that does not contradict the generating
    // value: the default Gamma(1, 1) leaves ~0.1% mass above tau = 7 and at
    // this data size drags the weakly identified constant-eigendirection
    // variance split. The library default stays Gamma(1, 1).
    priors.tau_prior = {1.0, 0.1};
    McmcOptions opts;
    opts.n_iter = 6000;
    opts.burn_in = 2500;
    opts.latent_thin = 0;
    opts.adapt_during_burn_in = true;
    Rng rng(mix_seed(607, r));
    const Trace trace = run_chain(data.obs, spec, sim.graph, nb, priors, opts, rng);

    for (std::size_t j = 0; j < trace.hyper_names.size(); ++j) {
      const std::string& name = trace.hyper_names[j];
      if (!truth.count(name)) continue;
      std::vector<double> draws(trace.hyper.col(j).data(),
                                trace.hyper.col(j).data() + trace.kept());
      const double lo = sample_quantile(draws, 0.025);
      const double hi = sample_quantile(draws, 0.975);
      if (truth[name] >= lo && truth[name] <= hi) ++covered[name];
    }
  }

  bool ok = true;
  for (const auto& [name, count] : covered) {
    log << "  " << name << ": truth covered in " << count << "/" << reps
        << " replications (need >= 16)\n";
    if (count < 16) ok = false;
  }
  return ok;
}

// ---- 7. model selection sanity ------------------------------------------------

bool criterion_model_selection(std::ostream& log) {
  const std::string dir = "acceptance_compare";
  fs::create_directories(dir);
  const std::string adj = dir + "/adjacency.txt";
  {
    std::ofstream out(adj);
    const auto graph = lattice_graph(3, 3);
    for (int k = 0; k < graph.n_regions; ++k) {
      for (int l : graph.neighbors[k]) {
        if (l > k) out << k + 1 << " " << l + 1 << "\n";
      }
    }
  }

  auto run_rep = [&](Family generator, double gen_kappa, int rep) {
    const std::string rep_dir =
        dir + "/" + family_token(generator) + "_rep" + std::to_string(rep);
    RunConfig sim_cfg;
    sim_cfg.adjacency_path = adj;
    sim_cfg.sim_spec = SpecId{generator, Innovations::Spatial};
    sim_cfg.sim_hyper = {{"tau1", 7.0}, {"phi1", 0.5}};
    if (generator == Family::Contamination) sim_cfg.sim_hyper["kappa"] = gen_kappa;
    sim_cfg.sim_horizon = 10;
    sim_cfg.sim_population = 10000.0;
    sim_cfg.sim_init_field_mean = std::log(0.005);
    sim_cfg.out_dir = rep_dir;
    sim_cfg.seed = mix_seed(707 + (generator == Family::Contamination ? 0 : 1), rep);
    simulate_command(sim_cfg);

    RunConfig cfg;
    cfg.counts_path = rep_dir + "/counts.csv";
    cfg.populations_path = rep_dir + "/populations.csv";
    cfg.adjacency_path = adj;
    cfg.models = {SpecId{Family::Contamination, Innovations::Spatial},
                  SpecId{Family::Order1, Innovations::Spatial}};
    cfg.baseline_model = 1;
    cfg.t_star = 4;
    cfg.init_field_mean = std::log(0.005);
    cfg.compare_mcmc.n_iter = 1600;
    cfg.compare_mcmc.burn_in = 800;
    cfg.compare_mcmc.n_chains = 1;
    cfg.compare_mcmc.latent_thin = 0;
    cfg.out_dir = rep_dir + "/cmp";
    cfg.seed = mix_seed(708, rep);
    const CompareResult result = compare_command(cfg);
    return result.report.log_bf(0, 1);  // log BF of contamination vs order1
  };

  bool ok = true;
  {
    int wins = 0;
    std::vector<double> bfs;
    for (int rep = 0; rep < 10; ++rep) {
      const double bf = run_rep(Family::Contamination, 0.5, rep);
      bfs.push_back(bf);
      if (bf > 0.0) ++wins;
    }
    std::ostringstream list;
    for (double b : bfs) list << " " << b;
    log << "  contamination data: log BF(II vs I) per rep:" << list.str() << "\n";
    log << "  contamination preferred in " << wins << "/10 (need >= 8)\n";
    if (wins < 8) ok = false;
  }
  {
    std::vector<double> bfs;
    for (int rep = 0; rep < 10; ++rep) bfs.push_back(run_rep(Family::Order1, 0.0, rep));
    std::vector<double> sorted = bfs;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[4] + sorted[5]);
    std::ostringstream list;
    for (double b : bfs) list << " " << b;
    log << "  first-order data: log BF(II vs I) per rep:" << list.str() << "\n";
    log << "  median " << median << " (need <= 0)\n";
    if (median > 0.0) ok = false;
  }
  return ok;
}

// ---- 8. predictive estimator vs quadrature -------------------------------------

bool criterion_predictive_quadrature(std::ostream& log) {
  const SpecId spec{Family::Order1, Innovations::Diagonal};
  const auto graph = RegionGraph::from_edges(1, {});
  const auto nb = build_neighborhood_matrix(graph);

  const double mu = std::log(0.3), sigma0 = 0.25, tau = 16.0;
  const int g = 100000;
  Rng rng(808);
  PredictiveDraws draws;
  draws.last_state.resize(g, 1);
  for (int i = 0; i < g; ++i) draws.last_state(i, 0) = mu + sigma0 * draw_normal(rng);
  HyperParams hyper;
  hyper.tau = Eigen::VectorXd::Constant(1, tau);
  hyper.phi = Eigen::VectorXd::Zero(1);
  draws.hyper.assign(g, hyper);

  Eigen::VectorXd y(1), n(1);
  y << 3;
  n << 10;
  const auto est = one_step_predictive(y, n, draws, spec, graph, nb, rng);
  const double exact =
      test_support::poisson_lognormal_predictive(3.0, 10.0, mu, sigma0 * sigma0 + 1.0 / tau);
  const double rel = std::abs(std::exp(est.log_pred) / exact - 1.0);
  log << "  quadrature " << exact << ", Monte Carlo " << std::exp(est.log_pred)
      << ", relative error " << rel << " (threshold 0.01)\n";
  return rel < 0.01;
}

// ---- 9. determinism and round trips ---------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool criterion_determinism(std::ostream& log) {
  bool ok = true;
  const std::string dir = "acceptance_determinism";
  fs::create_directories(dir);
  const std::string adj = dir + "/adjacency.txt";
  {
    std::ofstream out(adj);
    const auto graph = lattice_graph(2, 3);
    for (int k = 0; k < graph.n_regions; ++k) {
      for (int l : graph.neighbors[k]) {
        if (l > k) out << k + 1 << " " << l + 1 << "\n";
      }
    }
  }

  auto simulate_to = [&](const std::string& out_dir) {
    RunConfig cfg;
    cfg.adjacency_path = adj;
    cfg.sim_spec = SpecId{Family::CommonGradient, Innovations::Spatial};
    cfg.sim_hyper = {{"tau1", 7.0}, {"phi1", 0.5}, {"psi", 140.0}};
    cfg.sim_horizon = 8;
    cfg.sim_population = 20000.0;
    cfg.sim_init_field_mean = std::log(0.004);
    cfg.sim_write_truth = true;
    cfg.out_dir = out_dir;
    cfg.seed = 909;
    return simulate_command(cfg);
  };
  const auto sim1 = simulate_to(dir + "/sim1");
  const auto sim2 = simulate_to(dir + "/sim2");
  for (const char* name : {"counts.csv", "populations.csv", "truth_latent.csv"}) {
    if (slurp(dir + "/sim1/" + name) != slurp(dir + "/sim2/" + name)) {
      log << "  simulate outputs differ across identical runs: " << name << "\n";
      ok = false;
    }
  }

  auto fit_to = [&](const std::string& out_dir, int threads) {
    RunConfig cfg;
    cfg.counts_path = dir + "/sim1/counts.csv";
    cfg.populations_path = dir + "/sim1/populations.csv";
    cfg.adjacency_path = adj;
    cfg.spec = SpecId{Family::CommonGradient, Innovations::Spatial};
    cfg.init_field_mean = std::log(0.004);
    cfg.mcmc.n_iter = 300;
    cfg.mcmc.burn_in = 150;
    cfg.mcmc.n_chains = 2;
    cfg.mcmc.latent_thin = 5;
    cfg.out_dir = out_dir;
    cfg.seed = 910;
    cfg.threads = threads;
    return fit_command(cfg);
  };
  const auto fit1 = fit_to(dir + "/fit1", 1);
  const auto fit2 = fit_to(dir + "/fit2", 2);
  for (const char* name :
       {"trace_chain1.csv", "trace_chain2.csv", "posterior_summary.csv", "psrf.csv",
        "common_gradient.csv", "fitted_risk.csv"}) {
    if (slurp(dir + "/fit1/" + name) != slurp(dir + "/fit2/" + name)) {
      log << "  fit outputs differ across identical runs: " << name << "\n";
      ok = false;
    }
  }

  // every emitted CSV re-parses; the dataset files re-ingest
  for (const auto& file : sim1.files) {
    try {
      read_csv(file);
    } catch (const std::exception& err) {
      log << "  emitted file does not re-parse: " << file << ": " << err.what() << "\n";
      ok = false;
    }
  }
  for (const auto& file : fit1.files) {
    try {
      read_csv(file);
    } catch (const std::exception& err) {
      log << "  emitted file does not re-parse: " << file << ": " << err.what() << "\n";
      ok = false;
    }
  }
  try {
    const Dataset ds = load_dataset(dir + "/sim1/counts.csv", dir + "/sim1/populations.csv");
    if (ds.horizon() != 8 || ds.n_regions() != 6) {
      log << "  re-ingested dataset has the wrong shape\n";
      ok = false;
    }
  } catch (const std::exception& err) {
    log << "  simulated dataset does not re-ingest: " << err.what() << "\n";
    ok = false;
  }
  return ok;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::ostream&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "linear-Gaussian oracle equivalence (filter 1e-8, backward moments 0.02)",
       criterion_oracle_equivalence},
      {2, "conjugacy exactness (Gamma(2,2), Gamma(18,0.1), KS < 0.02)", criterion_conjugacy},
      {3, "Metropolis prior recovery (KS < 0.02)", criterion_prior_recovery},
      {4, "Geweke joint-distribution test (3 MCSE)", criterion_geweke},
      {5, "PGMRF correctness (1e-10 analytic, 0.02 Monte Carlo)", criterion_pgmrf},
      {6, "simulation recovery, contamination-gradient (coverage >= 16/20)",
       criterion_recovery},
      {7, "model selection sanity (>= 8/10 wins; median <= 0 under the null)",
       criterion_model_selection},
      {8, "one-step predictive vs quadrature (1%)", criterion_predictive_quadrature},
      {9, "determinism and file round trips", criterion_determinism},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    std::ostringstream detail;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& err) {
      detail << "  exception: " << err.what() << "\n";
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %d: %s (%.1fs)\n", ok ? "PASS" : "FAIL", criterion.id,
                criterion.name, seconds);
    std::cout << detail.str();
    if (!ok) ++failures;
  }
  return failures;
}

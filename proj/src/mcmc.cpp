#include "stpoisson/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace stpoisson {

void validate_options(const McmcOptions& opts) {
  if (opts.n_iter < 1) throw ValidationError("mcmc: iterations must be positive");
  if (opts.burn_in < 0 || opts.burn_in >= opts.n_iter) {
    throw ValidationError("mcmc: burn-in must be nonnegative and smaller than iterations");
  }
  if (opts.n_chains < 1) throw ValidationError("mcmc: need at least one chain");
  if (opts.latent_thin < 0) throw ValidationError("mcmc: latent thinning must be nonnegative");
  if (!(opts.rw_scale_log_phi > 0.0) || !(opts.rw_scale_logit_kappa > 0.0)) {
    throw ValidationError("mcmc: random-walk scales must be positive");
  }
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// sum_t omega_t' (I + phi M) omega_t for row-per-t innovations
double innovation_quad(const Eigen::MatrixXd& innovations, double phi,
                       const NeighborhoodMatrix& nb) {
  double quad = innovations.squaredNorm();
  if (phi != 0.0) {
    quad += phi * (innovations * nb.m).cwiseProduct(innovations).sum();
  }
  return quad;
}

}  // namespace

GammaPosterior tau_full_conditional(const Eigen::MatrixXd& innovations, double phi,
                                    const NeighborhoodMatrix& nb, const GammaSpec& prior) {
  const int T = static_cast<int>(innovations.rows());
  if (T > 0 && innovations.cols() != nb.size()) {
    throw ValidationError("sample_tau: innovation width does not match the field");
  }
  GammaPosterior post;
  post.shape = prior.shape + 0.5 * T * nb.size();
  post.rate = prior.rate + 0.5 * innovation_quad(innovations, phi, nb);
  if (!(post.rate > 0.0)) {
    throw NumericalError("sample_tau: nonpositive posterior rate " + std::to_string(post.rate));
  }
  return post;
}

double sample_tau(const Eigen::MatrixXd& innovations, double phi, const NeighborhoodMatrix& nb,
                  const GammaSpec& prior, Rng& rng) {
  const auto post = tau_full_conditional(innovations, phi, nb, prior);
  return draw_gamma(post.shape, post.rate, rng);
}

GammaPosterior psi_full_conditional(const Eigen::VectorXd& beta2_path, const GammaSpec& prior) {
  const int T = static_cast<int>(beta2_path.size()) - 1;
  if (T < 0) throw ValidationError("sample_psi: empty gradient path");
  double ss = 0.0;
  for (int t = 1; t <= T; ++t) {
    const double step = beta2_path[t] - beta2_path[t - 1];
    ss += step * step;
  }
  GammaPosterior post{prior.shape + 0.5 * T, prior.rate + 0.5 * ss};
  if (!(post.rate > 0.0)) {
    throw NumericalError("sample_psi: nonpositive posterior rate " + std::to_string(post.rate));
  }
  return post;
}

double sample_psi(const Eigen::VectorXd& beta2_path, const GammaSpec& prior, Rng& rng) {
  const auto post = psi_full_conditional(beta2_path, prior);
  return draw_gamma(post.shape, post.rate, rng);
}

double phi_log_target(double phi, const Eigen::MatrixXd& innovations, double tau,
                      const NeighborhoodMatrix& nb, double phi_upper) {
  const double lp = phi_log_prior(phi, phi_upper);
  if (lp == kNegInf) return kNegInf;
  const int T = static_cast<int>(innovations.rows());
  if (T == 0) return lp;
  const double log_det =
      nb.size() * std::log(tau) + (1.0 + phi * nb.eigenvalues.array()).log().sum();
  return lp + 0.5 * T * log_det - 0.5 * tau * innovation_quad(innovations, phi, nb);
}

MetropolisDraw sample_phi(double current, const Eigen::MatrixXd& innovations, double tau,
                          const NeighborhoodMatrix& nb, double phi_upper, double rw_scale,
                          Rng& rng) {
  const double proposal = current * std::exp(rw_scale * draw_normal(rng));
  const double log_ratio = phi_log_target(proposal, innovations, tau, nb, phi_upper) -
                           phi_log_target(current, innovations, tau, nb, phi_upper) +
                           std::log(proposal) - std::log(current);
  if (std::log(draw_uniform(rng)) < log_ratio) return {proposal, true};
  return {current, false};
}

double kappa_log_target(double kappa, const Eigen::MatrixXd& beta_path, const SpecId& spec,
                        const RegionGraph& graph, const NeighborhoodMatrix& nb, double tau,
                        double phi) {
  if (!(kappa > 0.0 && kappa < 1.0)) return kNegInf;
  if (!has_contamination(spec.family)) {
    throw ValidationError("sample_kappa: family has no contamination component");
  }
  const int S = graph.n_regions;
  const int T = static_cast<int>(beta_path.rows()) - 1;
  const Eigen::MatrixXd g1 = contamination_evolution(graph, kappa);
  const bool gradient = has_common_gradient(spec.family);
  const int p = static_cast<int>(beta_path.cols());

  Eigen::MatrixXd innovations(T, S);
  for (int t = 1; t <= T; ++t) {
    Eigen::VectorXd omega =
        beta_path.row(t).head(S).transpose() - g1 * beta_path.row(t - 1).head(S).transpose();
    if (gradient) omega.array() -= beta_path(t - 1, p - 1);
    innovations.row(t - 1) = omega.transpose();
  }
  // Field precision tau (I + phi M) does not involve kappa, so only the
  // quadratic form varies; the uniform prior is constant on (0, 1).
  return -0.5 * tau * innovation_quad(innovations, phi, nb);
}

MetropolisDraw sample_kappa(double current, const Eigen::MatrixXd& beta_path, const SpecId& spec,
                            const RegionGraph& graph, const NeighborhoodMatrix& nb, double tau,
                            double phi, double rw_scale, Rng& rng) {
  const double logit = std::log(current) - std::log1p(-current);
  const double prop_logit = logit + rw_scale * draw_normal(rng);
  const double proposal = 1.0 / (1.0 + std::exp(-prop_logit));
  const double jacobian = (std::log(proposal) + std::log1p(-proposal)) -
                          (std::log(current) + std::log1p(-current));
  const double log_ratio = kappa_log_target(proposal, beta_path, spec, graph, nb, tau, phi) -
                           kappa_log_target(current, beta_path, spec, graph, nb, tau, phi) +
                           jacobian;
  if (std::log(draw_uniform(rng)) < log_ratio) return {proposal, true};
  return {current, false};
}

Eigen::MatrixXd field_innovations(const Eigen::MatrixXd& beta_path, int block,
                                  const SpecId& spec, const HyperParams& hyper,
                                  const RegionGraph& graph) {
  const int S = graph.n_regions;
  const int T = static_cast<int>(beta_path.rows()) - 1;
  if (block < 0 || block >= n_field_blocks(spec.family)) {
    throw ValidationError("field_innovations: block index out of range");
  }
  const Eigen::MatrixXd g = evolution_matrix(spec, hyper, graph);
  Eigen::MatrixXd innovations(std::max(T, 0), S);
  for (int t = 1; t <= T; ++t) {
    const Eigen::VectorXd omega =
        beta_path.row(t).transpose() - g * beta_path.row(t - 1).transpose();
    innovations.row(t - 1) = omega.segment(block * S, S).transpose();
  }
  return innovations;
}

HyperParams hyper_from_row(const SpecId& spec, const Eigen::VectorXd& row) {
  const int blocks = n_field_blocks(spec.family);
  int expected = blocks + (spec.innovations == Innovations::Spatial ? blocks : 0) +
                 (has_contamination(spec.family) ? 1 : 0) +
                 (has_common_gradient(spec.family) ? 1 : 0);
  if (row.size() != expected) {
    throw ValidationError("hyper_from_row: expected " + std::to_string(expected) +
                          " columns, got " + std::to_string(row.size()));
  }
  HyperParams h;
  h.tau.resize(blocks);
  h.phi = Eigen::VectorXd::Zero(blocks);
  int col = 0;
  for (int b = 0; b < blocks; ++b) h.tau[b] = row[col++];
  if (spec.innovations == Innovations::Spatial) {
    for (int b = 0; b < blocks; ++b) h.phi[b] = row[col++];
  }
  if (has_contamination(spec.family)) h.kappa = row[col++];
  if (has_common_gradient(spec.family)) h.psi = row[col++];
  return h;
}

// ---- ChainSampler ----------------------------------------------------------

namespace {

enum class BlockKind { Tau, Phi, Kappa, Psi };

struct Block {
  BlockKind kind;
  int index;  // field block for Tau/Phi
};

std::vector<Block> hyper_blocks(const SpecId& spec) {
  std::vector<Block> blocks;
  for (int b = 0; b < n_field_blocks(spec.family); ++b) blocks.push_back({BlockKind::Tau, b});
  if (spec.innovations == Innovations::Spatial) {
    for (int b = 0; b < n_field_blocks(spec.family); ++b) blocks.push_back({BlockKind::Phi, b});
  }
  if (has_contamination(spec.family)) blocks.push_back({BlockKind::Kappa, 0});
  if (has_common_gradient(spec.family)) blocks.push_back({BlockKind::Psi, 0});
  return blocks;
}

}  // namespace

ChainSampler::ChainSampler(Eigen::MatrixXd y, Eigen::MatrixXd n,
                           std::optional<MissingMask> missing, SpecId spec, RegionGraph graph,
                           NeighborhoodMatrix nb, PriorConfig priors, McmcOptions opts,
                           Linearizer lin)
    : y_(std::move(y)),
      n_(std::move(n)),
      missing_(std::move(missing)),
      spec_(spec),
      graph_(std::move(graph)),
      nb_(std::move(nb)),
      priors_(std::move(priors)),
      opts_(std::move(opts)),
      lin_(std::move(lin)) {
  validate_options(opts_);
  const int p = latent_dimension(spec_, graph_.n_regions);
  if (priors_.init_state.mean.size() != p) {
    throw ValidationError("mcmc: initial state dimension does not match the specification");
  }
  if (y_.cols() != graph_.n_regions || n_.rows() != y_.rows() || n_.cols() != y_.cols()) {
    throw ValidationError("mcmc: panel dimensions are inconsistent");
  }
  const int T = static_cast<int>(y_.rows());
  for (const auto& [t, coord] : opts_.monitor_latent) {
    if (t < 0 || t > T || coord < 0 || coord >= p) {
      throw ValidationError("mcmc: monitored latent coordinate out of range");
    }
  }
}

void ChainSampler::init_state(Rng& rng, const std::optional<HyperParams>& hyper) {
  state_.hyper = hyper ? *hyper : sample_hyper_prior(spec_, priors_, rng);
  validate_hyper(spec_, state_.hyper);
  update_latent(rng);
}

void ChainSampler::set_observations(Eigen::MatrixXd y) {
  if (y.rows() != y_.rows() || y.cols() != y_.cols()) {
    throw ValidationError("mcmc: replacement observations have the wrong shape");
  }
  y_ = std::move(y);
}

void ChainSampler::update_latent(Rng& rng) {
  const SystemMatrices sys = assemble_system(spec_, state_.hyper, graph_, nb_);
  const MissingMask* mask = missing_ && missing_->size() > 0 ? &*missing_ : nullptr;
  const FilterOutput filt = forward_filter(y_, n_, sys, priors_.init_state, lin_, mask);
  clamp_events_ += filt.clamp_events;
  state_.beta_path = BackwardSampler(filt, sys).draw(rng);
}

void ChainSampler::update_hyper_block(int block_id, Rng& rng) {
  const auto blocks = hyper_blocks(spec_);
  const Block& block = blocks.at(block_id);
  switch (block.kind) {
    case BlockKind::Tau: {
      const Eigen::MatrixXd innov =
          field_innovations(state_.beta_path, block.index, spec_, state_.hyper, graph_);
      state_.hyper.tau[block.index] =
          sample_tau(innov, state_.hyper.phi[block.index], nb_, priors_.tau_prior, rng);
      break;
    }
    case BlockKind::Phi: {
      const Eigen::MatrixXd innov =
          field_innovations(state_.beta_path, block.index, spec_, state_.hyper, graph_);
      const std::string name = "phi" + std::to_string(block.index + 1);
      const auto draw =
          sample_phi(state_.hyper.phi[block.index], innov, state_.hyper.tau[block.index], nb_,
                     priors_.phi_upper, opts_.rw_scale_log_phi, rng);
      state_.hyper.phi[block.index] = draw.value;
      ++attempted_[name], ++window_attempted_[name];
      if (draw.accepted) ++accepted_[name], ++window_accepted_[name];
      break;
    }
    case BlockKind::Kappa: {
      const auto draw = sample_kappa(state_.hyper.kappa.value(), state_.beta_path, spec_, graph_,
                                     nb_, state_.hyper.tau[0], state_.hyper.phi[0],
                                     opts_.rw_scale_logit_kappa, rng);
      state_.hyper.kappa = draw.value;
      ++attempted_["kappa"], ++window_attempted_["kappa"];
      if (draw.accepted) ++accepted_["kappa"], ++window_accepted_["kappa"];
      break;
    }
    case BlockKind::Psi: {
      const Eigen::VectorXd beta2 = state_.beta_path.col(state_.beta_path.cols() - 1);
      state_.hyper.psi = sample_psi(beta2, priors_.psi_prior, rng);
      break;
    }
  }
}

void ChainSampler::sweep(Rng& rng) {
  update_latent(rng);
  const int n_blocks = static_cast<int>(hyper_blocks(spec_).size());
  std::vector<int> order(n_blocks);
  std::iota(order.begin(), order.end(), 0);
  if (opts_.random_scan) {
    for (int i = n_blocks - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
  }
  for (int id : order) update_hyper_block(id, rng);
}

void ChainSampler::adapt_scales(int sweep_index) {
  constexpr int kWindow = 100;
  constexpr double kTargetRate = 0.35;
  if (sweep_index == 0 || sweep_index % kWindow != 0) return;
  auto adjust = [&](const std::string& name, double& scale) {
    const long attempts = window_attempted_[name];
    if (attempts == 0) return;
    const double rate = static_cast<double>(window_accepted_[name]) / attempts;
    scale = std::clamp(scale * std::exp(rate - kTargetRate), 1e-3, 10.0);
    window_attempted_[name] = window_accepted_[name] = 0;
  };
  adjust("phi1", opts_.rw_scale_log_phi);
  adjust("phi2", opts_.rw_scale_log_phi);
  adjust("kappa", opts_.rw_scale_logit_kappa);
}

std::vector<std::string> ChainSampler::hyper_names() const {
  std::vector<std::string> names;
  for (int b = 0; b < n_field_blocks(spec_.family); ++b) {
    names.push_back("tau" + std::to_string(b + 1));
  }
  if (spec_.innovations == Innovations::Spatial) {
    for (int b = 0; b < n_field_blocks(spec_.family); ++b) {
      names.push_back("phi" + std::to_string(b + 1));
    }
  }
  if (has_contamination(spec_.family)) names.push_back("kappa");
  if (has_common_gradient(spec_.family)) names.push_back("psi");
  return names;
}

Eigen::VectorXd ChainSampler::hyper_vector() const {
  std::vector<double> values;
  for (int b = 0; b < n_field_blocks(spec_.family); ++b) values.push_back(state_.hyper.tau[b]);
  if (spec_.innovations == Innovations::Spatial) {
    for (int b = 0; b < n_field_blocks(spec_.family); ++b) values.push_back(state_.hyper.phi[b]);
  }
  if (has_contamination(spec_.family)) values.push_back(state_.hyper.kappa.value());
  if (has_common_gradient(spec_.family)) values.push_back(state_.hyper.psi.value());
  return Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
}

std::map<std::string, double> ChainSampler::acceptance_rates() const {
  std::map<std::string, double> rates;
  for (const auto& [name, attempts] : attempted_) {
    rates[name] = attempts > 0 ? static_cast<double>(accepted_.at(name)) / attempts : 0.0;
  }
  return rates;
}

Trace ChainSampler::run(Rng& rng, const std::optional<HyperParams>& init_hyper) {
  init_state(rng, init_hyper);

  const int kept = opts_.n_iter - opts_.burn_in;
  const int p = latent_dimension(spec_, graph_.n_regions);

  Trace trace;
  trace.hyper_names = hyper_names();
  trace.hyper.resize(kept, trace.hyper_names.size());
  for (const auto& [t, coord] : opts_.monitor_latent) {
    trace.monitored_names.push_back("beta_t" + std::to_string(t) + "_i" + std::to_string(coord));
  }
  trace.monitored.resize(kept, opts_.monitor_latent.size());
  if (opts_.record_last_state) trace.last_state.resize(kept, p);
  trace.n_iter = opts_.n_iter;
  trace.burn_in = opts_.burn_in;
  trace.latent_thin = opts_.latent_thin;

  std::map<std::string, long> accepted_at_burn, attempted_at_burn;
  for (int i = 0; i < opts_.n_iter; ++i) {
    try {
      sweep(rng);
    } catch (const NumericalError& err) {
      throw NumericalError("iteration " + std::to_string(i + 1) + ": " + err.what());
    }
    if (i < opts_.burn_in) {
      if (opts_.adapt_during_burn_in) adapt_scales(i + 1);
      if (i + 1 == opts_.burn_in) {
        accepted_at_burn = accepted_;
        attempted_at_burn = attempted_;
      }
      continue;
    }
    const int k = i - opts_.burn_in;
    trace.hyper.row(k) = hyper_vector().transpose();
    for (std::size_t j = 0; j < opts_.monitor_latent.size(); ++j) {
      const auto& [t, coord] = opts_.monitor_latent[j];
      trace.monitored(k, j) = state_.beta_path(t, coord);
    }
    if (opts_.record_last_state) {
      trace.last_state.row(k) = state_.beta_path.row(state_.beta_path.rows() - 1);
    }
    if (opts_.latent_thin > 0 && k % opts_.latent_thin == 0) {
      trace.latent.push_back(state_.beta_path);
    }
  }

  for (const auto& [name, attempts] : attempted_) {
    const long post_attempts = attempts - attempted_at_burn[name];
    const long post_accepted = accepted_.at(name) - accepted_at_burn[name];
    trace.acceptance_rates[name] =
        post_attempts > 0 ? static_cast<double>(post_accepted) / post_attempts : 0.0;
  }
  trace.clamp_events = clamp_events_;
  return trace;
}

Trace run_chain(const Observation& obs, const SpecId& spec, const RegionGraph& graph,
                const NeighborhoodMatrix& nb, const PriorConfig& priors, const McmcOptions& opts,
                Rng& rng, const std::optional<HyperParams>& init_hyper) {
  validate_observation(obs);
  std::optional<MissingMask> mask;
  if (obs.missing.size() > 0) mask = obs.missing;
  ChainSampler sampler(obs.counts, obs.population, std::move(mask), spec, graph, nb, priors, opts,
                       poisson_linearizer(opts.clamp_window));
  Trace trace = sampler.run(rng, init_hyper);
  return trace;
}

// ---- Gelman-Rubin ----------------------------------------------------------

PsrfResult psrf(const std::vector<Eigen::VectorXd>& chains) {
  const int m = static_cast<int>(chains.size());
  if (m < 2) throw ValidationError("gelman_rubin: need at least two chains");
  const Eigen::Index n = chains[0].size();
  for (const auto& c : chains) {
    if (c.size() != n) throw ValidationError("gelman_rubin: chains have unequal lengths");
  }
  if (n < 10) throw ValidationError("gelman_rubin: chains shorter than 10 draws");

  Eigen::VectorXd means(m), vars(m);
  for (int j = 0; j < m; ++j) {
    means[j] = chains[j].mean();
    vars[j] = (chains[j].array() - means[j]).square().sum() / (n - 1);
  }
  const double within = vars.mean();
  const double grand = means.mean();
  const double between_over_n = (means.array() - grand).square().sum() / (m - 1);
  if (within <= 0.0) return {0.0, true};
  const double var_plus = (n - 1.0) / n * within + between_over_n;
  return {std::sqrt(var_plus / within), false};
}

std::vector<PsrfEntry> gelman_rubin(const std::vector<Eigen::MatrixXd>& chains,
                                    const std::vector<std::string>& names) {
  if (chains.size() < 2) throw ValidationError("gelman_rubin: need at least two chains");
  const Eigen::Index cols = chains[0].cols();
  if (static_cast<Eigen::Index>(names.size()) != cols) {
    throw ValidationError("gelman_rubin: name count does not match columns");
  }
  std::vector<PsrfEntry> out;
  for (Eigen::Index c = 0; c < cols; ++c) {
    std::vector<Eigen::VectorXd> series;
    for (const auto& chain : chains) {
      if (chain.cols() != cols) {
        throw ValidationError("gelman_rubin: chains have unequal column counts");
      }
      series.push_back(chain.col(c));
    }
    out.push_back({names[c], psrf(series)});
  }
  return out;
}

std::vector<PsrfEntry> gelman_rubin(const std::vector<Trace>& chains) {
  if (chains.size() < 2) throw ValidationError("gelman_rubin: need at least two chains");
  std::vector<Eigen::MatrixXd> mats;
  std::vector<std::string> names = chains[0].hyper_names;
  names.insert(names.end(), chains[0].monitored_names.begin(), chains[0].monitored_names.end());
  for (const auto& trace : chains) {
    if (trace.hyper_names != chains[0].hyper_names ||
        trace.monitored_names != chains[0].monitored_names) {
      throw ValidationError("gelman_rubin: traces monitor different parameters");
    }
    Eigen::MatrixXd m(trace.hyper.rows(), trace.hyper.cols() + trace.monitored.cols());
    m << trace.hyper, trace.monitored;
    mats.push_back(std::move(m));
  }
  return gelman_rubin(mats, names);
}

}  // namespace stpoisson

#include "stpoisson/model_spec.hpp"

#include <algorithm>
#include <sstream>

namespace stpoisson {

std::string family_token(Family f) {
  switch (f) {
    case Family::Order1: return "order1";
    case Family::Contamination: return "contamination";
    case Family::Order2: return "order2";
    case Family::CommonGradient: return "common-gradient";
    case Family::ContaminationGradient: return "contamination-gradient";
  }
  return "?";
}

std::string innovations_token(Innovations i) {
  return i == Innovations::Diagonal ? "diagonal" : "spatial";
}

Family parse_family(const std::string& token) {
  if (token == "order1") return Family::Order1;
  if (token == "contamination") return Family::Contamination;
  if (token == "order2") return Family::Order2;
  if (token == "common-gradient") return Family::CommonGradient;
  if (token == "contamination-gradient") return Family::ContaminationGradient;
  throw ValidationError(
      "unknown family token '" + token +
      "' (expected order1, contamination, order2, common-gradient, contamination-gradient)");
}

Innovations parse_innovations(const std::string& token) {
  if (token == "diagonal") return Innovations::Diagonal;
  if (token == "spatial") return Innovations::Spatial;
  throw ValidationError("unknown innovations token '" + token +
                        "' (expected diagonal or spatial)");
}

std::string spec_token(const SpecId& spec) {
  return family_token(spec.family) + ":" + innovations_token(spec.innovations);
}

SpecId parse_spec_token(const std::string& token) {
  const auto colon = token.find(':');
  if (colon == std::string::npos) {
    throw ValidationError("model token '" + token + "' must be 'family:innovations'");
  }
  return SpecId{parse_family(token.substr(0, colon)), parse_innovations(token.substr(colon + 1))};
}

int n_field_blocks(Family f) { return f == Family::Order2 ? 2 : 1; }

bool has_contamination(Family f) {
  return f == Family::Contamination || f == Family::ContaminationGradient;
}

bool has_common_gradient(Family f) {
  return f == Family::CommonGradient || f == Family::ContaminationGradient;
}

int latent_dimension(const SpecId& spec, int n_regions) {
  if (n_regions < 1) throw ValidationError("latent_dimension: region count must be positive");
  int p = n_field_blocks(spec.family) * n_regions;
  if (has_common_gradient(spec.family)) p += 1;
  return p;
}

void validate_hyper(const SpecId& spec, const HyperParams& hyper) {
  const int blocks = n_field_blocks(spec.family);
  if (hyper.tau.size() != blocks) {
    std::ostringstream msg;
    msg << "hyperparameters: family " << family_token(spec.family) << " needs " << blocks
        << " tau component(s), got " << hyper.tau.size();
    throw ValidationError(msg.str());
  }
  if (hyper.phi.size() != blocks) {
    std::ostringstream msg;
    msg << "hyperparameters: family " << family_token(spec.family) << " needs " << blocks
        << " phi component(s), got " << hyper.phi.size();
    throw ValidationError(msg.str());
  }
  for (int i = 0; i < blocks; ++i) {
    if (!(hyper.tau[i] > 0.0)) {
      throw ValidationError("hyperparameters: tau" + std::to_string(i + 1) + " must be positive");
    }
    if (!(hyper.phi[i] >= 0.0)) {
      throw ValidationError("hyperparameters: phi" + std::to_string(i + 1) +
                            " must be nonnegative");
    }
    if (spec.innovations == Innovations::Diagonal && hyper.phi[i] != 0.0) {
      throw ValidationError("hyperparameters: phi must be zero under diagonal innovations");
    }
  }
  if (has_contamination(spec.family)) {
    if (!hyper.kappa) {
      throw ValidationError("hyperparameters: family " + family_token(spec.family) +
                            " requires kappa");
    }
    if (!(*hyper.kappa >= 0.0 && *hyper.kappa < 1.0)) {
      throw ValidationError("hyperparameters: kappa must lie in [0, 1), got " +
                            std::to_string(*hyper.kappa));
    }
  } else if (hyper.kappa) {
    throw ValidationError("hyperparameters: kappa given but family " +
                          family_token(spec.family) + " has no contamination");
  }
  if (has_common_gradient(spec.family)) {
    if (!hyper.psi) {
      throw ValidationError("hyperparameters: family " + family_token(spec.family) +
                            " requires psi");
    }
    if (!(*hyper.psi > 0.0)) {
      throw ValidationError("hyperparameters: psi must be positive, got " +
                            std::to_string(*hyper.psi));
    }
  } else if (hyper.psi) {
    throw ValidationError("hyperparameters: psi given but family " + family_token(spec.family) +
                          " has no common gradient");
  }
}

int max_across_time_neighbors(const RegionGraph& graph) {
  int h = 0;
  for (const auto& c : graph.across_time_neighbors) {
    h = std::max(h, static_cast<int>(c.size()));
  }
  return h;
}

Eigen::MatrixXd contamination_evolution(const RegionGraph& graph, double kappa) {
  if (!(kappa >= 0.0 && kappa < 1.0)) {
    throw ValidationError("contamination: kappa must lie in [0, 1), got " +
                          std::to_string(kappa));
  }
  const int S = graph.n_regions;
  const int h = max_across_time_neighbors(graph);
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(S, S);
  for (int l = 0; l < S; ++l) {
    for (int k : graph.across_time_neighbors[l]) out(k, l) = kappa;
  }
  out /= 1.0 + kappa * h;
  return out;
}

namespace {

PgmrfParams block_params(const SpecId& spec, const HyperParams& hyper, int block) {
  const double phi = spec.innovations == Innovations::Spatial ? hyper.phi[block] : 0.0;
  return PgmrfParams{hyper.tau[block], phi};
}

// Covariance of one field block through the cached eigenbasis:
// [tau (I + phi M)]^{-1} = V diag(1 / (tau (1 + phi lambda))) V'.
Eigen::MatrixXd field_covariance(const NeighborhoodMatrix& nb, const PgmrfParams& p) {
  const Eigen::ArrayXd inv = 1.0 / (p.tau * (1.0 + p.phi * nb.eigenvalues.array()));
  return nb.eigenvectors * inv.matrix().asDiagonal() * nb.eigenvectors.transpose();
}

}  // namespace

Eigen::MatrixXd evolution_matrix(const SpecId& spec, const HyperParams& hyper,
                                 const RegionGraph& graph) {
  const int S = graph.n_regions;
  const int p = latent_dimension(spec, S);
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(p, p);
  if (has_contamination(spec.family)) {
    G.topLeftCorner(S, S) = contamination_evolution(graph, hyper.kappa.value());
  }
  if (spec.family == Family::Order2) {
    G.topRightCorner(S, S) = Eigen::MatrixXd::Identity(S, S);
  } else if (has_common_gradient(spec.family)) {
    G.topRightCorner(S, 1) = Eigen::VectorXd::Ones(S);
  }
  return G;
}

SystemMatrices assemble_system(const SpecId& spec, const HyperParams& hyper,
                               const RegionGraph& graph, const NeighborhoodMatrix& nb) {
  validate_hyper(spec, hyper);
  const int S = graph.n_regions;
  if (nb.size() != S) {
    throw ValidationError("assemble_system: neighborhood matrix size does not match graph");
  }
  SystemMatrices sys;
  sys.n_regions = S;
  sys.p = latent_dimension(spec, S);
  sys.F = Eigen::MatrixXd::Zero(sys.p, S);
  sys.F.topRows(S) = Eigen::MatrixXd::Identity(S, S);
  sys.G = evolution_matrix(spec, hyper, graph);

  sys.W_inv = Eigen::MatrixXd::Zero(sys.p, sys.p);
  sys.W = Eigen::MatrixXd::Zero(sys.p, sys.p);
  for (int b = 0; b < n_field_blocks(spec.family); ++b) {
    const auto params = block_params(spec, hyper, b);
    sys.W_inv.block(b * S, b * S, S, S) = pgmrf_precision(nb, params);
    sys.W.block(b * S, b * S, S, S) = field_covariance(nb, params);
  }
  if (has_common_gradient(spec.family)) {
    sys.W_inv(sys.p - 1, sys.p - 1) = hyper.psi.value();
    sys.W(sys.p - 1, sys.p - 1) = 1.0 / hyper.psi.value();
  }
  return sys;
}

}  // namespace stpoisson

#include <doctest.h>

#include "stpoisson/model_spec.hpp"
#include "stpoisson/priors.hpp"
#include "test_support.hpp"

using namespace stpoisson;

TEST_CASE("latent dimension per family") {
  CHECK(latent_dimension({Family::Order1, Innovations::Spatial}, 92) == 92);
  CHECK(latent_dimension({Family::Order2, Innovations::Spatial}, 3) == 6);
  CHECK(latent_dimension({Family::ContaminationGradient, Innovations::Spatial}, 3) == 4);
  CHECK(latent_dimension({Family::Contamination, Innovations::Diagonal}, 5) == 5);
  CHECK(latent_dimension({Family::CommonGradient, Innovations::Diagonal}, 5) == 6);
}

TEST_CASE("spec tokens round trip") {
  for (const Family f : {Family::Order1, Family::Contamination, Family::Order2,
                         Family::CommonGradient, Family::ContaminationGradient}) {
    for (const Innovations i : {Innovations::Diagonal, Innovations::Spatial}) {
      const SpecId spec{f, i};
      const SpecId parsed = parse_spec_token(spec_token(spec));
      CHECK(parsed.family == f);
      CHECK(parsed.innovations == i);
    }
  }
  CHECK_THROWS_AS(parse_spec_token("order1"), ValidationError);
  CHECK_THROWS_AS(parse_family("order3"), ValidationError);
  CHECK_THROWS_AS(parse_innovations("dense"), ValidationError);
}

TEST_CASE("contamination evolution") {
  SUBCASE("kappa = 0 is the identity") {
    Rng rng(3);
    const auto graph = test_support::random_graph(5, rng);
    const Eigen::MatrixXd g = contamination_evolution(graph, 0.0);
    CHECK((g - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("path-3 with kappa = 0.5") {
    const auto graph = path_graph(3);
    CHECK(max_across_time_neighbors(graph) == 2);
    Eigen::MatrixXd h(3, 3);
    h << 1, 0.5, 0, 0.5, 1, 0.5, 0, 0.5, 1;
    const Eigen::MatrixXd g = contamination_evolution(graph, 0.5);
    CHECK((g - 0.5 * h).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("star graph with kappa = 0.2") {
    const auto graph =
        RegionGraph::from_edges(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
    CHECK(max_across_time_neighbors(graph) == 3);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(4, 4);
    h(0, 1) = h(1, 0) = h(0, 2) = h(2, 0) = h(0, 3) = h(3, 0) = 0.2;
    const Eigen::MatrixXd g = contamination_evolution(graph, 0.2);
    CHECK((g - h / 1.6).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("row sums reach one only on maximal rows") {
    const auto graph = path_graph(4);  // ends have 1 across-time neighbor, middle 2
    const Eigen::MatrixXd g = contamination_evolution(graph, 0.3);
    const Eigen::VectorXd sums = g.rowwise().sum();
    CHECK(sums[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sums[0] < 1.0);
    CHECK(sums[3] < 1.0);
  }

  SUBCASE("kappa domain") {
    CHECK_THROWS_AS(contamination_evolution(path_graph(3), 1.0), ValidationError);
    CHECK_THROWS_AS(contamination_evolution(path_graph(3), -0.1), ValidationError);
  }
}

namespace {

HyperParams make_hyper(const SpecId& spec, double tau, double phi, double kappa, double psi) {
  HyperParams hyper;
  const int blocks = n_field_blocks(spec.family);
  hyper.tau = Eigen::VectorXd::Constant(blocks, tau);
  hyper.phi = Eigen::VectorXd::Constant(
      blocks, spec.innovations == Innovations::Spatial ? phi : 0.0);
  if (has_contamination(spec.family)) hyper.kappa = kappa;
  if (has_common_gradient(spec.family)) hyper.psi = psi;
  return hyper;
}

}  // namespace

TEST_CASE("assemble_system block layouts") {
  SUBCASE("order1 spatial") {
    const auto graph = path_graph(3);
    const auto nb = build_neighborhood_matrix(graph);
    const SpecId spec{Family::Order1, Innovations::Spatial};
    const auto sys = assemble_system(spec, make_hyper(spec, 2.0, 0.5, 0, 0), graph, nb);
    const Eigen::MatrixXd expected = 2.0 * (Eigen::MatrixXd::Identity(3, 3) + 0.5 * nb.m);
    CHECK((sys.W_inv - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((sys.G - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sys.F - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("common-gradient diagonal, S = 2") {
    const auto graph = path_graph(2);
    const auto nb = build_neighborhood_matrix(graph);
    const SpecId spec{Family::CommonGradient, Innovations::Diagonal};
    const auto sys = assemble_system(spec, make_hyper(spec, 1.0, 0, 0, 4.0), graph, nb);
    Eigen::MatrixXd w_inv = Eigen::MatrixXd::Zero(3, 3);
    w_inv.diagonal() << 1, 1, 4;
    CHECK((sys.W_inv - w_inv).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::MatrixXd g(3, 3);
    g << 1, 0, 1, 0, 1, 1, 0, 0, 1;
    CHECK((sys.G - g).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sys.W - w_inv.inverse()).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("order2 local linear trend semantics") {
    const auto graph = path_graph(3);
    const auto nb = build_neighborhood_matrix(graph);
    const SpecId spec{Family::Order2, Innovations::Spatial};
    const auto sys = assemble_system(spec, make_hyper(spec, 1.0, 0.3, 0, 0), graph, nb);
    Eigen::VectorXd beta(6);
    beta << 1, 2, 3, 10, 20, 30;
    const Eigen::VectorXd next = sys.G * beta;
    CHECK(next.head(3).isApprox(beta.head(3) + beta.tail(3)));
    CHECK(next.tail(3).isApprox(beta.tail(3)));
  }

  SUBCASE("contamination with empty across-time sets equals order1") {
    auto graph = path_graph(3);
    for (auto& c : graph.across_time_neighbors) c.clear();
    const auto nb = build_neighborhood_matrix(graph);
    const SpecId spec_ii{Family::Contamination, Innovations::Spatial};
    const SpecId spec_i{Family::Order1, Innovations::Spatial};
    const auto sys_ii = assemble_system(spec_ii, make_hyper(spec_ii, 1.5, 0.4, 0.7, 0), graph, nb);
    const auto sys_i = assemble_system(spec_i, make_hyper(spec_i, 1.5, 0.4, 0, 0), graph, nb);
    CHECK((sys_ii.G - sys_i.G).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sys_ii.W_inv - sys_i.W_inv).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sys_ii.F - sys_i.F).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("F extracts the log-risk block; W_inv is SPD for random hyperparameters") {
  Rng rng(23);
  for (const Family f : {Family::Order1, Family::Contamination, Family::Order2,
                         Family::CommonGradient, Family::ContaminationGradient}) {
    for (const Innovations innov : {Innovations::Diagonal, Innovations::Spatial}) {
      const SpecId spec{f, innov};
      for (int s = 2; s <= 6; s += 2) {
        const auto graph = test_support::random_graph(s, rng);
        const auto nb = build_neighborhood_matrix(graph);
        const auto hyper = sample_hyper_prior(spec, make_default_priors(spec, s), rng);
        const auto sys = assemble_system(spec, hyper, graph, nb);

        const Eigen::VectorXd beta = draw_std_normal(sys.p, rng);
        CHECK((sys.F.transpose() * beta - beta.head(s)).cwiseAbs().maxCoeff() == 0.0);

        CHECK((sys.W_inv - sys.W_inv.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::LLT<Eigen::MatrixXd> llt(sys.W_inv);
        CHECK(llt.info() == Eigen::Success);
        CHECK((sys.W_inv * sys.W - Eigen::MatrixXd::Identity(sys.p, sys.p))
                  .cwiseAbs()
                  .maxCoeff() < 1e-10);
      }
    }
  }
}

TEST_CASE("hyperparameter validation names the missing component") {
  const SpecId spec{Family::ContaminationGradient, Innovations::Spatial};
  HyperParams hyper = make_hyper(spec, 1.0, 0.5, 0.2, 3.0);

  SUBCASE("missing kappa") {
    hyper.kappa.reset();
    CHECK_THROWS_WITH_AS(validate_hyper(spec, hyper), doctest::Contains("kappa"),
                         ValidationError);
  }
  SUBCASE("missing psi") {
    hyper.psi.reset();
    CHECK_THROWS_WITH_AS(validate_hyper(spec, hyper), doctest::Contains("psi"), ValidationError);
  }
  SUBCASE("kappa out of range") {
    hyper.kappa = 1.0;
    CHECK_THROWS_AS(validate_hyper(spec, hyper), ValidationError);
  }
  SUBCASE("extra component rejected") {
    const SpecId plain{Family::Order1, Innovations::Spatial};
    HyperParams h = make_hyper(plain, 1.0, 0.5, 0, 0);
    h.psi = 2.0;
    CHECK_THROWS_AS(validate_hyper(plain, h), ValidationError);
  }
  SUBCASE("wrong block count") {
    hyper.tau = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(validate_hyper(spec, hyper), ValidationError);
  }
}

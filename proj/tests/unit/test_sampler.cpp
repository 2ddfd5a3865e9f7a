#include "doctest.h"

#include <cmath>

#include "bentcable/sampler.hpp"
#include "bentcable/simulate.hpp"
#include "support/geweke.hpp"
#include "support/oracle.hpp"

using namespace bentcable;
using namespace bentcable::testing;

namespace {

// Small S2-like dataset: 6 individuals on the full time grid.
LongitudinalDataset small_dataset(std::uint64_t seed = 3) {
  ScenarioSpec s = builtin_scenario("S2");
  s.m = 6;
  s.n = 150;
  s.sigma2.resize(6);
  s.seed = seed;
  return generate(s).first;
}

Hyperparameters small_hyper(const LongitudinalDataset& ds, int p = 1) {
  const auto scales = elicit_scale_matrices(ds);
  return default_hyperparameters(p, scales.beta, scales.alpha);
}

ChainSettings short_chain(int iterations = 600, std::uint64_t seed = 11) {
  ChainSettings cs;
  cs.iterations = iterations;
  cs.burnin = iterations / 3;
  cs.seed = seed;
  return cs;
}

}  // namespace

TEST_CASE("variant names") {
  CHECK(parse_variant("flexible") == ModelVariant::Flexible);
  CHECK(parse_variant("g-only") == ModelVariant::GOnly);
  CHECK(parse_variant("a-only") == ModelVariant::AOnly);
  CHECK(to_string(ModelVariant::GOnly) == "g-only");
  CHECK_THROWS_AS(parse_variant("mixed"), std::invalid_argument);
}

TEST_CASE("chain settings validation") {
  ChainSettings cs;
  CHECK_NOTHROW(cs.validate());
  cs.burnin = cs.iterations;
  CHECK_THROWS_AS(cs.validate(), std::invalid_argument);
  cs = ChainSettings{};
  cs.thin = 0;
  CHECK_THROWS_AS(cs.validate(), std::invalid_argument);
  cs = ChainSettings{};
  cs.target_acceptance = 1.0;
  CHECK_THROWS_AS(cs.validate(), std::invalid_argument);
  cs = ChainSettings{};
  cs.iterations = 1000;
  cs.burnin = 100;
  cs.thin = 3;
  CHECK(cs.retained_draws() == 300);
}

TEST_CASE("same seed gives identical draws") {
  const auto ds = small_dataset();
  const auto h = small_hyper(ds);
  const auto a = run_chain(ds, h, short_chain());
  const auto b = run_chain(ds, h, short_chain());
  REQUIRE(a.size() == b.size());
  CHECK(a.deviance == b.deviance);
  CHECK(a.population.back().mu_beta == b.population.back().mu_beta);
  const auto c = run_chain(ds, h, short_chain(600, 12));
  CHECK(a.deviance != c.deviance);
}

TEST_CASE("multi-chain runs do not depend on the thread count") {
  const auto ds = small_dataset();
  const auto h = small_hyper(ds);
  const auto one = run_chains(ds, h, short_chain(300), 3, 1);
  const auto three = run_chains(ds, h, short_chain(300), 3, 3);
  REQUIRE(one.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) CHECK(one[c].deviance == three[c].deviance);
  CHECK(one[0].seed != one[1].seed);
  const auto merged = merge_chains(one);
  CHECK(merged.size() == 3 * one[0].size());
}

TEST_CASE("indicator and gamma stay consistent") {
  const auto ds = small_dataset();
  const auto out = run_chain(ds, small_hyper(ds), short_chain(800));
  for (const auto& draw : out.individuals)
    for (const auto& ind : draw) {
      if (ind.indicator == 0)
        CHECK(ind.trans.gamma == 0.0);
      else
        CHECK(ind.trans.gamma > 0.0);
    }
  for (const auto& pop : out.population) {
    CHECK(pop.omega > 0.0);
    CHECK(pop.omega < 1.0);
    CHECK(is_spd(pop.Sigma_beta));
    CHECK(is_spd(pop.Sigma_alpha));
  }
  CHECK(out.alpha_acceptance.size() == ds.size());
  CHECK(out.stationarity_proportion() > 0.9);
}

TEST_CASE("variants restrict the populations") {
  const auto ds = small_dataset();
  auto cs = short_chain(400);
  cs.variant = ModelVariant::GOnly;
  auto out = run_chain(ds, small_hyper(ds), cs);
  for (const auto& draw : out.individuals)
    for (const auto& ind : draw) CHECK(ind.indicator == 1);
  cs.variant = ModelVariant::AOnly;
  out = run_chain(ds, small_hyper(ds), cs);
  for (const auto& draw : out.individuals)
    for (const auto& ind : draw) CHECK(ind.trans.gamma == 0.0);
}

TEST_CASE("everything pinned leaves the state unchanged") {
  const auto ds = small_dataset();
  const auto h = small_hyper(ds);
  auto cs = short_chain(50);
  cs.initial_state = initial_state(ds, h, ModelVariant::Flexible);
  cs.pinned = PinnedBlocks::all();
  const auto out = run_chain(ds, h, cs);
  for (std::size_t d = 0; d < out.size(); ++d) {
    CHECK(out.population[d].mu_beta == cs.initial_state->population.mu_beta);
    CHECK(out.population[d].omega == cs.initial_state->population.omega);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(out.individuals[d][i].trans.tau == cs.initial_state->individuals[i].trans.tau);
      CHECK(out.individuals[d][i].sigma2 == cs.initial_state->individuals[i].sigma2);
    }
  }
}

TEST_CASE("beta full conditional approaches least squares under a flat Level-2") {
  const auto ds = small_dataset();
  auto h = small_hyper(ds, 0);
  GibbsSampler g(ds, h, ModelVariant::Flexible, 4);
  ModelState st = initial_state(ds, h, ModelVariant::Flexible);
  st.population.Sigma_beta = 1e8 * Eigen::Matrix3d::Identity();
  g.set_state(st);
  BentCableCoefs ls;
  least_squares_beta(ds[0], st.individuals[0].trans, ls);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  const int n = 4000;
  for (int k = 0; k < n; ++k) {
    const auto b = g.draw_beta(0);
    mean += Eigen::Vector3d(b.beta0, b.beta1, b.beta2) / n;
  }
  const double sd0 = std::sqrt(st.individuals[0].sigma2 / ds[0].size());
  CHECK(std::abs(mean[0] - ls.beta0) < 5.0 * sd0 + 0.05 * std::abs(ls.beta0) * 0.01);
  CHECK(mean[2] == doctest::Approx(ls.beta2).epsilon(0.05));
}

TEST_CASE("sigma2 full conditional") {
  const auto ds = small_dataset();
  auto h = small_hyper(ds, 0);
  h.d0 = 4.0;
  h.d1 = 4.0;
  GibbsSampler g(ds, h, ModelVariant::Flexible, 8);
  g.set_state(initial_state(ds, h, ModelVariant::Flexible));
  const double ss = g.sum_squared_innovations(1);
  const double shape = 0.5 * (ds[1].size() + h.d0);
  const double rate = 0.5 * (ss + h.d1);
  double mean_prec = 0.0;
  const int n = 40000;
  for (int k = 0; k < n; ++k) mean_prec += 1.0 / g.draw_sigma2(1) / n;
  CHECK(mean_prec == doctest::Approx(shape / rate).epsilon(0.01));
}

TEST_CASE("omega near one keeps everyone gradual") {
  const auto ds = small_dataset();
  const auto h = small_hyper(ds);
  auto cs = short_chain(400);
  ModelState st = initial_state(ds, h, ModelVariant::Flexible);
  for (auto& ind : st.individuals)
    if (ind.indicator == 0) {
      ind.indicator = 1;
      ind.trans.gamma = 5.0;
    }
  st.population.omega = 1.0 - 1e-12;
  cs.initial_state = st;
  cs.pinned.omega = true;
  const auto out = run_chain(ds, h, cs);
  for (const auto& draw : out.individuals)
    for (const auto& ind : draw) CHECK(ind.indicator == 1);
}

TEST_CASE("empty populations draw from the prior") {
  const auto ds = small_dataset();
  auto h = small_hyper(ds);
  h.b0 = 10.0;
  h.b1 = 2.0;
  GibbsSampler g(ds, h, ModelVariant::Flexible, 21);
  ModelState st = initial_state(ds, h, ModelVariant::Flexible);
  for (auto& ind : st.individuals)
    if (ind.indicator == 0) {
      ind.indicator = 1;
      ind.trans.gamma = 5.0;
    }
  g.set_state(st);
  double mean = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) mean += 1.0 / g.draw_sigma2_tauA() / n;
  CHECK(mean == doctest::Approx(h.b0 / h.b1).epsilon(0.02));
  double mu = 0.0;
  for (int k = 0; k < n; ++k) mu += g.draw_mu_tauA() / n;
  CHECK(std::abs(mu - h.a0) < 5.0 * std::sqrt(h.a1 / n) + 0.5);
}

TEST_CASE("set_state rejects inconsistent states") {
  const auto ds = small_dataset();
  const auto h = small_hyper(ds);
  GibbsSampler g(ds, h, ModelVariant::Flexible, 1);
  ModelState st = initial_state(ds, h, ModelVariant::Flexible);
  auto bad = st;
  bad.individuals.pop_back();
  CHECK_THROWS_AS(g.set_state(bad), std::invalid_argument);
  bad = st;
  bad.individuals[0].indicator = 0;
  bad.individuals[0].trans.gamma = 1.0;
  CHECK_THROWS_AS(g.set_state(bad), std::invalid_argument);
  bad = st;
  bad.individuals[0].indicator = 1;
  bad.individuals[0].trans.gamma = 0.0;
  CHECK_THROWS_AS(g.set_state(bad), std::invalid_argument);
  bad = st;
  bad.individuals[0].sigma2 = -1.0;
  CHECK_THROWS_AS(g.set_state(bad), std::invalid_argument);
  bad = st;
  bad.population.ar.phi.clear();
  CHECK_THROWS_AS(g.set_state(bad), std::invalid_argument);
}

TEST_CASE("profiles too short for the AR order are rejected") {
  const auto ds = parse_csv("id,time,y\na,0,1\na,1,2\na,2,3\na,3,4\nb,0,1\nb,1,2\nb,2,3\nb,3,4\n");
  auto h = default_hyperparameters(4, Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity());
  CHECK_THROWS_AS(GibbsSampler(ds, h, ModelVariant::Flexible, 1), ModelSetupError);
}

TEST_CASE("Geweke joint-distribution test, short run") {
  for (bool joint : {true, false}) {
    CAPTURE(joint);
    const auto r = geweke_test(3, 8, 20000, 30000, joint ? 101 : 202, joint);
    for (std::size_t j = 0; j < r.z.size(); ++j) {
      CAPTURE(r.names[j]);
      CHECK(std::abs(r.z[j]) < 4.0);
    }
  }
}

TEST_CASE("brute-force oracles") {
  const OracleProblem pr;
  SUBCASE("mixture oracle") {
    const auto oracle = mixture_oracle(pr.t, pr.ys, pr.pop, pr.h, false);
    const auto chain = mixture_chain(pr, 60000, 5);
    CHECK(chain.mean_omega == doctest::Approx(oracle.mean_omega).epsilon(0.05));
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(chain.mean_sigma2[i] == doctest::Approx(oracle.mean_sigma2[i]).epsilon(0.05));
      CHECK(chain.prob_gradual[i] == doctest::Approx(oracle.prob_gradual[i]).epsilon(0.05));
    }
  }
  SUBCASE("linear oracle") {
    const std::vector<TransitionCoefs> tr{{1.0, 2.5}, {0.0, 3.0}};
    const auto oracle = linear_oracle(pr.t, pr.ys, tr, pr.pop, pr.h);
    const auto chain = linear_chain(pr, tr, 60000, 6);
    for (int k = 0; k < 3; ++k)
      CHECK(chain.mean_mu_beta[k] == doctest::Approx(oracle.mean_mu_beta[k]).epsilon(0.05));
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(chain.mean_sigma2[i] == doctest::Approx(oracle.mean_sigma2[i]).epsilon(0.05));
  }
}

TEST_CASE("vague mean prior: results insensitive to h1") {
  const auto ds = small_dataset();
  auto h = small_hyper(ds);
  auto cs = short_chain(1500);
  const auto a = merge_chains({run_chain(ds, h, cs)});
  h.h1 = Eigen::Vector3d(50.0, 1.0, -1.0);
  const auto b = merge_chains({run_chain(ds, h, cs)});
  double ma = 0.0, mb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    ma += a.population[d].mu_beta[0] / a.size();
    mb += b.population[d].mu_beta[0] / b.size();
  }
  CHECK(std::abs(ma - mb) < 5.0);
}

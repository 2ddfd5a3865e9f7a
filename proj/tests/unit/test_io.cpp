#include "doctest.h"

#include <filesystem>

#include "bentcable/io.hpp"

using namespace bentcable;

TEST_CASE("hyperparameter JSON round trip") {
  auto h = default_hyperparameters(2, Eigen::Matrix3d::Identity() * 3.0, Eigen::Matrix2d::Identity() * 0.2);
  h.h1 << 1.0, 2.0, 3.0;
  h.A2(0, 1) = h.A2(1, 0) = 0.01;
  h.d0 = 0.5;
  const auto back = hyperparameters_from_json(to_json(h), default_hyperparameters(2, Eigen::Matrix3d::Identity(),
                                                                                   Eigen::Matrix2d::Identity()));
  CHECK(back.h1 == h.h1);
  CHECK(back.A1 == h.A1);
  CHECK(back.A2 == h.A2);
  CHECK(back.H3 == h.H3);
  CHECK(back.d0 == 0.5);
}

TEST_CASE("hyperparameter overrides") {
  const auto base = default_hyperparameters(1, Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity());
  const auto h = hyperparameters_from_json(json{{"c0", 2.0}, {"h3", {0.5}}}, base);
  CHECK(h.c0 == 2.0);
  CHECK(h.c1 == 1.0);
  CHECK(h.h3[0] == 0.5);
  CHECK_THROWS_AS(hyperparameters_from_json(json{{"c2", 1.0}}, base), std::invalid_argument);
  CHECK_THROWS_AS(hyperparameters_from_json(json{{"d0", -1.0}}, base), std::invalid_argument);
  CHECK_THROWS(hyperparameters_from_json(json{{"A1", {{1, 0}, {0, 1}}}}, base));
  CHECK_THROWS(hyperparameters_from_json(json::array(), base));
}

TEST_CASE("chain settings from JSON") {
  const auto s = chain_settings_from_json(json{{"iterations", 500}, {"seed", 9}, {"variant", "a-only"}}, ChainSettings{});
  CHECK(s.iterations == 500);
  CHECK(s.seed == 9);
  CHECK(s.variant == ModelVariant::AOnly);
  CHECK(s.burnin == ChainSettings{}.burnin);
  CHECK(to_json(s)["variant"] == "a-only");
}

TEST_CASE("scenario JSON round trip") {
  auto s = builtin_scenario("S3");
  s.seed = 77;
  const auto back = scenario_from_json(to_json(s));
  CHECK(back.name == "S3");
  CHECK(back.seed == 77);
  CHECK(back.ar.phi == s.ar.phi);
  CHECK(back.truth.Sigma_beta == s.truth.Sigma_beta);
  CHECK(back.sigma2 == s.sigma2);
  const auto derived = scenario_from_json(json{{"base", "S2"}, {"m", 3}, {"sigma2", {1.0, 1.0, 1.0}}});
  CHECK(derived.m == 3);
  CHECK(derived.truth.mu_tauA == 4.5);
  CHECK_THROWS(scenario_from_json(json{{"base", "S2"}, {"m", 3}}));
}

TEST_CASE("draws table round trip") {
  ChainOutput a;
  a.p = 1;
  for (int d = 0; d < 3; ++d) {
    PopulationParams pop;
    pop.mu_beta << 1.0 + d, 2.0, 3.0;
    pop.ar.phi = {0.25 * d};
    pop.omega = 0.125;
    a.population.push_back(pop);
    a.individuals.push_back({IndividualParams{{1, 2, 3}, {0.5, 4.0}, 1, 0.75}, IndividualParams{{1, 2, 3}, {0.0, 6.0}, 0, 1.5}});
    a.deviance.push_back(100.0 + d);
  }
  ChainOutput b = a;
  b.deviance = {7.0, 8.0, 9.0};
  const std::string csv = draws_to_csv({a, b});
  const auto cols = draw_columns(1, 2);
  CHECK(cols.size() == 21 + 14);
  CHECK(csv.rfind("chain,draw,deviance,omega,mu0", 0) == 0);
  const auto back = draws_from_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].p == 1);
  CHECK(back[1].deviance == b.deviance);
  CHECK(back[0].population[2].mu_beta[0] == 3.0);
  CHECK(back[0].population[1].ar.phi[0] == 0.25);
  CHECK(back[0].individuals[0][1].indicator == 0);
  CHECK(back[0].individuals[0][1].trans.tau == 6.0);
  CHECK(back[0].individuals[0][0].sigma2 == 0.75);
  CHECK(draws_to_csv(back) == csv);
  CHECK_THROWS_AS(draws_from_csv(""), std::invalid_argument);
  CHECK_THROWS_AS(draws_from_csv("chain,draw\n"), std::invalid_argument);
}

TEST_CASE("digest and file helpers") {
  CHECK(digest_hex("") == "cbf29ce484222325");
  CHECK(digest_hex("a") == "af63dc4c8601ec8c");
  CHECK(digest_hex("abc").size() == 16);
  const auto path = std::filesystem::temp_directory_path() / "bentcable_io_test.txt";
  write_text(path, "hello\n");
  CHECK(read_text(path) == "hello\n");
  std::filesystem::remove(path);
  CHECK_THROWS(read_text(path));
}

TEST_CASE("report serialization") {
  SummaryStats s = summarize_values("x", {1.0, 2.0, 3.0});
  const json j = to_json(s);
  CHECK(j["reported"] == "mean");
  CHECK(j["mean"] == 2.0);
  DicReport r;
  r.dic = 12.5;
  r.p = 2;
  CHECK(to_json(r)["dic"] == 12.5);
  CHECK(to_json(r)["p"] == 2);
}

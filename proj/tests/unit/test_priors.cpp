#include "doctest.h"

#include <cmath>

#include "bentcable/priors.hpp"
#include "bentcable/simulate.hpp"

using namespace bentcable;

TEST_CASE("vague defaults") {
  const auto h = default_hyperparameters(2, Eigen::Matrix3d::Identity() * 2.0, Eigen::Matrix2d::Identity() * 0.5);
  CHECK(h.ar_order() == 2);
  CHECK(h.H1(0, 0) == 1e4);
  CHECK(h.H2(1, 1) == 1e4);
  CHECK(h.H3(1, 1) == 1e4);
  CHECK(h.a1 == 1e4);
  CHECK(h.nu1 == 3.0);
  CHECK(h.nu2 == 2.0);
  CHECK(h.b0 == 1e-4);
  CHECK(h.d1 == 1e-4);
  CHECK(h.c0 == 1.0);
  CHECK(h.c1 == 1.0);
  CHECK(h.A1(0, 0) == 2.0);
  CHECK(h.A2(1, 1) == 0.5);
  CHECK_NOTHROW(h.validate());
  CHECK_THROWS_AS(default_hyperparameters(-1, Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(default_hyperparameters(0, -Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity()),
                  std::invalid_argument);
}

TEST_CASE("validate names the violated constraint") {
  auto h = default_hyperparameters(1, Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity());
  auto message = [](const Hyperparameters& x) {
    try {
      x.validate();
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  auto bad = h;
  bad.nu1 = 2.0;
  CHECK(message(bad).find("nu1") != std::string::npos);
  bad = h;
  bad.d0 = 0.0;
  CHECK(message(bad).find("d0") != std::string::npos);
  bad = h;
  bad.A2(0, 1) = bad.A2(1, 0) = 5.0;
  CHECK(message(bad).find("A2") != std::string::npos);
  bad = h;
  bad.h3 = Eigen::VectorXd::Zero(2);
  CHECK(message(bad).find("h3") != std::string::npos);
}

TEST_CASE("with_ar_order keeps existing phi prior entries") {
  auto h = default_hyperparameters(1, Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity());
  h.h3[0] = 0.5;
  h.H3(0, 0) = 2.0;
  const auto up = with_ar_order(h, 3);
  CHECK(up.ar_order() == 3);
  CHECK(up.h3[0] == 0.5);
  CHECK(up.h3[2] == 0.0);
  CHECK(up.H3(2, 2) == 2.0);
  CHECK(up.H3(0, 1) == 0.0);
  CHECK(with_ar_order(up, 0).ar_order() == 0);
  CHECK(with_ar_order(default_hyperparameters(0, Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity()), 1).H3(0, 0) ==
        1e4);
}

TEST_CASE("grid fit recovers a noise-free cable") {
  Profile p{"x", {}, {}};
  const BentCableCoefs b{50.0, 0.4, -0.9};
  const TransitionCoefs tr{8.0, 40.0};
  for (int j = 0; j < 100; ++j) {
    p.times.push_back(j);
    p.responses.push_back(bent_cable(j, b, tr));
  }
  const auto fit = fit_profile_grid(p);
  CHECK(fit.usable);
  CHECK(fit.trans.tau == doctest::Approx(40.0).epsilon(0.03));
  CHECK(fit.trans.gamma == doctest::Approx(8.0).epsilon(0.1));
  CHECK(fit.beta.beta1 == doctest::Approx(0.4).epsilon(0.05));
  CHECK(fit.beta.outgoing_slope() == doctest::Approx(-0.5).epsilon(0.05));
  CHECK(is_gradual_fit(fit, p.time_range()));

  // A hinge is recognised as abrupt.
  Profile q = p;
  for (int j = 0; j < 100; ++j) q.responses[j] = bent_cable(j, b, {0.0, 40.0});
  const auto qfit = fit_profile_grid(q);
  CHECK_FALSE(is_clearly_gradual_fit(qfit, q.time_range()));
  CHECK(qfit.trans.tau == doctest::Approx(40.0).epsilon(0.03));
}

TEST_CASE("least squares beta for a fixed transition") {
  Profile p{"x", {}, {}};
  const BentCableCoefs b{3.0, 1.0, -2.0};
  for (int j = 0; j < 12; ++j) {
    p.times.push_back(j);
    p.responses.push_back(bent_cable(j, b, {1.0, 6.0}));
  }
  BentCableCoefs est;
  const double rss = least_squares_beta(p, {1.0, 6.0}, est);
  CHECK(rss < 1e-18);
  CHECK(est.beta0 == doctest::Approx(3.0));
  CHECK(est.beta2 == doctest::Approx(-2.0));
}

TEST_CASE("degenerate elicitation falls back to the identity") {
  std::vector<Profile> ps;
  for (int i = 0; i < 3; ++i) ps.push_back(Profile{"c" + std::to_string(i), {0, 1, 2, 3, 4}, {1, 1, 1, 1, 1}});
  const auto s = elicit_scale_matrices(LongitudinalDataset(ps));
  CHECK(s.beta.isApprox(Eigen::Matrix3d::Identity()));
  CHECK(s.alpha.isApprox(Eigen::Matrix2d::Identity()));
  CHECK_FALSE(s.warnings.empty());
}

TEST_CASE("elicited beta scale has the right order of magnitude on S2") {
  const auto [ds, truth] = generate(builtin_scenario("S2"));
  const auto s = elicit_scale_matrices(ds);
  CHECK(s.fits.size() == ds.size());
  CHECK(s.beta(0, 0) > 125.0 / 10.0);
  CHECK(s.beta(0, 0) < 125.0 * 10.0);
  CHECK(is_spd(s.beta));
  CHECK(is_spd(s.alpha));
}

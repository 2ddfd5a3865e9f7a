#include "doctest.h"

#include <cmath>
#include <vector>

#include "bentcable/data.hpp"
#include "bentcable/model.hpp"

using namespace bentcable;

namespace {

bool rel_close(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace

TEST_CASE("q_basis examples") {
  CHECK(q_basis(2.0, {1.0, 4.0}) == 0.0);
  CHECK(rel_close(q_basis(5.0, {1.0, 4.0}), 1.0));
  CHECK(rel_close(q_basis(4.0, {1.0, 4.0}), 0.25));
  CHECK(rel_close(q_basis(5.0, {0.0, 4.0}), 1.0));
  CHECK(q_basis(3.0, {0.0, 4.0}) == 0.0);
  CHECK(q_basis(4.0, {0.0, 4.0}) == 0.0);
}

TEST_CASE("q_basis exact outside the bend") {
  const TransitionCoefs tr{2.5, 10.0};
  for (double t = -5.0; t <= 7.5; t += 0.25) CHECK(q_basis(t, tr) == 0.0);
  for (double t = 12.5; t <= 30.0; t += 0.25) CHECK(q_basis(t, tr) == t - 10.0);
}

TEST_CASE("q_basis is C1 at both knots") {
  const double h = 1e-7;
  for (double gamma : {0.5, 1.0, 3.0}) {
    const TransitionCoefs tr{gamma, 4.0};
    for (double knot : {4.0 - gamma, 4.0 + gamma}) {
      const double left = (q_basis(knot, tr) - q_basis(knot - h, tr)) / h;
      const double right = (q_basis(knot + h, tr) - q_basis(knot, tr)) / h;
      CHECK(std::abs(left - right) < 1e-6);
      CHECK(std::abs(q_basis(knot + 1e-12, tr) - q_basis(knot - 1e-12, tr)) < 1e-9);
    }
  }
}

TEST_CASE("broken-stick limit") {
  double prev = INFINITY;
  for (double gamma : {1.0, 0.1, 0.01, 1e-3}) {
    double sup = 0.0;
    for (double t = 0.0; t <= 8.0; t += 0.01) sup = std::max(sup, std::abs(q_basis(t, {gamma, 4.0}) - std::max(t - 4.0, 0.0)));
    CHECK(sup <= prev);
    prev = sup;
  }
  double sup = 0.0;
  for (double t = 0.0; t <= 8.0; t += 0.01) sup = std::max(sup, std::abs(q_basis(t, {1e-6, 4.0}) - std::max(t - 4.0, 0.0)));
  CHECK(sup < 1e-6);
}

TEST_CASE("bent_cable examples") {
  const BentCableCoefs b{244.0, 0.5, -0.75};
  CHECK(rel_close(bent_cable(7.0, b, {1.0, 4.0}), 245.25));
  CHECK(rel_close(bent_cable(0.0, b, {1.0, 4.0}), 244.0));
  const double t = 4.0 + 1.0 + 2.0;
  const double slope = bent_cable(t + 1.0, b, {1.0, 4.0}) - bent_cable(t, b, {1.0, 4.0});
  CHECK(rel_close(slope, -0.25, 1e-12));
  CHECK(b.outgoing_slope() == doctest::Approx(-0.25));
}

TEST_CASE("critical time point") {
  auto ctp = critical_time_point({0.0, 0.5, -0.75}, {1.0, 4.0});
  REQUIRE(ctp);
  CHECK(rel_close(*ctp, 4.0 + 1.0 / 3.0));
  CHECK_FALSE(critical_time_point({0.0, 0.5, -0.3}, {1.0, 4.0}));
  ctp = critical_time_point({0.0, 0.5, -0.75}, {0.0, 4.0});
  REQUIRE(ctp);
  CHECK(*ctp == 4.0);
  ctp = critical_time_point({0.0, 0.003, -0.016}, {9.46, 19.57});
  REQUIRE(ctp);
  CHECK(*ctp == doctest::Approx(13.657).epsilon(1e-4));
  CHECK_FALSE(critical_time_point({0.0, 0.5, 0.0}, {1.0, 4.0}));
}

TEST_CASE("critical time point is invariant to positive scaling of the slopes") {
  for (double c : {0.1, 1.0, 7.5, 1e3}) {
    const auto a = critical_time_point({1.0, 0.5, -0.75}, {2.0, 6.0});
    const auto b = critical_time_point({1.0, 0.5 * c, -0.75 * c}, {2.0, 6.0});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(rel_close(*a, *b, 1e-12));
  }
}

TEST_CASE("ar_transform examples") {
  const std::vector<double> t{0.0, 1.0, 2.0}, y{3.0, 5.0, 4.0}, q{0.0, 0.5, 1.5};
  auto tr = ar_transform(t, y, q, ArCoefs{});
  CHECK(tr.z == y);
  CHECK(tr.x == t);
  CHECK(tr.r == q);
  CHECK(tr.intercept == 1.0);

  const std::vector<double> t2{0.0, 1.0}, y2{10.0, 11.0}, q2{0.0, 0.0};
  tr = ar_transform(t2, y2, q2, ArCoefs{{0.7}});
  REQUIRE(tr.z.size() == 1);
  CHECK(rel_close(tr.z[0], 4.0));
  CHECK(rel_close(tr.x[0], 1.0));
  CHECK(rel_close(tr.intercept, 0.3));

  const std::vector<double> t3{0.0, 1.0, 2.0}, y3{1.0, 1.0, 1.0}, q3{0.0, 0.0, 0.0};
  tr = ar_transform(t3, y3, q3, ArCoefs{{0.8, -0.1}});
  REQUIRE(tr.z.size() == 1);
  CHECK(rel_close(tr.z[0], 0.3));

  CHECK_THROWS_AS(ar_transform(t2, y2, q2, ArCoefs{{0.5, 0.1}}), ModelSetupError);
}

TEST_CASE("AR stationarity predicate") {
  CHECK(ArCoefs{}.is_stationary());
  CHECK(ArCoefs{{0.99}}.is_stationary());
  CHECK_FALSE(ArCoefs{{1.0}}.is_stationary());
  CHECK_FALSE(ArCoefs{{-1.2}}.is_stationary());
  // AR(2) triangle: phi2 + phi1 < 1, phi2 - phi1 < 1, |phi2| < 1.
  for (double p1 = -2.1; p1 <= 2.1; p1 += 0.15)
    for (double p2 = -1.1; p2 <= 1.1; p2 += 0.15) {
      const bool inside = p2 + p1 < 1.0 && p2 - p1 < 1.0 && std::abs(p2) < 1.0;
      CHECK(ArCoefs{{p1, p2}}.is_stationary() == inside);
    }
}

TEST_CASE("level-1 log-likelihood") {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0};
  IndividualParams ind;
  ind.beta = {1.0, 2.0, -1.0};
  ind.trans = {0.0, 1.5};
  ind.sigma2 = 1.0;
  std::vector<double> y;
  for (double tt : t) y.push_back(bent_cable(tt, ind.beta, ind.trans));
  const LongitudinalDataset ds({Profile{"a", t, y}, Profile{"b", t, y}});
  const std::vector<IndividualParams> params{ind, ind};

  SUBCASE("zero residuals") {
    CHECK(rel_close(level1_loglik(ds, params, ArCoefs{}), -4.0 * std::log(2.0 * M_PI)));
  }
  SUBCASE("additive across individuals") {
    std::vector<IndividualParams> ps = params;
    ps[1].sigma2 = 2.5;
    ps[1].beta.beta0 = 0.3;
    const double total = level1_loglik(ds, ps, ArCoefs{{0.4}});
    const double parts = profile_loglik(t, y, ps[0], ArCoefs{{0.4}}) + profile_loglik(t, y, ps[1], ArCoefs{{0.4}});
    CHECK(rel_close(total, parts));
  }
  SUBCASE("AR(0) is the iid Gaussian regression likelihood") {
    std::vector<double> y2 = y;
    y2[1] += 0.7;
    y2[3] -= 0.2;
    IndividualParams p = ind;
    p.sigma2 = 0.8;
    double expect = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double e = y2[j] - bent_cable(t[j], p.beta, p.trans);
      expect += -0.5 * std::log(2.0 * M_PI * 0.8) - 0.5 * e * e / 0.8;
    }
    CHECK(rel_close(profile_loglik(t, y2, p, ArCoefs{}), expect));
  }
  SUBCASE("n = 3, p = 1 brute force") {
    const std::vector<double> t3{0.0, 1.0, 2.0}, y3{2.0, 3.5, 2.9};
    IndividualParams p;
    p.beta = {2.0, 1.0, -1.5};
    p.trans = {0.5, 1.0};
    p.sigma2 = 0.6;
    const double phi = 0.45;
    double expect = 0.0;
    for (std::size_t j = 1; j < 3; ++j) {
      const double mu = bent_cable(t3[j], p.beta, p.trans) + phi * (y3[j - 1] - bent_cable(t3[j - 1], p.beta, p.trans));
      expect += std::log(std::exp(-0.5 * (y3[j] - mu) * (y3[j] - mu) / 0.6) / std::sqrt(2.0 * M_PI * 0.6));
    }
    CHECK(rel_close(profile_loglik(t3, y3, p, ArCoefs{{phi}}), expect, 1e-12));
    CHECK(rel_close(conditional_mean(t3, y3, p, ArCoefs{{phi}}, 2),
                    bent_cable(2.0, p.beta, p.trans) + phi * (3.5 - bent_cable(1.0, p.beta, p.trans))));
  }
  SUBCASE("non-positive variance") {
    std::vector<IndividualParams> ps = params;
    ps[0].sigma2 = 0.0;
    CHECK_THROWS_AS(level1_loglik(ds, ps, ArCoefs{}), DomainError);
  }
}

TEST_CASE("innovations use filtered residuals") {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0}, y{1.0, 2.0, 2.5, 2.0};
  const BentCableCoefs b{1.0, 1.0, -1.5};
  const TransitionCoefs tr{0.5, 1.5};
  std::vector<double> v;
  innovations(t, y, b, tr, ArCoefs{{0.3, 0.2}}, v);
  REQUIRE(v.size() == 2);
  auto e = [&](std::size_t j) { return y[j] - bent_cable(t[j], b, tr); };
  CHECK(rel_close(v[0], e(2) - 0.3 * e(1) - 0.2 * e(0)));
  CHECK(rel_close(v[1], e(3) - 0.3 * e(2) - 0.2 * e(1)));
  CHECK(rel_close(innovation_ss(t, y, b, tr, ArCoefs{{0.3, 0.2}}), v[0] * v[0] + v[1] * v[1]));
}

#include "bentcable/model.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "bentcable/data.hpp"

namespace bentcable {

double ArCoefs::sum() const { return std::accumulate(phi.begin(), phi.end(), 0.0); }

bool ArCoefs::is_stationary() const {
  const int p = order();
  if (p == 0) return true;
  if (p == 1) return std::abs(phi[0]) < 1.0;
  // Roots of the characteristic polynomial lie outside the unit circle iff
  // the companion matrix has spectral radius below one.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (int k = 0; k < p; ++k) companion(0, k) = phi[k];
  for (int k = 1; k < p; ++k) companion(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff() < 1.0;
}

double q_basis(double t, const TransitionCoefs& trans) {
  const double d = t - trans.tau;
  if (trans.gamma == 0.0) return d > 0.0 ? d : 0.0;
  if (d <= -trans.gamma) return 0.0;
  // The quadratic branch equals d at d == gamma; return d so the outgoing
  // line is exact from the knot on.
  if (d >= trans.gamma) return d;
  const double u = d + trans.gamma;
  return u * u / (4.0 * trans.gamma);
}

double bent_cable(double t, const BentCableCoefs& lin, const TransitionCoefs& trans) {
  return lin.beta0 + lin.beta1 * t + lin.beta2 * q_basis(t, trans);
}

std::optional<double> critical_time_point(const BentCableCoefs& lin, const TransitionCoefs& trans) {
  if (lin.beta2 == 0.0) return std::nullopt;
  const double in = lin.beta1;
  const double out = lin.beta1 + lin.beta2;
  // A sign change needs strictly opposite signs on the two linear phases.
  if (!((in > 0.0 && out < 0.0) || (in < 0.0 && out > 0.0))) return std::nullopt;
  if (trans.gamma == 0.0) return trans.tau;
  return trans.tau - trans.gamma - 2.0 * lin.beta1 * trans.gamma / lin.beta2;
}

ArTransformed ar_transform(std::span<const double> times, std::span<const double> responses,
                           std::span<const double> basis, const ArCoefs& ar) {
  const std::size_t n = times.size();
  const std::size_t p = static_cast<std::size_t>(ar.order());
  if (responses.size() != n || basis.size() != n)
    throw ModelSetupError("ar_transform: times, responses and basis differ in length");
  if (n <= p)
    throw ModelSetupError("ar_transform: profile has " + std::to_string(n) +
                          " observations, AR order " + std::to_string(p) + " needs more");
  ArTransformed out;
  out.intercept = 1.0 - ar.sum();
  out.z.resize(n - p);
  out.x.resize(n - p);
  out.r.resize(n - p);
  for (std::size_t j = p; j < n; ++j) {
    double z = responses[j], x = times[j], r = basis[j];
    for (std::size_t k = 1; k <= p; ++k) {
      const double phi = ar.phi[k - 1];
      z -= phi * responses[j - k];
      x -= phi * times[j - k];
      r -= phi * basis[j - k];
    }
    out.z[j - p] = z;
    out.x[j - p] = x;
    out.r[j - p] = r;
  }
  return out;
}

double conditional_mean(std::span<const double> times, std::span<const double> responses,
                        const IndividualParams& ind, const ArCoefs& ar, std::size_t j) {
  const std::size_t p = static_cast<std::size_t>(ar.order());
  double x = times[j];
  double r = q_basis(times[j], ind.trans);
  double lagged = 0.0;
  for (std::size_t k = 1; k <= p; ++k) {
    const double phi = ar.phi[k - 1];
    x -= phi * times[j - k];
    r -= phi * q_basis(times[j - k], ind.trans);
    lagged += phi * responses[j - k];
  }
  return ind.beta.beta0 * (1.0 - ar.sum()) + ind.beta.beta1 * x + ind.beta.beta2 * r + lagged;
}

void innovations(std::span<const double> times, std::span<const double> responses,
                 const BentCableCoefs& lin, const TransitionCoefs& trans, const ArCoefs& ar,
                 std::vector<double>& out) {
  const std::size_t n = times.size();
  const std::size_t p = static_cast<std::size_t>(ar.order());
  if (n <= p) throw ModelSetupError("innovations: profile shorter than AR order");
  out.resize(n - p);
  if (p == 0) {
    for (std::size_t j = 0; j < n; ++j) out[j] = responses[j] - bent_cable(times[j], lin, trans);
    return;
  }
  // Raw residuals first, then the AR filter; this equals z - X beta.
  thread_local std::vector<double> e;
  e.resize(n);
  for (std::size_t j = 0; j < n; ++j) e[j] = responses[j] - bent_cable(times[j], lin, trans);
  for (std::size_t j = p; j < n; ++j) {
    double v = e[j];
    for (std::size_t k = 1; k <= p; ++k) v -= ar.phi[k - 1] * e[j - k];
    out[j - p] = v;
  }
}

double innovation_ss(std::span<const double> times, std::span<const double> responses,
                     const BentCableCoefs& lin, const TransitionCoefs& trans, const ArCoefs& ar) {
  thread_local std::vector<double> v;
  innovations(times, responses, lin, trans, ar, v);
  double ss = 0.0;
  for (double x : v) ss += x * x;
  return ss;
}

double profile_loglik(std::span<const double> times, std::span<const double> responses,
                      const IndividualParams& ind, const ArCoefs& ar) {
  if (!(ind.sigma2 > 0.0)) throw DomainError("level-1 variance must be positive");
  const double ss = innovation_ss(times, responses, ind.beta, ind.trans, ar);
  const double count = static_cast<double>(times.size() - static_cast<std::size_t>(ar.order()));
  return -0.5 * count * std::log(2.0 * std::numbers::pi * ind.sigma2) - 0.5 * ss / ind.sigma2;
}

double level1_loglik(const LongitudinalDataset& ds, std::span<const IndividualParams> params,
                     const ArCoefs& ar) {
  if (params.size() != ds.size())
    throw ModelSetupError("level1_loglik: parameter count does not match dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    total += profile_loglik(ds[i].times, ds[i].responses, params[i], ar);
  return total;
}

}  // namespace bentcable

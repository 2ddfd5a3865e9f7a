#include "bentcable/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bentcable {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return uniform_(engine_); }

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw NumericalError("gamma: shape and rate must be positive");
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  // Very small shapes underflow to zero; keep precisions strictly positive.
  return std::max(dist(engine_), std::numeric_limits<double>::min());
}

double Rng::beta(double a, double b) {
  const double x = gamma(a, 1.0);
  const double y = gamma(b, 1.0);
  return x / (x + y);
}

Eigen::VectorXd Rng::standard_normal(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = normal();
  return v;
}

bool is_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff())) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& spd, bool* rescued) {
  if (rescued) *rescued = false;
  Eigen::MatrixXd sym = 0.5 * (spd + spd.transpose());
  if (sym.allFinite()) {
    Eigen::LLT<Eigen::MatrixXd> llt(sym);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    const double jitter = 1e-10 * std::max(sym.trace(), std::numeric_limits<double>::min());
    sym.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> retry(sym);
    if (retry.info() == Eigen::Success) {
      if (rescued) *rescued = true;
      return retry.matrixL();
    }
  }
  throw NumericalError("Cholesky factorization failed after jitter");
}

Eigen::VectorXd draw_normal_canonical(Rng& rng, const Eigen::MatrixXd& precision,
                                      const Eigen::VectorXd& shift, bool* rescued) {
  const Eigen::MatrixXd L = robust_cholesky(precision, rescued);
  // mean = P^{-1} shift; draw = mean + L^{-T} eps.
  const auto Lv = L.triangularView<Eigen::Lower>();
  Eigen::VectorXd mean = Lv.solve(shift);
  mean = Lv.transpose().solve(mean);
  Eigen::VectorXd eps = rng.standard_normal(precision.rows());
  return mean + Lv.transpose().solve(eps);
}

Eigen::VectorXd draw_normal(Rng& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const Eigen::MatrixXd L = robust_cholesky(cov);
  return mean + L * rng.standard_normal(mean.size());
}

Eigen::MatrixXd draw_wishart(Rng& rng, double df, const Eigen::MatrixXd& scale, bool* rescued) {
  const Eigen::Index d = scale.rows();
  if (df <= static_cast<double>(d) - 1.0) throw NumericalError("Wishart degrees of freedom too small");
  const Eigen::MatrixXd L = robust_cholesky(scale, rescued);
  // Bartlett: A lower triangular, A_kk^2 ~ chi^2(df - k), A_kl ~ N(0,1).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    A(k, k) = std::sqrt(2.0 * rng.gamma(0.5 * (df - static_cast<double>(k)), 1.0));
    for (Eigen::Index l = 0; l < k; ++l) A(k, l) = rng.normal();
  }
  const Eigen::MatrixXd LA = L * A;
  Eigen::MatrixXd W = LA * LA.transpose();
  return 0.5 * (W + W.transpose());
}

double log_normal_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd u = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + logdet +
                 u.squaredNorm());
}

double log_normal_density(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

}  // namespace bentcable

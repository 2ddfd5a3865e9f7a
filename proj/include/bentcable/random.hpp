#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace bentcable {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 finalizer; expands one user seed into independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma with shape/rate parameterization (mean shape / rate).
  double gamma(double shape, double rate);
  double beta(double a, double b);
  bool bernoulli(double prob) { return uniform() < prob; }

  Eigen::VectorXd standard_normal(Eigen::Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Lower Cholesky factor of an SPD matrix. On failure adds
/// 1e-10 * trace * I once and retries; throws NumericalError if that fails
/// too. `rescued` is set when the jitter was needed.
Eigen::MatrixXd robust_cholesky(const Eigen::MatrixXd& spd, bool* rescued = nullptr);

bool is_spd(const Eigen::MatrixXd& m);

/// Draw from N(precision^{-1} * shift, precision^{-1}).
Eigen::VectorXd draw_normal_canonical(Rng& rng, const Eigen::MatrixXd& precision,
                                      const Eigen::VectorXd& shift, bool* rescued = nullptr);

/// Draw from N(mean, cov).
Eigen::VectorXd draw_normal(Rng& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

/// Wishart W(df, scale) with E[X] = df * scale (Bartlett decomposition).
Eigen::MatrixXd draw_wishart(Rng& rng, double df, const Eigen::MatrixXd& scale,
                             bool* rescued = nullptr);

/// log N(x; mean, cov) for a small dense covariance.
double log_normal_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov);
double log_normal_density(double x, double mean, double var);

}  // namespace bentcable

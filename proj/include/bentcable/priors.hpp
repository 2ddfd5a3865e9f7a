#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bentcable/data.hpp"
#include "bentcable/model.hpp"

namespace bentcable {

/// Level-3 constants. Gamma priors use the (shape/2, rate/2) convention:
/// sigma_i^{-2} ~ G(d0/2, d1/2), sigma_tauA^{-2} ~ G(b0/2, b1/2).
/// Wishart priors: Sigma_beta^{-1} ~ W(nu1, (nu1 A1)^{-1}) so that A1 is a
/// prior guess of Sigma_beta; likewise for Sigma_alpha with (nu2, A2).
struct Hyperparameters {
  Eigen::Vector3d h1 = Eigen::Vector3d::Zero();
  Eigen::Matrix3d H1 = 1e4 * Eigen::Matrix3d::Identity();
  Eigen::Vector2d h2 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d H2 = 1e4 * Eigen::Matrix2d::Identity();
  Eigen::VectorXd h3;
  Eigen::MatrixXd H3;
  double a0 = 0.0;
  double a1 = 1e4;
  double nu1 = 3.0;
  Eigen::Matrix3d A1 = Eigen::Matrix3d::Identity();
  double nu2 = 2.0;
  Eigen::Matrix2d A2 = Eigen::Matrix2d::Identity();
  double b0 = 1e-4, b1 = 1e-4;
  double c0 = 1.0, c1 = 1.0;
  double d0 = 1e-4, d1 = 1e-4;

  int ar_order() const { return static_cast<int>(h3.size()); }
  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

/// Vague defaults: zero means, 1e4 prior variances, nu equal to the matrix
/// order, gamma hyperparameters 1e-4 and a uniform prior on omega.
Hyperparameters default_hyperparameters(int p, const Eigen::Matrix3d& scale_beta,
                                        const Eigen::Matrix2d& scale_alpha);

/// Copy of `hyper` resized for AR order p. Existing phi prior entries are
/// kept; new ones get mean 0 and variance equal to the first diagonal entry
/// of H3 (1e4 when H3 is empty).
Hyperparameters with_ar_order(const Hyperparameters& hyper, int p);

/// Single-profile bent-cable fit by exhaustive grid over (tau, gamma) with
/// least squares for beta at each grid point.
struct CoarseFit {
  BentCableCoefs beta;
  TransitionCoefs trans;
  double rss = 0.0;
  double phi = 0.0;  ///< lag-1 residual autocorrelation used for prewhitening
  double rss_abrupt = 0.0;  ///< best rss with gamma fixed at 0
  std::size_t n_fit = 0;    ///< observations entering rss
  bool usable = true;

  /// Likelihood-ratio statistic n log(rss_abrupt / rss) of the gradual fit
  /// against the best abrupt one.
  double lr_gradual() const;
};

/// A coarse fit counts as gradual when its half-width exceeds this fraction
/// of the profile's time range.
inline constexpr double kGradualFitFraction = 0.02;
bool is_gradual_fit(const CoarseFit& fit, double time_range);
/// Stricter filter used for A2: gradual, and the bend improves on the
/// abrupt fit by more than the 5% chi-square(1) critical value.
bool is_clearly_gradual_fit(const CoarseFit& fit, double time_range);

struct GridSpec {
  int tau_points = 41;
  double tau_central_fraction = 0.8;
  int gamma_points = 20;
  /// Smallest positive gamma as a fraction of the largest (half the range).
  double gamma_min_fraction = 0.01;
  /// Refit on AR(1)-filtered data using the lag-1 autocorrelation of the
  /// first-pass residuals.
  bool prewhiten = true;
  /// Rounds of local pattern search around the best grid point.
  int refine_rounds = 12;
};

CoarseFit fit_profile_grid(const Profile& profile, const GridSpec& grid = {});

/// Least-squares beta for a fixed transition; returns rss. With AR
/// coefficients the fit is on the filtered data and rss is the innovation
/// sum of squares.
double least_squares_beta(const Profile& profile, const TransitionCoefs& trans, BentCableCoefs& beta,
                          const ArCoefs& ar = {});

struct ScaleMatrices {
  Eigen::Matrix3d beta = Eigen::Matrix3d::Identity();
  Eigen::Matrix2d alpha = Eigen::Matrix2d::Identity();
  std::vector<CoarseFit> fits;
  std::vector<std::string> warnings;
};

/// Sample covariances of per-profile coarse fits: beta-hat for the 3x3
/// matrix, (log gamma-hat, log tau-hat) over is_clearly_gradual_fit fits
/// for the 2x2 matrix. Constant profiles are excluded; with fewer than four usable
/// fits the corresponding matrix falls back to the identity.
ScaleMatrices elicit_scale_matrices(const LongitudinalDataset& ds, const GridSpec& grid = {});

}  // namespace bentcable

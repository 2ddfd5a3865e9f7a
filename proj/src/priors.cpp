#include "bentcable/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bentcable/random.hpp"

namespace bentcable {

void Hyperparameters::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("hyperparameters: " + what); };
  if (!is_spd(H1)) fail("H1 is not symmetric positive definite");
  if (!is_spd(H2)) fail("H2 is not symmetric positive definite");
  if (h3.size() != H3.rows() || H3.rows() != H3.cols()) fail("h3/H3 dimensions disagree");
  if (h3.size() > 0 && !is_spd(H3)) fail("H3 is not symmetric positive definite");
  if (!is_spd(A1)) fail("A1 is not symmetric positive definite");
  if (!is_spd(A2)) fail("A2 is not symmetric positive definite");
  if (!(nu1 >= 3.0)) fail("nu1 must be >= 3");
  if (!(nu2 >= 2.0)) fail("nu2 must be >= 2");
  if (!(a1 > 0.0)) fail("a1 must be positive");
  if (!(b0 > 0.0 && b1 > 0.0)) fail("b0 and b1 must be positive");
  if (!(c0 > 0.0 && c1 > 0.0)) fail("c0 and c1 must be positive");
  if (!(d0 > 0.0 && d1 > 0.0)) fail("d0 and d1 must be positive");
  if (!h1.allFinite() || !h2.allFinite() || !h3.allFinite() || !std::isfinite(a0))
    fail("prior means must be finite");
}

Hyperparameters default_hyperparameters(int p, const Eigen::Matrix3d& scale_beta,
                                        const Eigen::Matrix2d& scale_alpha) {
  if (p < 0) throw std::invalid_argument("AR order must be non-negative");
  if (!is_spd(scale_beta)) throw std::invalid_argument("scale_beta is not SPD");
  if (!is_spd(scale_alpha)) throw std::invalid_argument("scale_alpha is not SPD");
  Hyperparameters h;
  h.h3 = Eigen::VectorXd::Zero(p);
  h.H3 = 1e4 * Eigen::MatrixXd::Identity(p, p);
  h.A1 = scale_beta;
  h.A2 = scale_alpha;
  return h;
}

Hyperparameters with_ar_order(const Hyperparameters& hyper, int p) {
  Hyperparameters h = hyper;
  const double var = hyper.H3.size() > 0 ? hyper.H3(0, 0) : 1e4;
  const int keep = std::min<int>(p, static_cast<int>(hyper.h3.size()));
  h.h3 = Eigen::VectorXd::Zero(p);
  h.H3 = var * Eigen::MatrixXd::Identity(p, p);
  h.h3.head(keep) = hyper.h3.head(keep);
  h.H3.topLeftCorner(keep, keep) = hyper.H3.topLeftCorner(keep, keep);
  return h;
}

double least_squares_beta(const Profile& profile, const TransitionCoefs& trans, BentCableCoefs& beta,
                          const ArCoefs& ar) {
  Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
  Eigen::Vector3d xty = Eigen::Vector3d::Zero();
  if (ar.order() == 0) {
    for (std::size_t j = 0; j < profile.size(); ++j) {
      const Eigen::Vector3d row(1.0, profile.times[j], q_basis(profile.times[j], trans));
      xtx.noalias() += row * row.transpose();
      xty.noalias() += row * profile.responses[j];
    }
    // Column-pivoted QR copes with a basis that vanishes on the grid.
    const Eigen::Vector3d b = xtx.colPivHouseholderQr().solve(xty);
    beta = {b[0], b[1], b[2]};
    double rss = 0.0;
    for (std::size_t j = 0; j < profile.size(); ++j) {
      const double e = profile.responses[j] - bent_cable(profile.times[j], beta, trans);
      rss += e * e;
    }
    return rss;
  }
  std::vector<double> basis(profile.size());
  for (std::size_t j = 0; j < profile.size(); ++j) basis[j] = q_basis(profile.times[j], trans);
  const ArTransformed f = ar_transform(profile.times, profile.responses, basis, ar);
  for (std::size_t j = 0; j < f.z.size(); ++j) {
    const Eigen::Vector3d row(f.intercept, f.x[j], f.r[j]);
    xtx.noalias() += row * row.transpose();
    xty.noalias() += row * f.z[j];
  }
  const Eigen::Vector3d b = xtx.colPivHouseholderQr().solve(xty);
  beta = {b[0], b[1], b[2]};
  double rss = 0.0;
  for (std::size_t j = 0; j < f.z.size(); ++j) {
    const double e = f.z[j] - b[0] * f.intercept - b[1] * f.x[j] - b[2] * f.r[j];
    rss += e * e;
  }
  return rss;
}

double CoarseFit::lr_gradual() const {
  if (!(rss > 0.0) || !(rss_abrupt > 0.0)) return 0.0;
  return static_cast<double>(n_fit) * std::log(rss_abrupt / rss);
}

bool is_clearly_gradual_fit(const CoarseFit& fit, double time_range) {
  return is_gradual_fit(fit, time_range) && fit.lr_gradual() > 3.841;
}

bool is_gradual_fit(const CoarseFit& fit, double time_range) {
  return fit.usable && fit.trans.gamma > kGradualFitFraction * time_range;
}

CoarseFit fit_profile_grid(const Profile& profile, const GridSpec& grid) {
  CoarseFit best;
  const double t0 = profile.times.front();
  const double range = profile.time_range();
  const double n = static_cast<double>(profile.size());
  double mean = 0.0;
  for (double y : profile.responses) mean += y;
  mean /= n;
  double ss = 0.0;
  for (double y : profile.responses) ss += (y - mean) * (y - mean);
  if (!(range > 0.0) || ss <= 1e-12 * (1.0 + mean * mean) * n) {
    best.usable = false;
    best.beta = {mean, 0.0, 0.0};
    best.trans = {0.0, t0 + 0.5 * std::max(range, 1.0)};
    return best;
  }

  std::vector<double> gammas{0.0};
  const double gmax = 0.5 * range;
  const double gmin = grid.gamma_min_fraction * gmax;
  for (int k = 0; k < grid.gamma_points; ++k) {
    const double f = grid.gamma_points == 1 ? 1.0 : static_cast<double>(k) / (grid.gamma_points - 1);
    gammas.push_back(gmin * std::pow(gmax / gmin, f));
  }
  const double margin = 0.5 * (1.0 - grid.tau_central_fraction) * range;
  const double tau_lo = t0 + margin;
  const double tau_hi = t0 + range - margin;

  auto consider = [&](CoarseFit& cur, const TransitionCoefs& trans, const ArCoefs& ar) {
    if (!(trans.tau > 0.0) || trans.gamma < 0.0) return false;
    BentCableCoefs beta;
    const double rss = least_squares_beta(profile, trans, beta, ar);
    if (!(rss < cur.rss)) return false;
    cur.rss = rss;
    cur.beta = beta;
    cur.trans = trans;
    return true;
  };
  auto search = [&](const ArCoefs& ar) {
    CoarseFit cur;
    cur.rss = std::numeric_limits<double>::infinity();
    cur.n_fit = profile.size() - static_cast<std::size_t>(ar.order());
    for (int a = 0; a < grid.tau_points; ++a) {
      const double f = grid.tau_points == 1 ? 0.5 : static_cast<double>(a) / (grid.tau_points - 1);
      for (double g : gammas) consider(cur, TransitionCoefs{g, tau_lo + f * (tau_hi - tau_lo)}, ar);
    }
    if (!std::isfinite(cur.rss)) return cur;
    // Pattern search: tau moves additively, gamma multiplicatively (or
    // between 0 and the smallest grid value).
    double dt = grid.tau_points > 1 ? (tau_hi - tau_lo) / (grid.tau_points - 1) : 0.1 * range;
    double lr = grid.gamma_points > 1 ? std::log(gmax / gmin) / (grid.gamma_points - 1) : 0.5;
    for (int round = 0; round < grid.refine_rounds; ++round) {
      bool moved = false;
      const TransitionCoefs c = cur.trans;
      for (int dtau = -1; dtau <= 1; ++dtau) {
        const double tau = std::clamp(c.tau + dtau * dt, t0, t0 + range);
        if (c.gamma > 0.0) {
          for (int dg = -1; dg <= 1; ++dg)
            moved |= consider(cur, TransitionCoefs{std::min(c.gamma * std::exp(dg * lr), range), tau}, ar);
        } else {
          moved |= consider(cur, TransitionCoefs{0.0, tau}, ar);
          moved |= consider(cur, TransitionCoefs{gmin, tau}, ar);
        }
      }
      if (!moved) {
        dt *= 0.5;
        lr *= 0.5;
      }
    }
    // Same search restricted to gamma = 0 for the likelihood-ratio check.
    CoarseFit abrupt;
    abrupt.rss = std::numeric_limits<double>::infinity();
    for (int a = 0; a < grid.tau_points; ++a) {
      const double f = grid.tau_points == 1 ? 0.5 : static_cast<double>(a) / (grid.tau_points - 1);
      consider(abrupt, TransitionCoefs{0.0, tau_lo + f * (tau_hi - tau_lo)}, ar);
    }
    dt = grid.tau_points > 1 ? (tau_hi - tau_lo) / (grid.tau_points - 1) : 0.1 * range;
    for (int round = 0; round < grid.refine_rounds; ++round) {
      const double tau = abrupt.trans.tau;
      const bool moved = consider(abrupt, TransitionCoefs{0.0, std::clamp(tau - dt, t0, t0 + range)}, ar) |
                         consider(abrupt, TransitionCoefs{0.0, std::clamp(tau + dt, t0, t0 + range)}, ar);
      if (!moved) dt *= 0.5;
    }
    cur.rss_abrupt = abrupt.rss;
    return cur;
  };

  best = search(ArCoefs{});
  if (grid.prewhiten && std::isfinite(best.rss) && profile.size() >= 8) {
    std::vector<double> e(profile.size());
    for (std::size_t j = 0; j < e.size(); ++j)
      e[j] = profile.responses[j] - bent_cable(profile.times[j], best.beta, best.trans);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      den += e[j] * e[j];
      if (j > 0) num += e[j] * e[j - 1];
    }
    const double phi = den > 0.0 ? std::clamp(num / den, -0.95, 0.95) : 0.0;
    CoarseFit white = search(ArCoefs{{phi}});
    if (std::isfinite(white.rss)) {
      white.phi = phi;
      best = white;
    }
  }
  if (!std::isfinite(best.rss)) best.usable = false;
  return best;
}

namespace {

template <int N>
Eigen::Matrix<double, N, N> sample_covariance(const std::vector<Eigen::Matrix<double, N, 1>>& xs) {
  Eigen::Matrix<double, N, 1> mean = Eigen::Matrix<double, N, 1>::Zero();
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  Eigen::Matrix<double, N, N> cov = Eigen::Matrix<double, N, N>::Zero();
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= static_cast<double>(xs.size() - 1);
  if (!is_spd(cov)) cov += 1e-8 * Eigen::Matrix<double, N, N>::Identity();
  return cov;
}

}  // namespace

ScaleMatrices elicit_scale_matrices(const LongitudinalDataset& ds, const GridSpec& grid) {
  ScaleMatrices out;
  std::vector<Eigen::Vector3d> betas;
  std::vector<Eigen::Vector2d> logs;
  for (const auto& p : ds.profiles()) {
    CoarseFit fit = fit_profile_grid(p, grid);
    if (fit.usable) {
      betas.emplace_back(fit.beta.beta0, fit.beta.beta1, fit.beta.beta2);
      if (is_clearly_gradual_fit(fit, p.time_range())) logs.emplace_back(std::log(fit.trans.gamma), std::log(fit.trans.tau));
    }
    out.fits.push_back(fit);
  }
  if (betas.size() < 4) {
    out.warnings.push_back("fewer than 4 usable profiles for elicitation; using identity for A1");
  } else {
    out.beta = sample_covariance<3>(betas);
  }
  if (logs.size() < 4) {
    out.warnings.push_back("fewer than 4 gradual-transition fits for elicitation; using identity for A2");
  } else {
    out.alpha = sample_covariance<2>(logs);
  }
  return out;
}

}  // namespace bentcable

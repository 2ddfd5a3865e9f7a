#include "bentcable/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

namespace bentcable {

std::string to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Flexible: return "flexible";
    case ModelVariant::GOnly: return "g-only";
    case ModelVariant::AOnly: return "a-only";
  }
  return "flexible";
}

ModelVariant parse_variant(const std::string& s) {
  if (s == "flexible") return ModelVariant::Flexible;
  if (s == "g-only") return ModelVariant::GOnly;
  if (s == "a-only") return ModelVariant::AOnly;
  throw std::invalid_argument("unknown model variant '" + s + "' (expected flexible, g-only, a-only)");
}

int ModelState::count_gradual() const {
  int n = 0;
  for (const auto& ind : individuals) n += ind.indicator;
  return n;
}

PinnedBlocks PinnedBlocks::all() {
  PinnedBlocks b;
  b.beta = b.alpha = b.indicator = b.sigma2 = true;
  b.mu_beta = b.Sigma_beta = b.mu_alpha = b.Sigma_alpha = true;
  b.mu_tauA = b.sigma2_tauA = b.omega = b.phi = true;
  return b;
}

PinnedBlocks PinnedBlocks::population() {
  PinnedBlocks b;
  b.mu_beta = b.Sigma_beta = b.mu_alpha = b.Sigma_alpha = true;
  b.mu_tauA = b.sigma2_tauA = b.omega = b.phi = true;
  return b;
}

void ChainSettings::validate() const {
  if (iterations <= 0) throw std::invalid_argument("iterations must be positive");
  if (burnin < 0 || burnin >= iterations) throw std::invalid_argument("need 0 <= burnin < iterations");
  if (thin <= 0) throw std::invalid_argument("thin must be positive");
  if (adapt_window <= 0) throw std::invalid_argument("adapt_window must be positive");
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw std::invalid_argument("target_acceptance must lie in (0, 1)");
}

double ChainOutput::stationarity_proportion() const {
  if (phi_draws == 0) return 1.0;
  return static_cast<double>(stationary_draws) / static_cast<double>(phi_draws);
}

double ChainOutput::mean_alpha_acceptance() const {
  if (alpha_acceptance.empty()) return 0.0;
  double s = 0.0;
  for (double a : alpha_acceptance) s += a;
  return s / static_cast<double>(alpha_acceptance.size());
}

ChainOutput merge_chains(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw std::invalid_argument("merge_chains: no chains");
  ChainOutput out = chains.front();
  const double k = static_cast<double>(chains.size());
  for (std::size_t c = 1; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    if (ch.p != out.p || ch.variant != out.variant || ch.alpha_acceptance.size() != out.alpha_acceptance.size())
      throw std::invalid_argument("merge_chains: chains fit different models");
    out.population.insert(out.population.end(), ch.population.begin(), ch.population.end());
    out.individuals.insert(out.individuals.end(), ch.individuals.begin(), ch.individuals.end());
    out.deviance.insert(out.deviance.end(), ch.deviance.begin(), ch.deviance.end());
    for (std::size_t i = 0; i < out.alpha_acceptance.size(); ++i) {
      out.alpha_acceptance[i] += ch.alpha_acceptance[i];
      out.indicator_flips[i] += ch.indicator_flips[i];
    }
    out.phi_draws += ch.phi_draws;
    out.stationary_draws += ch.stationary_draws;
    out.cholesky_rescues += ch.cholesky_rescues;
    out.failed_updates += ch.failed_updates;
  }
  for (double& a : out.alpha_acceptance) a /= k;
  return out;
}

GibbsSampler::GibbsSampler(LongitudinalDataset ds, Hyperparameters hyper, ModelVariant variant,
                           std::uint64_t seed)
    : data_(std::move(ds)), hyper_(std::move(hyper)), variant_(variant), rng_(seed) {
  hyper_.validate();
  const auto p = static_cast<std::size_t>(hyper_.ar_order());
  for (const auto& prof : data_.profiles())
    if (prof.size() <= p)
      throw ModelSetupError("profile '" + prof.id + "' has " + std::to_string(prof.size()) +
                            " observations; AR order " + std::to_string(p) + " needs more");
  state_.individuals.resize(data_.size());
  state_.population.ar.phi.assign(p, 0.0);
}

void GibbsSampler::set_state(ModelState s) {
  if (s.individuals.size() != data_.size()) throw std::invalid_argument("state does not match dataset");
  if (s.population.ar.order() != hyper_.ar_order())
    throw std::invalid_argument("state AR order does not match hyperparameters");
  for (const auto& ind : s.individuals) {
    if (ind.indicator == 0 && ind.trans.gamma != 0.0)
      throw std::invalid_argument("abrupt individual with non-zero gamma");
    if (ind.indicator == 1 && !(ind.trans.gamma > 0.0))
      throw std::invalid_argument("gradual individual with non-positive gamma");
    if (!(ind.sigma2 > 0.0) || !(ind.trans.tau > 0.0))
      throw std::invalid_argument("state has non-positive variance or tau");
  }
  state_ = std::move(s);
}

double GibbsSampler::sum_squared_innovations(std::size_t i, const TransitionCoefs& trans) const {
  const auto& prof = data_[i];
  return innovation_ss(prof.times, prof.responses, state_.individuals[i].beta, trans, state_.population.ar);
}

double GibbsSampler::sum_squared_innovations(std::size_t i) const {
  return sum_squared_innovations(i, state_.individuals[i].trans);
}

BentCableCoefs GibbsSampler::draw_beta(std::size_t i) {
  auto& ind = state_.individuals[i];
  const auto& prof = data_[i];
  const auto& ar = state_.population.ar;
  thread_local std::vector<double> basis;
  basis.resize(prof.size());
  for (std::size_t j = 0; j < prof.size(); ++j) basis[j] = q_basis(prof.times[j], ind.trans);
  const ArTransformed tr = ar_transform(prof.times, prof.responses, basis, ar);

  Eigen::Matrix3d xtx = Eigen::Matrix3d::Zero();
  Eigen::Vector3d xtz = Eigen::Vector3d::Zero();
  for (std::size_t j = 0; j < tr.z.size(); ++j) {
    const Eigen::Vector3d row(tr.intercept, tr.x[j], tr.r[j]);
    xtx.noalias() += row * row.transpose();
    xtz.noalias() += row * tr.z[j];
  }
  const double prec = 1.0 / ind.sigma2;
  const Eigen::Matrix3d sigma_inv = state_.population.Sigma_beta.inverse();
  const Eigen::Matrix3d post_prec = prec * xtx + sigma_inv;
  const Eigen::Vector3d shift = prec * xtz + sigma_inv * state_.population.mu_beta;
  bool rescued = false;
  const Eigen::VectorXd b = draw_normal_canonical(rng_, post_prec, shift, &rescued);
  rescues_ += rescued;
  ind.beta = {b[0], b[1], b[2]};
  return ind.beta;
}

double GibbsSampler::log_alpha_kernel(std::size_t i, const TransitionCoefs& trans, int indicator) const {
  const auto& ind = state_.individuals[i];
  const auto& pop = state_.population;
  const double ss = sum_squared_innovations(i, trans);
  double lk = -0.5 * ss / ind.sigma2;
  const double kappa = std::log(trans.tau);
  if (indicator == 0) {
    const double d = kappa - pop.mu_tauA;
    lk += -kappa - 0.5 * d * d / pop.sigma2_tauA;
  } else {
    const Eigen::Vector2d xi(std::log(trans.gamma), kappa);
    const Eigen::Vector2d d = xi - pop.mu_alpha;
    lk += -xi[0] - xi[1] - 0.5 * d.dot(pop.Sigma_alpha.ldlt().solve(d));
  }
  return lk;
}

bool GibbsSampler::metropolis_alpha(std::size_t i, double step) {
  auto& ind = state_.individuals[i];
  const TransitionCoefs current = ind.trans;
  TransitionCoefs proposal = current;
  double log_jacobian = 0.0;
  proposal.tau = current.tau * std::exp(step * rng_.normal());
  log_jacobian += std::log(proposal.tau) - std::log(current.tau);
  if (ind.indicator == 1) {
    proposal.gamma = current.gamma * std::exp(step * rng_.normal());
    log_jacobian += std::log(proposal.gamma) - std::log(current.gamma);
  }
  if (!(proposal.tau > 0.0) || (ind.indicator == 1 && !(proposal.gamma > 0.0)) ||
      !std::isfinite(proposal.tau) || !std::isfinite(proposal.gamma))
    return false;
  // Random walk in log coordinates: the target there is the alpha kernel
  // times the Jacobian gamma * tau (or tau).
  const double log_ratio = log_alpha_kernel(i, proposal, ind.indicator) -
                           log_alpha_kernel(i, current, ind.indicator) + log_jacobian;
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0 || std::log(rng_.uniform()) < log_ratio) {
    ind.trans = proposal;
    return true;
  }
  return false;
}

double GibbsSampler::log_birth_ratio(std::size_t i, double gamma) const {
  const auto& ind = state_.individuals[i];
  const auto& pop = state_.population;
  const double tau = ind.trans.tau;
  const double kappa = std::log(tau);
  const double ss_abrupt = sum_squared_innovations(i, TransitionCoefs{0.0, tau});
  const double ss_gradual = sum_squared_innovations(i, TransitionCoefs{gamma, tau});
  const double dloglik = -0.5 * (ss_gradual - ss_abrupt) / ind.sigma2;
  const Eigen::Vector2d xi(std::log(gamma), kappa);
  // Prior densities are taken in (log gamma, log tau) and log tau; the 1/tau
  // factors cancel and the 1/gamma of the gradual prior cancels against the
  // proposal density of gamma.
  const double log_prior_g = log_normal_density(Eigen::VectorXd(xi), Eigen::VectorXd(pop.mu_alpha),
                                                Eigen::MatrixXd(pop.Sigma_alpha));
  const double log_prior_a = log_normal_density(kappa, pop.mu_tauA, pop.sigma2_tauA);
  const double log_proposal = log_normal_density(xi[0], pop.mu_alpha[0], pop.Sigma_alpha(0, 0));
  return dloglik + std::log(pop.omega) - std::log1p(-pop.omega) + log_prior_g - log_prior_a -
         log_proposal;
}

bool GibbsSampler::update_indicator(std::size_t i) {
  if (variant_ != ModelVariant::Flexible) return false;
  return joint_indicator_ ? update_indicator_joint(i) : update_indicator_fixed(i);
}

bool GibbsSampler::update_indicator_fixed(std::size_t i) {
  auto& ind = state_.individuals[i];
  const auto& pop = state_.population;
  if (ind.indicator == 0) {
    const double log_gamma = pop.mu_alpha[0] + std::sqrt(pop.Sigma_alpha(0, 0)) * rng_.normal();
    const double gamma = std::exp(log_gamma);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) return false;
    const double lr = log_birth_ratio(i, gamma);
    if (std::isnan(lr)) return false;
    if (lr >= 0.0 || std::log(rng_.uniform()) < lr) {
      ind.indicator = 1;
      ind.trans.gamma = gamma;
      return true;
    }
    return false;
  }
  const double lr = -log_birth_ratio(i, ind.trans.gamma);
  if (std::isnan(lr)) return false;
  if (lr >= 0.0 || std::log(rng_.uniform()) < lr) {
    ind.indicator = 0;
    ind.trans.gamma = 0.0;
    return true;
  }
  return false;
}

namespace {

double log_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_normal_prec(double x, double mean, double prec) {
  const double d = x - mean;
  return 0.5 * (std::log(prec) - std::log(2.0 * M_PI)) - 0.5 * prec * d * d;
}

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

/// Proposal for (mu_tauA, rho = 1/sigma2_tauA) given the log-centres of the
/// abrupt population. rho follows the gamma it would have with mu at the
/// sample mean and a flat mu prior; mu | rho is its exact conditional. With
/// no members this is the prior.
struct AbruptProposal {
  double shape, rate, sum, m, a0, a1;

  AbruptProposal(const std::vector<double>& kappas, const Hyperparameters& h)
      : m(static_cast<double>(kappas.size())), a0(h.a0), a1(h.a1) {
    sum = 0.0;
    for (double k : kappas) sum += k;
    double ss = 0.0;
    for (double k : kappas) ss += (k - sum / std::max(m, 1.0)) * (k - sum / std::max(m, 1.0));
    shape = 0.5 * (h.b0 + std::max(m - 1.0, 0.0));
    rate = 0.5 * (h.b1 + ss);
  }
  double mu_prec(double rho) const { return m * rho + 1.0 / a1; }
  double mu_mean(double rho) const { return (rho * sum + a0 / a1) / mu_prec(rho); }
  double log_density(double mu, double rho) const {
    return log_gamma_pdf(rho, shape, rate) + log_normal_prec(mu, mu_mean(rho), mu_prec(rho));
  }
};

}  // namespace

bool GibbsSampler::update_indicator_joint(std::size_t i) {
  auto& ind = state_.individuals[i];
  auto& pop = state_.population;
  const double kappa_i = std::log(ind.trans.tau);
  std::vector<double> others;
  double g_others = 0.0;
  for (std::size_t j = 0; j < state_.individuals.size(); ++j) {
    if (j == i) continue;
    const auto& o = state_.individuals[j];
    if (o.indicator == 0) others.push_back(std::log(o.trans.tau));
    else g_others += 1.0;
  }
  const double a_others = static_cast<double>(others.size());

  // Log joint density of (mu_tauA, rho) and the abrupt log-centres.
  auto log_abrupt = [&](const std::vector<double>& kappas, double mu, double rho) {
    double lp = log_normal_density(mu, hyper_.a0, hyper_.a1) + log_gamma_pdf(rho, 0.5 * hyper_.b0, 0.5 * hyper_.b1);
    for (double k : kappas) lp += log_normal_prec(k, mu, rho);
    return lp;
  };

  std::vector<double> with_i = others;
  with_i.push_back(kappa_i);
  const bool to_gradual = ind.indicator == 0;
  const std::vector<double>& old_set = to_gradual ? with_i : others;
  const std::vector<double>& new_set = to_gradual ? others : with_i;

  double gamma = ind.trans.gamma;
  if (to_gradual) {
    gamma = std::exp(pop.mu_alpha[0] + std::sqrt(pop.Sigma_alpha(0, 0)) * rng_.normal());
    if (!(gamma > 0.0) || !std::isfinite(gamma)) return false;
  }
  const double ss_abrupt = sum_squared_innovations(i, TransitionCoefs{0.0, ind.trans.tau});
  const double ss_gradual = sum_squared_innovations(i, TransitionCoefs{gamma, ind.trans.tau});
  const Eigen::Vector2d xi(std::log(gamma), kappa_i);
  // Gradual-side terms of the birth ratio; the abrupt prior enters through
  // the (mu_tauA, rho) block below.
  double lr = -0.5 * (ss_gradual - ss_abrupt) / ind.sigma2 +
              log_normal_density(Eigen::VectorXd(xi), Eigen::VectorXd(pop.mu_alpha), Eigen::MatrixXd(pop.Sigma_alpha)) -
              log_normal_density(xi[0], pop.mu_alpha[0], pop.Sigma_alpha(0, 0));
  if (!to_gradual) lr = -lr;
  // omega is integrated against its beta conditional and redrawn on
  // acceptance.
  const double g_new = g_others + (to_gradual ? 1.0 : 0.0);
  const double a_new = a_others + (to_gradual ? 0.0 : 1.0);
  const double g_old = g_others + (to_gradual ? 0.0 : 1.0);
  const double a_old = a_others + (to_gradual ? 1.0 : 0.0);
  lr += log_beta_fn(g_new + hyper_.c0, a_new + hyper_.c1) - log_beta_fn(g_old + hyper_.c0, a_old + hyper_.c1);

  const AbruptProposal q_old(old_set, hyper_);
  const AbruptProposal q_new(new_set, hyper_);
  const double rho_old = 1.0 / pop.sigma2_tauA;
  const double rho_new = rng_.gamma(q_new.shape, q_new.rate);
  const double mu_new = q_new.mu_mean(rho_new) + rng_.normal() / std::sqrt(q_new.mu_prec(rho_new));
  lr += log_abrupt(new_set, mu_new, rho_new) - log_abrupt(old_set, pop.mu_tauA, rho_old) +
        q_old.log_density(pop.mu_tauA, rho_old) - q_new.log_density(mu_new, rho_new);
  if (std::isnan(lr)) return false;
  if (!(lr >= 0.0 || std::log(rng_.uniform()) < lr)) return false;
  ind.indicator = to_gradual ? 1 : 0;
  ind.trans.gamma = to_gradual ? gamma : 0.0;
  pop.mu_tauA = mu_new;
  pop.sigma2_tauA = 1.0 / rho_new;
  pop.omega = rng_.beta(g_new + hyper_.c0, a_new + hyper_.c1);
  return true;
}

double GibbsSampler::draw_sigma2(std::size_t i) {
  auto& ind = state_.individuals[i];
  const double count = static_cast<double>(data_[i].size()) - ar_order();
  const double ss = sum_squared_innovations(i);
  const double precision = rng_.gamma(0.5 * (count + hyper_.d0), 0.5 * (ss + hyper_.d1));
  ind.sigma2 = 1.0 / precision;
  return ind.sigma2;
}

Eigen::Vector3d GibbsSampler::draw_mu_beta() {
  auto& pop = state_.population;
  const double m = static_cast<double>(state_.individuals.size());
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& ind : state_.individuals) sum += Eigen::Vector3d(ind.beta.beta0, ind.beta.beta1, ind.beta.beta2);
  const Eigen::Matrix3d sigma_inv = pop.Sigma_beta.inverse();
  const Eigen::Matrix3d h_inv = hyper_.H1.inverse();
  bool rescued = false;
  const Eigen::VectorXd mu = draw_normal_canonical(rng_, m * sigma_inv + h_inv,
                                                   sigma_inv * sum + h_inv * hyper_.h1, &rescued);
  rescues_ += rescued;
  pop.mu_beta = mu;
  return pop.mu_beta;
}

Eigen::Matrix3d GibbsSampler::draw_Sigma_beta() {
  auto& pop = state_.population;
  Eigen::Matrix3d scatter = hyper_.nu1 * hyper_.A1;
  for (const auto& ind : state_.individuals) {
    const Eigen::Vector3d d = Eigen::Vector3d(ind.beta.beta0, ind.beta.beta1, ind.beta.beta2) - pop.mu_beta;
    scatter.noalias() += d * d.transpose();
  }
  const double df = static_cast<double>(state_.individuals.size()) + hyper_.nu1;
  bool rescued = false;
  const Eigen::MatrixXd precision = draw_wishart(rng_, df, scatter.inverse(), &rescued);
  rescues_ += rescued;
  const Eigen::MatrixXd cov = precision.inverse();
  if (!is_spd(cov)) throw NumericalError("Sigma_beta draw is not positive definite");
  pop.Sigma_beta = 0.5 * (cov + cov.transpose());
  return pop.Sigma_beta;
}

Eigen::Vector2d GibbsSampler::draw_mu_alpha() {
  auto& pop = state_.population;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  double m_g = 0.0;
  for (const auto& ind : state_.individuals) {
    if (ind.indicator != 1) continue;
    sum += Eigen::Vector2d(std::log(ind.trans.gamma), std::log(ind.trans.tau));
    m_g += 1.0;
  }
  const Eigen::Matrix2d sigma_inv = pop.Sigma_alpha.inverse();
  const Eigen::Matrix2d h_inv = hyper_.H2.inverse();
  bool rescued = false;
  const Eigen::VectorXd mu = draw_normal_canonical(rng_, m_g * sigma_inv + h_inv,
                                                   sigma_inv * sum + h_inv * hyper_.h2, &rescued);
  rescues_ += rescued;
  pop.mu_alpha = mu;
  return pop.mu_alpha;
}

Eigen::Matrix2d GibbsSampler::draw_Sigma_alpha() {
  auto& pop = state_.population;
  Eigen::Matrix2d scatter = hyper_.nu2 * hyper_.A2;
  double m_g = 0.0;
  for (const auto& ind : state_.individuals) {
    if (ind.indicator != 1) continue;
    const Eigen::Vector2d d = Eigen::Vector2d(std::log(ind.trans.gamma), std::log(ind.trans.tau)) - pop.mu_alpha;
    scatter.noalias() += d * d.transpose();
    m_g += 1.0;
  }
  bool rescued = false;
  const Eigen::MatrixXd precision = draw_wishart(rng_, m_g + hyper_.nu2, scatter.inverse(), &rescued);
  rescues_ += rescued;
  const Eigen::MatrixXd cov = precision.inverse();
  if (!is_spd(cov)) throw NumericalError("Sigma_alpha draw is not positive definite");
  pop.Sigma_alpha = 0.5 * (cov + cov.transpose());
  return pop.Sigma_alpha;
}

double GibbsSampler::draw_mu_tauA() {
  auto& pop = state_.population;
  double sum = 0.0, m_a = 0.0;
  for (const auto& ind : state_.individuals) {
    if (ind.indicator != 0) continue;
    sum += std::log(ind.trans.tau);
    m_a += 1.0;
  }
  const double prec = 1.0 / pop.sigma2_tauA;
  const double post_prec = m_a * prec + 1.0 / hyper_.a1;
  const double mean = (prec * sum + hyper_.a0 / hyper_.a1) / post_prec;
  pop.mu_tauA = mean + rng_.normal() / std::sqrt(post_prec);
  return pop.mu_tauA;
}

double GibbsSampler::draw_sigma2_tauA() {
  auto& pop = state_.population;
  double ss = 0.0, m_a = 0.0;
  for (const auto& ind : state_.individuals) {
    if (ind.indicator != 0) continue;
    const double d = std::log(ind.trans.tau) - pop.mu_tauA;
    ss += d * d;
    m_a += 1.0;
  }
  pop.sigma2_tauA = 1.0 / rng_.gamma(0.5 * (m_a + hyper_.b0), 0.5 * (ss + hyper_.b1));
  return pop.sigma2_tauA;
}

double GibbsSampler::draw_omega() {
  auto& pop = state_.population;
  const double m_g = state_.count_gradual();
  const double m_a = static_cast<double>(state_.individuals.size()) - m_g;
  pop.omega = rng_.beta(m_g + hyper_.c0, m_a + hyper_.c1);
  return pop.omega;
}

bool GibbsSampler::draw_phi() {
  const int p = ar_order();
  auto& pop = state_.population;
  if (p == 0) return true;
  Eigen::MatrixXd prec = hyper_.H3.inverse();
  Eigen::VectorXd shift = prec * hyper_.h3;
  thread_local std::vector<double> e;
  Eigen::VectorXd w(p);
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const auto& prof = data_[i];
    const auto& ind = state_.individuals[i];
    e.resize(prof.size());
    for (std::size_t j = 0; j < prof.size(); ++j)
      e[j] = prof.responses[j] - bent_cable(prof.times[j], ind.beta, ind.trans);
    const double s = 1.0 / ind.sigma2;
    for (std::size_t j = static_cast<std::size_t>(p); j < prof.size(); ++j) {
      for (int k = 0; k < p; ++k) w[k] = e[j - 1 - static_cast<std::size_t>(k)];
      prec.noalias() += s * w * w.transpose();
      shift.noalias() += s * w * e[j];
    }
  }
  bool rescued = false;
  const Eigen::VectorXd phi = draw_normal_canonical(rng_, prec, shift, &rescued);
  rescues_ += rescued;
  pop.ar.phi.assign(phi.data(), phi.data() + p);
  return pop.ar.is_stationary();
}

double GibbsSampler::deviance() const {
  return -2.0 * level1_loglik(data_, state_.individuals, state_.population.ar);
}

ModelState initial_state(const LongitudinalDataset& ds, const Hyperparameters& hyper, ModelVariant variant) {
  ModelState s;
  const std::size_t m = ds.size();
  s.individuals.resize(m);
  std::vector<Eigen::Vector3d> betas;
  std::vector<Eigen::Vector2d> xis;
  std::vector<double> kappas;
  double mid_sum = 0.0, range_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Profile& prof = ds[i];
    const CoarseFit fit = fit_profile_grid(prof);
    const double range = prof.time_range();
    const double threshold = kGradualFitFraction * range;
    mid_sum += prof.times.front() + 0.5 * range;
    range_sum += range;
    IndividualParams& ind = s.individuals[i];
    ind.trans.tau = fit.trans.tau > 0.0 ? fit.trans.tau : std::max(prof.times.front() + 0.5 * range, 1e-3);
    bool gradual = is_gradual_fit(fit, range);
    if (variant == ModelVariant::GOnly) gradual = true;
    if (variant == ModelVariant::AOnly) gradual = false;
    ind.indicator = gradual ? 1 : 0;
    ind.trans.gamma = gradual ? std::max(fit.trans.gamma, std::max(threshold, 1e-3)) : 0.0;
    const double rss = least_squares_beta(prof, ind.trans, ind.beta);
    const double n = static_cast<double>(prof.size());
    double var_y = 0.0, mean_y = 0.0;
    for (double y : prof.responses) mean_y += y / n;
    for (double y : prof.responses) var_y += (y - mean_y) * (y - mean_y) / n;
    ind.sigma2 = std::max(n > 5.0 ? rss / (n - 5.0) : rss / n, 1e-6 * (1.0 + var_y));
    betas.emplace_back(ind.beta.beta0, ind.beta.beta1, ind.beta.beta2);
    if (gradual) xis.emplace_back(std::log(ind.trans.gamma), std::log(ind.trans.tau));
    else kappas.push_back(std::log(ind.trans.tau));
  }
  auto& pop = s.population;
  pop.mu_beta.setZero();
  for (const auto& b : betas) pop.mu_beta += b / static_cast<double>(m);
  pop.Sigma_beta = hyper.A1;
  if (m >= 4) {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& b : betas) cov += (b - pop.mu_beta) * (b - pop.mu_beta).transpose();
    cov /= static_cast<double>(m - 1);
    if (is_spd(cov)) pop.Sigma_beta = cov;
  }
  const double mid = mid_sum / static_cast<double>(m);
  const double range = range_sum / static_cast<double>(m);
  if (!xis.empty()) {
    pop.mu_alpha.setZero();
    for (const auto& x : xis) pop.mu_alpha += x / static_cast<double>(xis.size());
  } else {
    pop.mu_alpha = Eigen::Vector2d(std::log(std::max(0.1 * range, 1e-3)), std::log(std::max(mid, 1e-3)));
  }
  pop.Sigma_alpha = hyper.A2;
  if (!kappas.empty()) {
    double mean = 0.0;
    for (double k : kappas) mean += k / static_cast<double>(kappas.size());
    pop.mu_tauA = mean;
    double var = 0.0;
    for (double k : kappas) var += (k - mean) * (k - mean);
    pop.sigma2_tauA = kappas.size() >= 2 && var > 1e-6 ? var / static_cast<double>(kappas.size() - 1) : 0.05;
  } else {
    pop.mu_tauA = std::log(std::max(mid, 1e-3));
    pop.sigma2_tauA = 0.05;
  }
  pop.omega = std::clamp(static_cast<double>(xis.size()) / static_cast<double>(m), 0.05, 0.95);
  pop.ar.phi.assign(static_cast<std::size_t>(hyper.ar_order()), 0.0);
  return s;
}

ChainOutput run_chain(const LongitudinalDataset& ds, const Hyperparameters& hyper,
                      const ChainSettings& settings) {
  settings.validate();
  GibbsSampler sampler(ds, hyper, settings.variant, settings.seed);
  sampler.set_state(settings.initial_state ? *settings.initial_state
                                           : initial_state(ds, hyper, settings.variant));
  const std::size_t m = ds.size();
  const auto& pin = settings.pinned;
  // The joint move redraws omega and the abrupt-population block, so it is
  // only used when all of them are free.
  sampler.set_joint_indicator_move(!pin.omega && !pin.mu_tauA && !pin.sigma2_tauA);

  ChainOutput out;
  out.p = hyper.ar_order();
  out.variant = settings.variant;
  out.seed = settings.seed;
  out.iterations = settings.iterations;
  out.burnin = settings.burnin;
  out.thin = settings.thin;
  out.indicator_flips.assign(m, 0);
  out.population.reserve(static_cast<std::size_t>(settings.retained_draws()));
  if (settings.store_individuals) out.individuals.reserve(static_cast<std::size_t>(settings.retained_draws()));

  std::vector<double> step_g(m, settings.initial_step), step_a(m, settings.initial_step);
  std::vector<int> win_acc_g(m, 0), win_try_g(m, 0), win_acc_a(m, 0), win_try_a(m, 0);
  std::vector<long> post_acc(m, 0), post_try(m, 0);
  int adapt_round = 0;
  int failed_iterations = 0;
  const int failure_budget = std::max(1, settings.iterations / 1000);

  for (int it = 0; it < settings.iterations; ++it) {
    const bool post_burnin = it >= settings.burnin;
    bool failed = false;
    auto guarded = [&](auto&& update) {
      try {
        update();
      } catch (const NumericalError&) {
        failed = true;
        ++out.failed_updates;
      }
    };
    if (!pin.beta)
      for (std::size_t i = 0; i < m; ++i) guarded([&] { sampler.draw_beta(i); });
    if (!pin.alpha) {
      for (std::size_t i = 0; i < m; ++i) {
        const bool gradual = sampler.state().individuals[i].indicator == 1;
        const bool accepted = sampler.metropolis_alpha(i, gradual ? step_g[i] : step_a[i]);
        if (gradual) {
          ++win_try_g[i];
          win_acc_g[i] += accepted;
        } else {
          ++win_try_a[i];
          win_acc_a[i] += accepted;
        }
        if (post_burnin) {
          ++post_try[i];
          post_acc[i] += accepted;
        }
      }
    }
    if (!pin.indicator)
      for (std::size_t i = 0; i < m; ++i) out.indicator_flips[i] += sampler.update_indicator(i);
    if (!pin.sigma2)
      for (std::size_t i = 0; i < m; ++i) sampler.draw_sigma2(i);
    if (!pin.mu_beta) guarded([&] { sampler.draw_mu_beta(); });
    if (!pin.Sigma_beta) guarded([&] { sampler.draw_Sigma_beta(); });
    if (!pin.mu_alpha) guarded([&] { sampler.draw_mu_alpha(); });
    if (!pin.Sigma_alpha) guarded([&] { sampler.draw_Sigma_alpha(); });
    if (!pin.mu_tauA) sampler.draw_mu_tauA();
    if (!pin.sigma2_tauA) sampler.draw_sigma2_tauA();
    if (!pin.omega) sampler.draw_omega();
    if (!pin.phi && out.p > 0) {
      bool stationary = true;
      bool drawn = false;
      guarded([&] {
        stationary = sampler.draw_phi();
        drawn = true;
      });
      if (drawn && post_burnin) {
        ++out.phi_draws;
        out.stationary_draws += stationary;
      }
    }

    if (failed && ++failed_iterations > failure_budget)
      throw NumericalError("Cholesky failures in " + std::to_string(failed_iterations) +
                           " iterations exceed 0.1% of the run (iteration " + std::to_string(it) + ")");

    if (settings.adapt && !post_burnin && (it + 1) % settings.adapt_window == 0) {
      ++adapt_round;
      const double gain = 1.0 / std::sqrt(static_cast<double>(adapt_round));
      auto adjust = [&](double& step, int& acc, int& tries) {
        if (tries > 0) {
          const double rate = static_cast<double>(acc) / tries;
          step = std::clamp(step * std::exp(gain * (rate - settings.target_acceptance)), 1e-4, 5.0);
        }
        acc = tries = 0;
      };
      for (std::size_t i = 0; i < m; ++i) {
        adjust(step_g[i], win_acc_g[i], win_try_g[i]);
        adjust(step_a[i], win_acc_a[i], win_try_a[i]);
      }
    }

    if (post_burnin && (it - settings.burnin + 1) % settings.thin == 0) {
      out.population.push_back(sampler.state().population);
      if (settings.store_individuals) out.individuals.push_back(sampler.state().individuals);
      out.deviance.push_back(sampler.deviance());
    }
  }

  out.alpha_acceptance.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    out.alpha_acceptance[i] = post_try[i] > 0 ? static_cast<double>(post_acc[i]) / post_try[i] : 0.0;
  out.step_gradual = step_g;
  out.step_abrupt = step_a;
  out.cholesky_rescues = sampler.cholesky_rescues();
  return out;
}

int default_thread_count() {
  if (const char* env = std::getenv("BENTCABLE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ChainOutput> run_chains(const LongitudinalDataset& ds, const Hyperparameters& hyper,
                                    const ChainSettings& settings, int chains, int threads) {
  if (chains <= 0) throw std::invalid_argument("chain count must be positive");
  std::vector<ChainOutput> outputs(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int c = next++; c < chains; c = next++) {
      ChainSettings s = settings;
      s.seed = chains == 1 ? settings.seed : derive_seed(settings.seed, static_cast<std::uint64_t>(c));
      try {
        outputs[static_cast<std::size_t>(c)] = run_chain(ds, hyper, s);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(threads, 1, chains);
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outputs;
}

}  // namespace bentcable

#include "bentcable/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "bentcable/priors.hpp"
#include "bentcable/summarize.hpp"

namespace bentcable {

void ScenarioSpec::validate() const {
  if (m < 1) throw std::invalid_argument("scenario: m must be positive");
  if (n < 2) throw std::invalid_argument("scenario: n must be at least 2");
  if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("scenario: omega must lie in [0, 1]");
  if (static_cast<int>(sigma2.size()) != m)
    throw std::invalid_argument("scenario: sigma2 list has " + std::to_string(sigma2.size()) + " entries, m = " +
                                std::to_string(m));
  for (double s : sigma2)
    if (!(s >= 0.0)) throw std::invalid_argument("scenario: innovation variances must be non-negative");
  // Positive semi-definite is enough for generation (a zero matrix pins
  // every individual at the population value).
  Eigen::LDLT<Eigen::Matrix3d> lb(truth.Sigma_beta);
  Eigen::LDLT<Eigen::Matrix2d> la(truth.Sigma_alpha);
  if (lb.info() != Eigen::Success || (lb.vectorD().array() < -1e-12).any())
    throw std::invalid_argument("scenario: Sigma_beta is not positive semi-definite");
  if (la.info() != Eigen::Success || (la.vectorD().array() < -1e-12).any())
    throw std::invalid_argument("scenario: Sigma_alpha is not positive semi-definite");
  if (!(truth.sigma2_tauA >= 0.0)) throw std::invalid_argument("scenario: sigma2_tauA must be non-negative");
  if (!ar.is_stationary()) throw std::invalid_argument("scenario: AR coefficients are not stationary");
  if (ar_burnin < 0) throw std::invalid_argument("scenario: ar_burnin must be non-negative");
}

namespace {

Eigen::VectorXd draw_psd_normal(Rng& rng, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * sd.cwiseProduct(rng.standard_normal(mean.size()));
}

}  // namespace

std::vector<double> simulate_responses(std::span<const double> times, const IndividualParams& ind,
                                       const ArCoefs& ar, int ar_burnin, Rng& rng) {
  const std::size_t p = static_cast<std::size_t>(ar.order());
  const double sd = std::sqrt(ind.sigma2);
  const std::size_t total = static_cast<std::size_t>(ar_burnin) + times.size();
  std::vector<double> eps(total + p, 0.0);
  for (std::size_t j = p; j < eps.size(); ++j) {
    double e = sd * rng.normal();
    for (std::size_t k = 1; k <= p; ++k) e += ar.phi[k - 1] * eps[j - k];
    eps[j] = e;
  }
  std::vector<double> y(times.size());
  const std::size_t offset = p + static_cast<std::size_t>(ar_burnin);
  for (std::size_t j = 0; j < times.size(); ++j) y[j] = bent_cable(times[j], ind.beta, ind.trans) + eps[offset + j];
  return y;
}

std::pair<LongitudinalDataset, TruthRecord> generate(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  TruthRecord truth;
  truth.spec = spec;
  std::vector<Profile> profiles;
  std::vector<double> times(static_cast<std::size_t>(spec.n));
  for (int j = 0; j < spec.n; ++j) times[static_cast<std::size_t>(j)] = j;
  for (int i = 0; i < spec.m; ++i) {
    IndividualParams ind;
    ind.indicator = rng.bernoulli(spec.omega) ? 1 : 0;
    const Eigen::VectorXd b = draw_psd_normal(rng, spec.truth.mu_beta, spec.truth.Sigma_beta);
    ind.beta = {b[0], b[1], b[2]};
    if (ind.indicator == 1) {
      const Eigen::VectorXd xi = draw_psd_normal(rng, spec.truth.mu_alpha, spec.truth.Sigma_alpha);
      ind.trans = {std::exp(xi[0]), std::exp(xi[1])};
    } else {
      ind.trans = {0.0, std::exp(spec.truth.mu_tauA + std::sqrt(spec.truth.sigma2_tauA) * rng.normal())};
    }
    ind.sigma2 = spec.sigma2[static_cast<std::size_t>(i)];
    Profile prof;
    prof.id = "id" + std::to_string(i + 1);
    prof.times = times;
    prof.responses = simulate_responses(times, ind, spec.ar, spec.ar_burnin, rng);
    profiles.push_back(std::move(prof));
    truth.individuals.push_back(ind);
  }
  return {LongitudinalDataset(std::move(profiles), DatasetLimits{1, 2}), std::move(truth)};
}

ScenarioSpec builtin_scenario(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  s.m = 20;
  s.n = 150;
  s.truth.mu_beta = Eigen::Vector3d(244.0, 0.5, -0.75);
  s.truth.Sigma_beta << 125.0, -1.00, 0.50,
                        -1.00, 0.03, -0.01,
                        0.50, -0.01, 0.03;
  // Level-2 means of log(gamma), log(tau): medians e^3 ~ 20 and e^4 ~ 55
  // put the bend inside t = 0..149.
  s.truth.mu_alpha = Eigen::Vector2d(3.0, 4.0);
  s.truth.Sigma_alpha << 0.020, 0.005,
                         0.005, 0.030;
  s.truth.mu_tauA = 4.5;
  s.truth.sigma2_tauA = 0.050;
  s.sigma2 = {0.34, 1.12, 1.75, 0.42, 0.74, 2.06, 1.16, 1.28, 0.16, 0.77,
              0.04, 0.03, 0.91, 1.96, 0.32, 2.02, 0.89, 0.90, 0.82, 2.89};
  if (name == "S1a") {
    s.omega = 0.90;
    s.ar.phi = {0.70};
  } else if (name == "S1b") {
    s.omega = 0.95;
    s.ar.phi = {0.70};
  } else if (name == "S2") {
    s.omega = 0.50;
    s.ar.phi = {0.70};
  } else if (name == "S3") {
    s.omega = 0.50;
    s.ar.phi = {0.80, -0.10};
  } else {
    std::string valid;
    for (const auto& n : builtin_scenario_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown scenario '" + name + "' (valid: " + valid + ")");
  }
  s.truth.omega = s.omega;
  s.truth.ar = s.ar;
  return s;
}

std::vector<std::string> builtin_scenario_names() { return {"S1a", "S1b", "S2", "S3"}; }

const StudyRow* StudyReport::find(const std::string& name) const {
  for (const auto& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

struct ReplicateResult {
  bool ok = false;
  std::string error;
  // name -> (mean, median, covered)
  std::vector<std::tuple<std::string, double, double, bool, std::string>> values;
};

std::vector<std::pair<std::string, double>> truth_values(const ScenarioSpec& spec, const FitConfig& fit) {
  std::vector<std::pair<std::string, double>> t;
  const bool has_g = fit.variant != ModelVariant::AOnly;
  const bool has_a = fit.variant != ModelVariant::GOnly;
  if (fit.variant == ModelVariant::Flexible) t.emplace_back("omega", spec.omega);
  t.emplace_back("mu0", spec.truth.mu_beta[0]);
  t.emplace_back("mu1", spec.truth.mu_beta[1]);
  t.emplace_back("mu2", spec.truth.mu_beta[2]);
  if (has_g) {
    t.emplace_back("mu_gamma", spec.truth.mu_alpha[0]);
    t.emplace_back("mu_tau", spec.truth.mu_alpha[1]);
  }
  if (has_a) t.emplace_back("mu_tauA", spec.truth.mu_tauA);
  for (int k = 0; k < fit.p; ++k)
    t.emplace_back("phi_" + std::to_string(k + 1), k < spec.ar.order() ? spec.ar.phi[static_cast<std::size_t>(k)] : 0.0);
  const auto& S = spec.truth.Sigma_beta;
  t.emplace_back("Sigma_beta_11", S(0, 0));
  t.emplace_back("Sigma_beta_22", S(1, 1));
  t.emplace_back("Sigma_beta_33", S(2, 2));
  t.emplace_back("Sigma_beta_12", S(0, 1));
  t.emplace_back("Sigma_beta_13", S(0, 2));
  t.emplace_back("Sigma_beta_23", S(1, 2));
  if (has_g) {
    t.emplace_back("Sigma_alpha_11", spec.truth.Sigma_alpha(0, 0));
    t.emplace_back("Sigma_alpha_22", spec.truth.Sigma_alpha(1, 1));
    t.emplace_back("Sigma_alpha_12", spec.truth.Sigma_alpha(0, 1));
  }
  if (has_a) t.emplace_back("sigma2_tauA", spec.truth.sigma2_tauA);
  for (int i = 0; i < spec.m; ++i) t.emplace_back("sigma2_" + std::to_string(i + 1), spec.sigma2[static_cast<std::size_t>(i)]);
  return t;
}

ReplicateResult run_replicate(const ScenarioSpec& spec, const FitConfig& fit, int r,
                              const std::vector<std::pair<std::string, double>>& truths) {
  ReplicateResult res;
  try {
    ScenarioSpec s = spec;
    s.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(r));
    const auto [ds, truth] = generate(s);
    Hyperparameters hyper;
    if (fit.hyper) {
      hyper = with_ar_order(*fit.hyper, fit.p);
    } else if (fit.truth_scales) {
      hyper = default_hyperparameters(fit.p, s.truth.Sigma_beta, s.truth.Sigma_alpha);
    } else {
      const ScaleMatrices scales = elicit_scale_matrices(ds);
      hyper = default_hyperparameters(fit.p, scales.beta, scales.alpha);
    }
    ChainSettings cs = fit.chain;
    cs.variant = fit.variant;
    cs.initial_state.reset();
    cs.seed = derive_seed(s.seed, 0xC0FFEEULL);
    const ChainOutput chain = run_chain(ds, hyper, cs);
    const PopulationSummary summary = summarize_population(chain);
    for (const auto& [name, value] : truths) {
      const SummaryStats* st = summary.find(name);
      if (!st) continue;
      res.values.emplace_back(name, st->mean, st->median, st->lo <= value && value <= st->hi, st->preferred);
    }
    res.ok = true;
  } catch (const std::exception& e) {
    res.error = "replicate " + std::to_string(r) + ": " + e.what();
  }
  return res;
}

}  // namespace

StudyReport replicate_study(const ScenarioSpec& spec, const FitConfig& fit, int replicates, int threads) {
  if (replicates < 1) throw std::invalid_argument("replicate_study: need at least one replicate");
  spec.validate();
  fit.chain.validate();
  const auto truths = truth_values(spec, fit);
  std::vector<ReplicateResult> results(static_cast<std::size_t>(replicates));
  std::atomic<int> next{1};
  auto worker = [&] {
    for (int r = next++; r <= replicates; r = next++)
      results[static_cast<std::size_t>(r - 1)] = run_replicate(spec, fit, r, truths);
  };
  const int n = std::clamp(threads, 1, replicates);
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  StudyReport report;
  report.scenario = spec.name;
  report.requested = replicates;
  for (const auto& [name, value] : truths) report.rows.push_back(StudyRow{name, value});
  for (const auto& res : results) {
    if (!res.ok) {
      ++report.failed;
      report.failures.push_back(res.error);
      continue;
    }
    ++report.succeeded;
    for (const auto& [name, mean, median, covered, pref] : res.values) {
      for (auto& row : report.rows) {
        if (row.name != name) continue;
        row.mean_of_means += mean;
        row.mean_of_medians += median;
        row.coverage += covered ? 1.0 : 0.0;
        row.preferred = pref;
        ++row.replicates;
      }
    }
  }
  for (auto& row : report.rows) {
    row.undefined = report.succeeded - row.replicates;
    if (report.succeeded > 0) row.coverage /= report.succeeded;
    if (row.replicates == 0) continue;
    row.mean_of_means /= row.replicates;
    row.mean_of_medians /= row.replicates;
  }
  return report;
}

std::string study_to_csv(const StudyReport& report) {
  std::ostringstream out;
  out.precision(8);
  out << "parameter,truth,avg_posterior_mean,avg_posterior_median,coverage95,replicates,undefined,reported\n";
  for (const auto& r : report.rows)
    out << r.name << ',' << r.truth << ',' << r.mean_of_means << ',' << r.mean_of_medians << ',' << r.coverage << ','
        << r.replicates << ',' << r.undefined << ',' << r.preferred << '\n';
  return out.str();
}

}  // namespace bentcable

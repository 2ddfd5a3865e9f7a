#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bentcable/data.hpp"
#include "bentcable/sampler.hpp"

namespace bentcable {

/// Full generative specification of a synthetic study.
struct ScenarioSpec {
  std::string name = "custom";
  int m = 20;
  int n = 150;
  double omega = 0.5;
  PopulationParams truth;           ///< omega and ar inside are ignored
  ArCoefs ar;
  std::vector<double> sigma2;       ///< innovation variance per individual
  std::uint64_t seed = 1;
  int ar_burnin = 500;

  void validate() const;
};

struct TruthRecord {
  ScenarioSpec spec;
  std::vector<IndividualParams> individuals;
};

/// Draws individuals and responses on t = 0..n-1: I_i ~ Bernoulli(omega),
/// beta_i ~ N3, alpha_i from the lognormal matching I_i, and stationary
/// AR(p) errors started from zero with a discarded burn-in.
std::pair<LongitudinalDataset, TruthRecord> generate(const ScenarioSpec& spec);

/// Responses for fixed individual parameters on the given time grid; the
/// AR error path is burned in from zero for `ar_burnin` steps.
std::vector<double> simulate_responses(std::span<const double> times, const IndividualParams& ind,
                                       const ArCoefs& ar, int ar_burnin, Rng& rng);

/// Scenario names: S1a, S1b (omega 0.90 / 0.95, AR(1) 0.7), S2 (omega 0.5,
/// AR(1) 0.7), S3 (omega 0.5, AR(2) (0.8, -0.1)).
ScenarioSpec builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

struct FitConfig {
  int p = 1;
  ModelVariant variant = ModelVariant::Flexible;
  ChainSettings chain;
  /// When set, hyperparameters come from these instead of the defaults
  /// with elicited scale matrices. Its AR order is adjusted to p.
  std::optional<Hyperparameters> hyper;
  /// Use the generating Sigma_beta and Sigma_alpha as the Wishart prior
  /// estimates A1, A2 rather than eliciting them from coarse fits. Applies
  /// only when `hyper` is unset.
  bool truth_scales = false;
};

/// Truth value and per-replicate estimates of one reported quantity.
struct StudyRow {
  std::string name;
  double truth = 0.0;
  double mean_of_means = 0.0;
  double mean_of_medians = 0.0;
  /// Share of successful replicates whose 95% interval contains the truth;
  /// a replicate where the quantity is undefined counts as not covering.
  double coverage = 0.0;
  int replicates = 0;  ///< replicates with a defined estimate
  int undefined = 0;   ///< successful replicates without one (population never occupied)
  std::string preferred = "mean";
};

struct StudyReport {
  std::string scenario;
  int requested = 0;
  int succeeded = 0;
  int failed = 0;
  std::vector<std::string> failures;
  std::vector<StudyRow> rows;

  const StudyRow* find(const std::string& name) const;
};

/// Replicates generate-then-fit R times (replicate r uses seed
/// derive_seed(spec.seed, r)) and reports averaged posterior means,
/// medians and 95% interval coverage of the truth.
StudyReport replicate_study(const ScenarioSpec& spec, const FitConfig& fit, int replicates, int threads = 1);

std::string study_to_csv(const StudyReport& report);

}  // namespace bentcable

#pragma once

// Metropolis-within-Gibbs sampler for the flexible mixture longitudinal
// bent-cable model.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bentcable/data.hpp"
#include "bentcable/model.hpp"
#include "bentcable/priors.hpp"
#include "bentcable/random.hpp"

namespace bentcable {

/// Which populations the fit allows: the A/G mixture, gradual only, or
/// abrupt only.
enum class ModelVariant { Flexible, GOnly, AOnly };

std::string to_string(ModelVariant v);
ModelVariant parse_variant(const std::string& s);

struct PopulationParams {
  Eigen::Vector3d mu_beta = Eigen::Vector3d::Zero();
  Eigen::Matrix3d Sigma_beta = Eigen::Matrix3d::Identity();
  Eigen::Vector2d mu_alpha = Eigen::Vector2d::Zero();  ///< (mu_gamma, mu_tau), log scale
  Eigen::Matrix2d Sigma_alpha = Eigen::Matrix2d::Identity();
  double mu_tauA = 0.0;
  double sigma2_tauA = 1.0;
  double omega = 0.5;
  ArCoefs ar;
};

struct ModelState {
  std::vector<IndividualParams> individuals;
  PopulationParams population;

  int count_gradual() const;
};

/// Blocks held fixed at their current value instead of being updated.
struct PinnedBlocks {
  bool beta = false;
  bool alpha = false;
  bool indicator = false;
  bool sigma2 = false;
  bool mu_beta = false;
  bool Sigma_beta = false;
  bool mu_alpha = false;
  bool Sigma_alpha = false;
  bool mu_tauA = false;
  bool sigma2_tauA = false;
  bool omega = false;
  bool phi = false;

  static PinnedBlocks all();
  static PinnedBlocks population();
};

struct ChainSettings {
  int iterations = 20000;
  int burnin = 5000;
  int thin = 1;
  std::uint64_t seed = 1;
  bool adapt = true;
  int adapt_window = 100;
  double target_acceptance = 0.3;
  double initial_step = 0.1;
  ModelVariant variant = ModelVariant::Flexible;
  PinnedBlocks pinned;
  std::optional<ModelState> initial_state;
  bool store_individuals = true;

  void validate() const;
  int retained_draws() const { return (iterations - burnin) / thin; }
};

struct ChainOutput {
  int p = 0;
  ModelVariant variant = ModelVariant::Flexible;
  std::uint64_t seed = 0;
  int iterations = 0;
  int burnin = 0;
  int thin = 1;
  std::vector<PopulationParams> population;
  std::vector<std::vector<IndividualParams>> individuals;
  std::vector<double> deviance;
  /// Post-burn-in alpha acceptance rate per individual.
  std::vector<double> alpha_acceptance;
  /// Frozen random-walk scales per individual (gradual, abrupt).
  std::vector<double> step_gradual;
  std::vector<double> step_abrupt;
  std::vector<int> indicator_flips;
  long phi_draws = 0;
  long stationary_draws = 0;
  int cholesky_rescues = 0;
  int failed_updates = 0;

  std::size_t size() const { return population.size(); }
  double stationarity_proportion() const;
  double mean_alpha_acceptance() const;
};

/// Pools draws from several chains of the same model.
ChainOutput merge_chains(const std::vector<ChainOutput>& chains);

/// One Gibbs engine bound to a dataset and a hyperparameter set. Each
/// draw_* method samples one block from its full conditional and writes it
/// into the state.
class GibbsSampler {
 public:
  GibbsSampler(LongitudinalDataset ds, Hyperparameters hyper, ModelVariant variant, std::uint64_t seed);

  const LongitudinalDataset& data() const { return data_; }
  void set_responses(std::size_t i, std::vector<double> y) { data_.set_responses(i, std::move(y)); }
  const Hyperparameters& hyper() const { return hyper_; }
  ModelVariant variant() const { return variant_; }
  int ar_order() const { return hyper_.ar_order(); }
  Rng& rng() { return rng_; }

  const ModelState& state() const { return state_; }
  ModelState& mutable_state() { return state_; }
  void set_state(ModelState s);

  BentCableCoefs draw_beta(std::size_t i);
  /// Random walk on log(gamma), log(tau) (gradual) or log(tau) (abrupt) with
  /// scale `step`. Returns true when the proposal was accepted.
  bool metropolis_alpha(std::size_t i, double step);
  /// Between-population move; returns true when I_i changed. In joint mode
  /// (the default) omega, mu_tauA and sigma2_tauA are proposed afresh
  /// together with I_i so that an emptied abrupt population can be
  /// repopulated; otherwise they are held at their current values.
  bool update_indicator(std::size_t i);
  void set_joint_indicator_move(bool joint) { joint_indicator_ = joint; }
  bool joint_indicator_move() const { return joint_indicator_; }
  double draw_sigma2(std::size_t i);
  Eigen::Vector3d draw_mu_beta();
  Eigen::Matrix3d draw_Sigma_beta();
  Eigen::Vector2d draw_mu_alpha();
  Eigen::Matrix2d draw_Sigma_alpha();
  double draw_mu_tauA();
  double draw_sigma2_tauA();
  double draw_omega();
  /// Draws phi from its Gaussian full conditional (kept whether or not it is
  /// stationary) and returns the stationarity flag. No-op for p = 0.
  bool draw_phi();

  /// Log of the alpha full-conditional kernel (up to a constant) at `trans`
  /// for population `indicator`, including the 1/tau and 1/(gamma tau)
  /// lognormal factors.
  double log_alpha_kernel(std::size_t i, const TransitionCoefs& trans, int indicator) const;
  /// Metropolis-Hastings log ratio for moving individual i from abrupt to
  /// gradual with proposed half-width `gamma`; the reverse move uses the
  /// negated value.
  double log_birth_ratio(std::size_t i, double gamma) const;

  double sum_squared_innovations(std::size_t i) const;
  double deviance() const;

  int cholesky_rescues() const { return rescues_; }

 private:
  double sum_squared_innovations(std::size_t i, const TransitionCoefs& trans) const;
  bool update_indicator_fixed(std::size_t i);
  bool update_indicator_joint(std::size_t i);

  LongitudinalDataset data_;
  Hyperparameters hyper_;
  ModelVariant variant_;
  Rng rng_;
  ModelState state_;
  int rescues_ = 0;
  bool joint_indicator_ = true;
};

/// Deterministic warm start from per-profile grid fits.
ModelState initial_state(const LongitudinalDataset& ds, const Hyperparameters& hyper, ModelVariant variant);

/// Runs one chain. One iteration updates, in order: every beta_i, every
/// alpha_i, every indicator, every sigma_i^2, mu_beta, Sigma_beta, mu_alpha,
/// Sigma_alpha, mu_tauA, sigma2_tauA, omega, phi.
ChainOutput run_chain(const LongitudinalDataset& ds, const Hyperparameters& hyper,
                      const ChainSettings& settings);

/// Runs `chains` chains with seeds derived from settings.seed, using up to
/// `threads` workers.
std::vector<ChainOutput> run_chains(const LongitudinalDataset& ds, const Hyperparameters& hyper,
                                    const ChainSettings& settings, int chains, int threads);

/// Worker count from BENTCABLE_THREADS, else hardware concurrency.
int default_thread_count();

}  // namespace bentcable

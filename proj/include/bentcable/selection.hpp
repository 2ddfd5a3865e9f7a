#pragma once

#include <string>
#include <vector>

#include "bentcable/data.hpp"
#include "bentcable/priors.hpp"
#include "bentcable/sampler.hpp"

namespace bentcable {

struct DicReport {
  double dbar = 0.0;       ///< posterior mean deviance
  double d_at_mean = 0.0;  ///< deviance at the plug-in posterior summary
  double pD = 0.0;
  double dic = 0.0;
  int p = 0;
  ModelVariant variant = ModelVariant::Flexible;
  std::size_t draws = 0;
};

/// -2 times the Level-1 conditional log-likelihood given all individual
/// parameters, over observations p+1..n_i of every profile.
double conditional_deviance(const LongitudinalDataset& ds, std::span<const IndividualParams> params,
                            const ArCoefs& ar);

/// Plug-in individual parameters: posterior means of beta and sigma^2, modal
/// population for I_i, gamma averaged over draws in the gradual population
/// (0 when abrupt is modal) and tau averaged over draws in the modal
/// population.
std::vector<IndividualParams> plug_in_individuals(const ChainOutput& chain);
ArCoefs posterior_mean_ar(const ChainOutput& chain);

DicReport compute_dic(const ChainOutput& chain, const LongitudinalDataset& ds);

struct ComparisonEntry {
  int p = 0;
  ModelVariant variant = ModelVariant::Flexible;
};

struct ComparisonResult {
  std::vector<DicReport> ranked;  ///< ascending DIC
  /// Chain for the winning (p, variant) re-run on the full data, when
  /// requested.
  std::optional<ChainOutput> final_chain;
};

/// Fits every (p, variant) combination on the reduced data for
/// p_max = max(p_list), so that all fits share one likelihood block, and
/// ranks them by DIC.
ComparisonResult compare_models(const LongitudinalDataset& ds, const Hyperparameters& hyper,
                                const std::vector<int>& p_list, const std::vector<ModelVariant>& variants,
                                const ChainSettings& settings, bool refit_winner = false, int threads = 1);

std::string format_ranking(const std::vector<DicReport>& ranked);

}  // namespace bentcable

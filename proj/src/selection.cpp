#include "bentcable/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

namespace bentcable {

double conditional_deviance(const LongitudinalDataset& ds, std::span<const IndividualParams> params,
                            const ArCoefs& ar) {
  return -2.0 * level1_loglik(ds, params, ar);
}

std::vector<IndividualParams> plug_in_individuals(const ChainOutput& chain) {
  if (chain.individuals.empty()) throw std::invalid_argument("chain has no stored individual draws");
  const std::size_t m = chain.individuals.front().size();
  const double count = static_cast<double>(chain.individuals.size());
  std::vector<IndividualParams> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    double b0 = 0, b1 = 0, b2 = 0, s2 = 0;
    double g_sum = 0, tau_g = 0, tau_a = 0;
    long n_g = 0;
    for (const auto& draw : chain.individuals) {
      const auto& ind = draw[i];
      b0 += ind.beta.beta0;
      b1 += ind.beta.beta1;
      b2 += ind.beta.beta2;
      s2 += ind.sigma2;
      if (ind.indicator == 1) {
        ++n_g;
        g_sum += ind.trans.gamma;
        tau_g += ind.trans.tau;
      } else {
        tau_a += ind.trans.tau;
      }
    }
    const long n_a = static_cast<long>(chain.individuals.size()) - n_g;
    IndividualParams& ind = out[i];
    ind.beta = {b0 / count, b1 / count, b2 / count};
    ind.sigma2 = s2 / count;
    // Ties go to the gradual population.
    ind.indicator = n_g >= n_a ? 1 : 0;
    if (ind.indicator == 1) {
      ind.trans = {g_sum / static_cast<double>(n_g), tau_g / static_cast<double>(n_g)};
    } else {
      ind.trans = {0.0, tau_a / static_cast<double>(n_a)};
    }
  }
  return out;
}

ArCoefs posterior_mean_ar(const ChainOutput& chain) {
  ArCoefs ar;
  ar.phi.assign(static_cast<std::size_t>(chain.p), 0.0);
  if (chain.population.empty()) return ar;
  for (const auto& pop : chain.population)
    for (int k = 0; k < chain.p; ++k) ar.phi[static_cast<std::size_t>(k)] += pop.ar.phi[static_cast<std::size_t>(k)];
  for (double& v : ar.phi) v /= static_cast<double>(chain.population.size());
  return ar;
}

DicReport compute_dic(const ChainOutput& chain, const LongitudinalDataset& ds) {
  if (chain.deviance.empty()) throw std::invalid_argument("compute_dic: empty deviance trace");
  DicReport r;
  r.p = chain.p;
  r.variant = chain.variant;
  r.draws = chain.deviance.size();
  double sum = 0.0;
  for (double d : chain.deviance) sum += d;
  r.dbar = sum / static_cast<double>(chain.deviance.size());
  const auto plug = plug_in_individuals(chain);
  r.d_at_mean = conditional_deviance(ds, plug, posterior_mean_ar(chain));
  r.pD = r.dbar - r.d_at_mean;
  r.dic = r.dbar + r.pD;
  return r;
}

ComparisonResult compare_models(const LongitudinalDataset& ds, const Hyperparameters& hyper,
                                const std::vector<int>& p_list, const std::vector<ModelVariant>& variants,
                                const ChainSettings& settings, bool refit_winner, int threads) {
  if (p_list.empty() || variants.empty()) throw std::invalid_argument("compare_models: nothing to compare");
  const int p_max = *std::max_element(p_list.begin(), p_list.end());
  if (*std::min_element(p_list.begin(), p_list.end()) < 0)
    throw std::invalid_argument("compare_models: AR orders must be non-negative");
  if (ds.min_length() <= static_cast<std::size_t>(p_max))
    throw DataError("compare_models: AR order " + std::to_string(p_max) +
                    " needs every profile to have more observations");

  std::vector<ComparisonEntry> entries;
  for (int p : p_list)
    for (ModelVariant v : variants) entries.push_back({p, v});

  // All reduced views must contribute the same observations.
  const auto reference = reduce_for_dic(ds, p_max, p_list.front());
  for (int p : p_list) {
    const auto view = reduce_for_dic(ds, p_max, p);
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (view.random_indices(i) != reference.random_indices(i))
        throw std::logic_error("compare_models: reduced views disagree on the likelihood block");
  }

  std::vector<DicReport> reports(entries.size());
  std::vector<std::exception_ptr> errors(entries.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < entries.size(); k = next++) {
      try {
        const auto view = reduce_for_dic(ds, p_max, entries[k].p);
        const LongitudinalDataset reduced = view.materialize();
        const Hyperparameters h = with_ar_order(hyper, entries[k].p);
        ChainSettings s = settings;
        s.variant = entries[k].variant;
        s.initial_state.reset();
        s.seed = derive_seed(settings.seed, k);
        const ChainOutput chain = run_chain(reduced, h, s);
        reports[k] = compute_dic(chain, reduced);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::clamp<int>(threads, 1, static_cast<int>(entries.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ComparisonResult result;
  result.ranked = reports;
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const DicReport& a, const DicReport& b) { return a.dic < b.dic; });
  if (refit_winner) {
    const auto& best = result.ranked.front();
    ChainSettings s = settings;
    s.variant = best.variant;
    s.initial_state.reset();
    result.final_chain = run_chain(ds, with_ar_order(hyper, best.p), s);
  }
  return result;
}

std::string format_ranking(const std::vector<DicReport>& ranked) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-5s %-4s %-10s %14s %14s %12s %14s\n", "rank", "p", "variant", "Dbar",
                "D(mean)", "pD", "DIC");
  out << line;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const auto& r = ranked[k];
    std::snprintf(line, sizeof line, "%-5zu %-4d %-10s %14.3f %14.3f %12.3f %14.3f\n", k + 1, r.p,
                  to_string(r.variant).c_str(), r.dbar, r.d_at_mean, r.pD, r.dic);
    out << line;
  }
  return out.str();
}

}  // namespace bentcable

#pragma once

// JSON and CSV serialization for configs, draws, reports and manifests.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bentcable/priors.hpp"
#include "bentcable/sampler.hpp"
#include "bentcable/selection.hpp"
#include "bentcable/simulate.hpp"
#include "bentcable/summarize.hpp"

namespace bentcable {

using json = nlohmann::json;

json to_json(const Hyperparameters& h);
/// Overrides fields of `base` with any keys present in `j`; keys mirror the
/// field names (h1, H1, ..., d1). Unknown keys are rejected.
Hyperparameters hyperparameters_from_json(const json& j, Hyperparameters base);

json to_json(const ChainSettings& s);
/// Reads iterations, burnin, thin, seed, adapt, adapt_window,
/// target_acceptance, initial_step, variant from `j`, keeping `base` for
/// missing keys.
ChainSettings chain_settings_from_json(const json& j, ChainSettings base);

json to_json(const PopulationParams& p);
PopulationParams population_from_json(const json& j);
json to_json(const IndividualParams& p);

json to_json(const ScenarioSpec& s);
ScenarioSpec scenario_from_json(const json& j);
json to_json(const TruthRecord& t);

json to_json(const DicReport& r);
json to_json(const SummaryStats& s);
json to_json(const PopulationSummary& s);
json to_json(const StudyReport& r);

/// Column names of the flattened draws table for AR order p and m
/// individuals.
std::vector<std::string> draw_columns(int p, std::size_t m);
/// One row per retained iteration: chain, draw, deviance, population
/// parameters, then beta0_i, beta1_i, beta2_i, gamma_i, tau_i, I_i,
/// sigma2_i for every individual.
std::string draws_to_csv(const std::vector<ChainOutput>& chains);
/// Inverse of draws_to_csv (acceptance statistics are not part of the
/// table and come back empty).
std::vector<ChainOutput> draws_from_csv(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// 64-bit FNV-1a digest as 16 hex characters.
std::string digest_hex(std::string_view bytes);

}  // namespace bentcable

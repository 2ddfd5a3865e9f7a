#include "bentcable/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"

#include "bentcable/io.hpp"

#ifndef BENTCABLE_VERSION
#define BENTCABLE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace bentcable {

namespace {

class MissingFile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string data, config, out, scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> chains, iters, burnin, thin, p, replicates;
  std::optional<std::string> variant;
  std::string p_list, variants;
  bool refit = false;
  bool truth_scales = false;
};

json load_json(const std::string& path) {
  if (!fs::exists(path)) throw MissingFile("file not found: " + path);
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
}

/// Top-level config keys; anything else is a typo worth reporting.
json load_config(const Options& o) {
  if (o.config.empty()) return json::object();
  json cfg = load_json(o.config);
  if (!cfg.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::set<std::string> known{"p",         "variant",  "chains", "chain",     "hyperparameters",
                                           "p_list",    "variants", "scenario", "replicates", "refit",
                                           "truth_scales"};
  for (const auto& [k, v] : cfg.items())
    if (!known.count(k)) throw std::invalid_argument("unknown config key '" + k + "'");
  return cfg;
}

LongitudinalDataset load_data(const std::string& path) {
  if (path.empty()) throw std::invalid_argument("--data is required");
  if (!fs::exists(path)) throw MissingFile("file not found: " + path);
  return load_csv(path);
}

fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw std::invalid_argument("--out is required");
  fs::create_directories(out);
  return fs::path(out);
}

std::uint64_t resolve_seed(const Options& o, const json& cfg) {
  if (o.seed) return *o.seed;
  if (cfg.contains("chain") && cfg["chain"].contains("seed")) return cfg["chain"]["seed"].get<std::uint64_t>();
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

ChainSettings resolve_chain(const Options& o, const json& cfg) {
  ChainSettings s;
  if (cfg.contains("chain")) s = chain_settings_from_json(cfg["chain"], s);
  if (cfg.contains("variant")) s.variant = parse_variant(cfg["variant"].get<std::string>());
  if (o.iters) s.iterations = *o.iters;
  if (o.burnin) s.burnin = *o.burnin;
  if (o.thin) s.thin = *o.thin;
  if (o.variant) s.variant = parse_variant(*o.variant);
  s.seed = resolve_seed(o, cfg);
  s.validate();
  return s;
}

int resolve_p(const Options& o, const json& cfg) {
  int p = cfg.value("p", 1);
  if (o.p) p = *o.p;
  if (p < 0) throw std::invalid_argument("--p must be non-negative");
  return p;
}

Hyperparameters resolve_hyper(const LongitudinalDataset& ds, int p, const json& cfg,
                              std::vector<std::string>& warnings) {
  const ScaleMatrices scales = elicit_scale_matrices(ds);
  warnings.insert(warnings.end(), scales.warnings.begin(), scales.warnings.end());
  Hyperparameters h = default_hyperparameters(p, scales.beta, scales.alpha);
  if (cfg.contains("hyperparameters")) h = hyperparameters_from_json(cfg["hyperparameters"], h);
  return h;
}

template <typename T>
std::vector<T> split_list(const std::string& text, T (*convert)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(convert(item));
  }
  return out;
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  const int v = std::stoi(s, &used);
  if (used != s.size()) throw std::invalid_argument("not an integer: " + s);
  return v;
}

ModelVariant to_variant(const std::string& s) { return parse_variant(s); }

/// Writes a file and records its digest for the manifest.
void emit(const fs::path& dir, const std::string& name, const std::string& text, json& outputs) {
  write_text(dir / name, text);
  outputs[name] = json{{"path", (dir / name).string()}, {"digest", digest_hex(text)}};
}

json manifest_base(const std::string& command, const json& effective_config, double seconds) {
  return json{{"command", command},
              {"version", BENTCABLE_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"config", effective_config},
              {"config_digest", digest_hex(effective_config.dump())},
              {"wall_clock_seconds", seconds}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const json cfg = load_config(o);
  const LongitudinalDataset ds = load_data(o.data);
  const int p = resolve_p(o, cfg);
  if (static_cast<std::size_t>(p) >= ds.min_length())
    throw std::invalid_argument("AR order " + std::to_string(p) + " is not below the shortest profile length " +
                                std::to_string(ds.min_length()));
  ChainSettings settings = resolve_chain(o, cfg);
  const int chains = o.chains.value_or(cfg.value("chains", 1));
  if (chains < 1) throw std::invalid_argument("--chains must be positive");
  std::vector<std::string> warnings = spacing_warnings(ds);
  const Hyperparameters hyper = resolve_hyper(ds, p, cfg, warnings);
  print_warnings(warnings, err);
  const fs::path dir = prepare_out(o.out);

  const auto results = run_chains(ds, hyper, settings, chains, default_thread_count());

  json outputs = json::object();
  emit(dir, "draws.csv", draws_to_csv(results), outputs);
  emit(dir, "data.csv", to_csv(ds), outputs);

  json effective{{"p", p}, {"variant", to_string(settings.variant)}, {"chains", chains},
                 {"chain", to_json(settings)}, {"hyperparameters", to_json(hyper)}};
  json m = manifest_base("fit", effective, seconds_since(t0));
  m["seed"] = settings.seed;
  json seeds = json::array(), per_chain = json::array();
  for (const auto& c : results) {
    seeds.push_back(c.seed);
    per_chain.push_back(json{{"seed", c.seed},
                             {"alpha_acceptance", c.alpha_acceptance},
                             {"mean_alpha_acceptance", c.mean_alpha_acceptance()},
                             {"step_gradual", c.step_gradual},
                             {"step_abrupt", c.step_abrupt},
                             {"indicator_flips", c.indicator_flips},
                             {"stationarity_proportion", c.stationarity_proportion()},
                             {"cholesky_rescues", c.cholesky_rescues},
                             {"failed_updates", c.failed_updates}});
  }
  const ChainOutput merged = merge_chains(results);
  m["chain_seeds"] = seeds;
  m["chains"] = per_chain;
  m["mean_alpha_acceptance"] = merged.mean_alpha_acceptance();
  m["stationarity_proportion"] = merged.stationarity_proportion();
  m["inputs"] = json{{"data", o.data}, {"data_digest", digest_hex(read_text(o.data))}};
  m["outputs"] = outputs;
  m["warnings"] = warnings;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  out << "wrote " << (dir / "draws.csv").string() << " (" << merged.size() << " draws, stationarity "
      << merged.stationarity_proportion() << ")\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream&) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioSpec spec;
  if (!o.scenario.empty() && !o.config.empty())
    throw std::invalid_argument("give either --scenario or --config, not both");
  if (!o.scenario.empty()) spec = builtin_scenario(o.scenario);
  else if (!o.config.empty()) {
    json cfg = load_json(o.config);
    spec = scenario_from_json(cfg.contains("scenario") ? cfg["scenario"] : cfg);
  } else {
    throw std::invalid_argument("simulate needs --scenario or --config");
  }
  if (o.seed) spec.seed = *o.seed;
  spec.validate();
  const fs::path dir = prepare_out(o.out);
  const auto [ds, truth] = generate(spec);
  json outputs = json::object();
  emit(dir, "data.csv", to_csv(ds), outputs);
  emit(dir, "truth.json", to_json(truth).dump(2) + "\n", outputs);
  emit(dir, "spec.json", to_json(spec).dump(2) + "\n", outputs);
  json m = manifest_base("simulate", to_json(spec), seconds_since(t0));
  m["seed"] = spec.seed;
  m["outputs"] = outputs;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  out << "wrote " << ds.size() << " profiles, " << ds.total_observations() << " rows to "
      << (dir / "data.csv").string() << "\n";
  return kExitOk;
}

int cmd_summarize(const Options& o, std::ostream& out, std::ostream&) {
  const auto t0 = std::chrono::steady_clock::now();
  if (o.data.empty()) throw std::invalid_argument("summarize needs the fit directory (positional or --data)");
  const fs::path src(o.data);
  if (!fs::exists(src)) throw MissingFile("directory not found: " + src.string());
  const fs::path draws_path = src / "draws.csv";
  if (!fs::is_directory(src) || !fs::exists(draws_path))
    throw std::invalid_argument("no draws.csv in " + src.string() + " (empty chain directory)");
  auto chains = draws_from_csv(read_text(draws_path));
  if (chains.empty() || chains.front().population.empty())
    throw std::invalid_argument("draws.csv in " + src.string() + " holds no draws");
  ModelVariant variant = ModelVariant::Flexible;
  if (fs::exists(src / "manifest.json")) {
    const json fm = load_json((src / "manifest.json").string());
    if (fm.contains("config") && fm["config"].contains("variant"))
      variant = parse_variant(fm["config"]["variant"].get<std::string>());
  }
  for (auto& c : chains) c.variant = variant;
  const ChainOutput chain = merge_chains(chains);
  const PopulationSummary summary = summarize_population(chain);

  double lo = 0.0, hi = 0.0;
  if (fs::exists(src / "data.csv")) {
    const LongitudinalDataset ds = load_csv(src / "data.csv");
    lo = ds[0].times.front();
    hi = ds[0].times.back();
    for (const auto& p : ds.profiles()) {
      lo = std::min(lo, p.times.front());
      hi = std::max(hi, p.times.back());
    }
  } else {
    const auto* tau = summary.find("M_tau");
    const auto* tauA = summary.find("M_tauA");
    hi = 2.0 * std::max(tau ? tau->mean : 1.0, tauA ? tauA->mean : 1.0);
  }
  const auto grid = linear_grid(lo, hi, 200);
  const PopulationCurves curves = fitted_population(chain, grid);

  const fs::path dir = prepare_out(o.out.empty() ? (src / "summary").string() : o.out);
  json outputs = json::object();
  json report = to_json(summary);
  report["variant"] = to_string(variant);
  emit(dir, "summary.json", report.dump(2) + "\n", outputs);
  emit(dir, "curves.csv", curves_to_csv(curves), outputs);
  emit(dir, "curves.svg", curves_to_svg(curves, "Population bent cables"), outputs);
  json m = manifest_base("summarize", json{{"source", src.string()}, {"variant", to_string(variant)}},
                         seconds_since(t0));
  m["inputs"] = json{{"draws", draws_path.string()}, {"draws_digest", digest_hex(read_text(draws_path))}};
  m["outputs"] = outputs;
  write_text(dir / "manifest.json", m.dump(2) + "\n");

  out << "draws: " << summary.draws << "\n";
  for (const char* name : {"omega", "mu0", "mu1", "mu2", "mu_gamma", "mu_tau", "mu_tauA", "M_gamma", "M_tau",
                           "M_tauA", "ctp_G", "ctp_A"}) {
    if (const auto* s = summary.find(name))
      out << "  " << name << ": mean " << s->mean << ", median " << s->median << ", 95% (" << s->lo << ", "
          << s->hi << ")\n";
  }
  out << "ctp_G undefined fraction: " << summary.ctp_G_undefined_fraction << "\n";
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const json cfg = load_config(o);
  const LongitudinalDataset ds = load_data(o.data);
  std::vector<int> p_list;
  if (!o.p_list.empty()) p_list = split_list<int>(o.p_list, to_int);
  else if (cfg.contains("p_list")) p_list = cfg["p_list"].get<std::vector<int>>();
  else p_list = {resolve_p(o, cfg)};
  std::vector<ModelVariant> variants;
  if (!o.variants.empty()) variants = split_list<ModelVariant>(o.variants, to_variant);
  else if (cfg.contains("variants"))
    for (const auto& v : cfg["variants"]) variants.push_back(parse_variant(v.get<std::string>()));
  else variants = {o.variant ? parse_variant(*o.variant) : ModelVariant::Flexible};
  if (p_list.empty() || variants.empty()) throw std::invalid_argument("nothing to compare");
  const int p_max = *std::max_element(p_list.begin(), p_list.end());
  if (p_max < 0) throw std::invalid_argument("AR orders must be non-negative");
  if (static_cast<std::size_t>(p_max) >= ds.min_length())
    throw std::invalid_argument("AR order " + std::to_string(p_max) + " is not below the shortest profile length " +
                                std::to_string(ds.min_length()));
  const ChainSettings settings = resolve_chain(o, cfg);
  std::vector<std::string> warnings = spacing_warnings(ds);
  const Hyperparameters hyper = resolve_hyper(ds, p_max, cfg, warnings);
  print_warnings(warnings, err);
  const bool refit = o.refit || cfg.value("refit", false);
  const fs::path dir = prepare_out(o.out);

  const ComparisonResult result =
      compare_models(ds, hyper, p_list, variants, settings, refit, default_thread_count());

  json outputs = json::object();
  json ranked = json::array();
  for (const auto& r : result.ranked) ranked.push_back(to_json(r));
  const std::string table = format_ranking(result.ranked);
  emit(dir, "dic.json", json{{"ranked", ranked}}.dump(2) + "\n", outputs);
  emit(dir, "ranking.txt", table, outputs);
  if (result.final_chain) emit(dir, "draws.csv", draws_to_csv({*result.final_chain}), outputs);
  json jp = p_list, jv = json::array();
  for (auto v : variants) jv.push_back(to_string(v));
  json effective{{"p_list", jp}, {"variants", jv}, {"chain", to_json(settings)}, {"refit", refit},
                 {"hyperparameters", to_json(hyper)}};
  if (result.final_chain) {
    effective["p"] = result.ranked.front().p;
    effective["variant"] = to_string(result.ranked.front().variant);
  }
  json m = manifest_base("compare-dic", effective, seconds_since(t0));
  m["seed"] = settings.seed;
  m["inputs"] = json{{"data", o.data}, {"data_digest", digest_hex(read_text(o.data))}};
  m["outputs"] = outputs;
  m["warnings"] = warnings;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  out << table;
  return kExitOk;
}

int cmd_replicate(const Options& o, std::ostream& out, std::ostream&) {
  const auto t0 = std::chrono::steady_clock::now();
  const json cfg = load_config(o);
  ScenarioSpec spec;
  if (!o.scenario.empty()) spec = builtin_scenario(o.scenario);
  else if (cfg.contains("scenario")) {
    spec = cfg["scenario"].is_string() ? builtin_scenario(cfg["scenario"].get<std::string>())
                                       : scenario_from_json(cfg["scenario"]);
  } else {
    throw std::invalid_argument("replicate-study needs --scenario or a config with \"scenario\"");
  }
  if (o.seed) spec.seed = *o.seed;
  FitConfig fit;
  fit.p = resolve_p(o, cfg);
  Options chain_opts = o;
  chain_opts.seed = spec.seed;  // per-replicate chain seeds derive from the scenario seed
  fit.chain = resolve_chain(chain_opts, cfg);
  fit.variant = fit.chain.variant;
  if (cfg.contains("hyperparameters")) {
    Hyperparameters base = default_hyperparameters(fit.p, Eigen::Matrix3d::Identity(), Eigen::Matrix2d::Identity());
    fit.hyper = hyperparameters_from_json(cfg["hyperparameters"], base);
  }
  fit.truth_scales = o.truth_scales || cfg.value("truth_scales", false);
  const int replicates = o.replicates.value_or(cfg.value("replicates", 10));
  if (replicates < 1) throw std::invalid_argument("--replicates must be positive");
  const fs::path dir = prepare_out(o.out);

  const StudyReport report = replicate_study(spec, fit, replicates, default_thread_count());

  json outputs = json::object();
  emit(dir, "study.csv", study_to_csv(report), outputs);
  emit(dir, "study.json", to_json(report).dump(2) + "\n", outputs);
  json effective{{"scenario", to_json(spec)}, {"p", fit.p}, {"variant", to_string(fit.variant)},
                 {"replicates", replicates}, {"chain", to_json(fit.chain)}, {"truth_scales", fit.truth_scales}};
  if (fit.hyper) effective["hyperparameters"] = to_json(*fit.hyper);
  json m = manifest_base("replicate-study", effective, seconds_since(t0));
  m["seed"] = spec.seed;
  m["succeeded"] = report.succeeded;
  m["failed"] = report.failed;
  m["failures"] = report.failures;
  m["outputs"] = outputs;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
  out << study_to_csv(report);
  if (report.failed > 0) out << report.failed << " of " << replicates << " replicates failed\n";
  return kExitOk;
}

void error_json(std::ostream& err, const std::string& type, const std::string& message) {
  err << json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian flexible mixture bent-cable models for longitudinal data", "bentcable"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BENTCABLE_VERSION);
  Options o;

  auto chain_flags = [&](CLI::App* c) {
    c->add_option("--config", o.config, "JSON config file");
    c->add_option("--out", o.out, "Output directory")->required();
    c->add_option("--seed", o.seed, "64-bit RNG seed");
    c->add_option("--iters", o.iters, "Iterations per chain");
    c->add_option("--burnin", o.burnin, "Burn-in iterations");
    c->add_option("--thin", o.thin, "Thinning interval");
    c->add_option("--p", o.p, "AR order");
    c->add_option("--variant", o.variant, "flexible, g-only or a-only");
  };

  auto* fit = app.add_subcommand("fit", "Run the sampler on a dataset");
  fit->add_option("--data", o.data, "Long-format CSV (id,time,y)")->required();
  fit->add_option("--chains", o.chains, "Number of chains");
  chain_flags(fit);

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim->add_option("--scenario", o.scenario, "Built-in scenario (S1a, S1b, S2, S3)");
  sim->add_option("--config", o.config, "Scenario spec JSON");
  sim->add_option("--out", o.out, "Output directory")->required();
  sim->add_option("--seed", o.seed, "64-bit RNG seed");

  auto* sum = app.add_subcommand("summarize", "Summarize a fit directory");
  sum->add_option("dir", o.data, "Directory written by fit");
  sum->add_option("--data", o.data, "Directory written by fit");
  sum->add_option("--out", o.out, "Output directory (default <dir>/summary)");

  auto* cmp = app.add_subcommand("compare-dic", "Rank AR orders and variants by DIC");
  cmp->add_option("--data", o.data, "Long-format CSV (id,time,y)")->required();
  cmp->add_option("--p-list", o.p_list, "Comma-separated AR orders");
  cmp->add_option("--variants", o.variants, "Comma-separated variants");
  cmp->add_flag("--refit", o.refit, "Refit the winner on the full data");
  chain_flags(cmp);

  auto* rep = app.add_subcommand("replicate-study", "Simulate-and-fit study");
  rep->add_option("--scenario", o.scenario, "Built-in scenario");
  rep->add_option("--replicates", o.replicates, "Number of replicates");
  rep->add_flag("--truth-scales", o.truth_scales, "Use the generating covariances as Wishart prior estimates");
  chain_flags(rep);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << BENTCABLE_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    error_json(err, "UsageError", e.what());
    return kExitValidation;
  }

  try {
    if (fit->parsed()) return cmd_fit(o, out, err);
    if (sim->parsed()) return cmd_simulate(o, out, err);
    if (sum->parsed()) return cmd_summarize(o, out, err);
    if (cmp->parsed()) return cmd_compare(o, out, err);
    if (rep->parsed()) return cmd_replicate(o, out, err);
  } catch (const MissingFile& e) {
    error_json(err, "FileNotFound", e.what());
    return kExitValidation;
  } catch (const DataError& e) {
    error_json(err, "DataError", e.what());
    return kExitValidation;
  } catch (const ModelSetupError& e) {
    error_json(err, "ModelSetupError", e.what());
    return kExitValidation;
  } catch (const DomainError& e) {
    error_json(err, "ValidationError", e.what());
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    error_json(err, "ValidationError", e.what());
    return kExitValidation;
  } catch (const json::exception& e) {
    error_json(err, "ValidationError", e.what());
    return kExitValidation;
  } catch (const NumericalError& e) {
    error_json(err, "NumericalError", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    error_json(err, "RuntimeError", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace bentcable

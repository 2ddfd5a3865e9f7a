#include "bentcable/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bentcable {

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& key, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw std::invalid_argument("'" + key + "' must be a " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " array of arrays");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument("'" + key + "' row " + std::to_string(r) + " has the wrong length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from(const json& j, const std::string& key, Eigen::Index size) {
  if (!j.is_array() || (size >= 0 && static_cast<Eigen::Index>(j.size()) != size))
    throw std::invalid_argument("'" + key + "' must be an array of length " + std::to_string(size));
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json to_json(const Hyperparameters& h) {
  return json{{"h1", vector_json(h.h1)}, {"H1", matrix_json(h.H1)}, {"h2", vector_json(h.h2)},
              {"H2", matrix_json(h.H2)}, {"h3", vector_json(h.h3)}, {"H3", matrix_json(h.H3)},
              {"a0", h.a0},               {"a1", h.a1},             {"nu1", h.nu1},
              {"A1", matrix_json(h.A1)}, {"nu2", h.nu2},           {"A2", matrix_json(h.A2)},
              {"b0", h.b0},               {"b1", h.b1},             {"c0", h.c0},
              {"c1", h.c1},               {"d0", h.d0},             {"d1", h.d1}};
}

Hyperparameters hyperparameters_from_json(const json& j, Hyperparameters base) {
  if (!j.is_object()) throw std::invalid_argument("hyperparameters must be a JSON object");
  static const std::set<std::string> known{"h1", "H1", "h2", "H2", "h3", "H3", "a0", "a1", "nu1",
                                           "A1", "nu2", "A2", "b0", "b1", "c0", "c1", "d0", "d1"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown hyperparameter '" + key + "'");
  if (j.contains("h1")) base.h1 = vector_from(j["h1"], "h1", 3);
  if (j.contains("H1")) base.H1 = matrix_from(j["H1"], "H1", 3, 3);
  if (j.contains("h2")) base.h2 = vector_from(j["h2"], "h2", 2);
  if (j.contains("H2")) base.H2 = matrix_from(j["H2"], "H2", 2, 2);
  const Eigen::Index p = base.h3.size();
  if (j.contains("h3")) base.h3 = vector_from(j["h3"], "h3", p);
  if (j.contains("H3")) base.H3 = matrix_from(j["H3"], "H3", p, p);
  if (j.contains("A1")) base.A1 = matrix_from(j["A1"], "A1", 3, 3);
  if (j.contains("A2")) base.A2 = matrix_from(j["A2"], "A2", 2, 2);
  for (auto [key, field] : std::initializer_list<std::pair<const char*, double*>>{
           {"a0", &base.a0}, {"a1", &base.a1}, {"nu1", &base.nu1}, {"nu2", &base.nu2}, {"b0", &base.b0},
           {"b1", &base.b1}, {"c0", &base.c0}, {"c1", &base.c1},   {"d0", &base.d0},   {"d1", &base.d1}})
    if (j.contains(key)) *field = j[key].get<double>();
  base.validate();
  return base;
}

json to_json(const ChainSettings& s) {
  return json{{"iterations", s.iterations},       {"burnin", s.burnin},
              {"thin", s.thin},                   {"seed", s.seed},
              {"adapt", s.adapt},                 {"adapt_window", s.adapt_window},
              {"target_acceptance", s.target_acceptance}, {"initial_step", s.initial_step},
              {"variant", to_string(s.variant)}};
}

ChainSettings chain_settings_from_json(const json& j, ChainSettings base) {
  if (!j.is_object()) throw std::invalid_argument("chain settings must be a JSON object");
  if (j.contains("iterations")) base.iterations = j["iterations"].get<int>();
  if (j.contains("burnin")) base.burnin = j["burnin"].get<int>();
  if (j.contains("thin")) base.thin = j["thin"].get<int>();
  if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("adapt")) base.adapt = j["adapt"].get<bool>();
  if (j.contains("adapt_window")) base.adapt_window = j["adapt_window"].get<int>();
  if (j.contains("target_acceptance")) base.target_acceptance = j["target_acceptance"].get<double>();
  if (j.contains("initial_step")) base.initial_step = j["initial_step"].get<double>();
  if (j.contains("variant")) base.variant = parse_variant(j["variant"].get<std::string>());
  return base;
}

json to_json(const PopulationParams& p) {
  return json{{"mu_beta", vector_json(p.mu_beta)},
              {"Sigma_beta", matrix_json(p.Sigma_beta)},
              {"mu_alpha", vector_json(p.mu_alpha)},
              {"Sigma_alpha", matrix_json(p.Sigma_alpha)},
              {"mu_tauA", p.mu_tauA},
              {"sigma2_tauA", p.sigma2_tauA},
              {"omega", p.omega},
              {"phi", p.ar.phi}};
}

PopulationParams population_from_json(const json& j) {
  PopulationParams p;
  p.mu_beta = vector_from(j.at("mu_beta"), "mu_beta", 3);
  p.Sigma_beta = matrix_from(j.at("Sigma_beta"), "Sigma_beta", 3, 3);
  p.mu_alpha = vector_from(j.at("mu_alpha"), "mu_alpha", 2);
  p.Sigma_alpha = matrix_from(j.at("Sigma_alpha"), "Sigma_alpha", 2, 2);
  p.mu_tauA = j.at("mu_tauA").get<double>();
  p.sigma2_tauA = j.at("sigma2_tauA").get<double>();
  if (j.contains("omega")) p.omega = j["omega"].get<double>();
  if (j.contains("phi")) p.ar.phi = j["phi"].get<std::vector<double>>();
  return p;
}

json to_json(const IndividualParams& p) {
  return json{{"beta", {p.beta.beta0, p.beta.beta1, p.beta.beta2}},
              {"gamma", p.trans.gamma},
              {"tau", p.trans.tau},
              {"indicator", p.indicator},
              {"sigma2", p.sigma2}};
}

json to_json(const ScenarioSpec& s) {
  json j{{"name", s.name},      {"m", s.m},         {"n", s.n},     {"omega", s.omega},
         {"phi", s.ar.phi},     {"sigma2", s.sigma2}, {"seed", s.seed}, {"ar_burnin", s.ar_burnin}};
  json t = to_json(s.truth);
  t.erase("omega");
  t.erase("phi");
  j["truth"] = t;
  return j;
}

ScenarioSpec scenario_from_json(const json& j) {
  ScenarioSpec s;
  if (j.contains("base")) s = builtin_scenario(j["base"].get<std::string>());
  if (j.contains("name")) s.name = j["name"].get<std::string>();
  if (j.contains("m")) s.m = j["m"].get<int>();
  if (j.contains("n")) s.n = j["n"].get<int>();
  if (j.contains("omega")) s.omega = j["omega"].get<double>();
  if (j.contains("phi")) s.ar.phi = j["phi"].get<std::vector<double>>();
  if (j.contains("sigma2")) s.sigma2 = j["sigma2"].get<std::vector<double>>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("ar_burnin")) s.ar_burnin = j["ar_burnin"].get<int>();
  if (j.contains("truth")) {
    json t = j["truth"];
    t["omega"] = s.omega;
    t["phi"] = s.ar.phi;
    s.truth = population_from_json(t);
  }
  s.truth.omega = s.omega;
  s.truth.ar = s.ar;
  s.validate();
  return s;
}

json to_json(const TruthRecord& t) {
  json inds = json::array();
  for (const auto& ind : t.individuals) inds.push_back(to_json(ind));
  return json{{"spec", to_json(t.spec)}, {"individuals", inds}};
}

json to_json(const DicReport& r) {
  return json{{"p", r.p},       {"variant", to_string(r.variant)}, {"dbar", r.dbar}, {"d_at_mean", r.d_at_mean},
              {"pD", r.pD},     {"dic", r.dic},                     {"draws", r.draws}};
}

json to_json(const SummaryStats& s) {
  return json{{"mean", s.mean}, {"median", s.median}, {"lo95", s.lo},
              {"hi95", s.hi},   {"draws", s.draws},   {"reported", s.preferred}};
}

json to_json(const PopulationSummary& s) {
  json params = json::object();
  for (const auto& p : s.parameters) params[p.name] = to_json(p);
  return json{{"draws", s.draws},
              {"parameters", params},
              {"ctp_G_undefined_fraction", s.ctp_G_undefined_fraction},
              {"ctp_G_undefined_count", s.ctp_G_undefined_count},
              {"stationarity_proportion", s.stationarity_proportion},
              {"gradual_occupied_fraction", s.gradual_occupied_fraction},
              {"abrupt_occupied_fraction", s.abrupt_occupied_fraction}};
}

json to_json(const StudyReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{"parameter", row.name},
                        {"truth", row.truth},
                        {"avg_posterior_mean", row.mean_of_means},
                        {"avg_posterior_median", row.mean_of_medians},
                        {"coverage95", row.coverage},
                        {"replicates", row.replicates},
                        {"undefined", row.undefined},
                        {"reported", row.preferred}});
  return json{{"scenario", r.scenario}, {"requested", r.requested}, {"succeeded", r.succeeded},
              {"failed", r.failed},     {"failures", r.failures},   {"rows", rows}};
}

std::vector<std::string> draw_columns(int p, std::size_t m) {
  std::vector<std::string> c{"chain", "draw", "deviance", "omega", "mu0", "mu1", "mu2",
                             "Sigma_beta_11", "Sigma_beta_12", "Sigma_beta_13", "Sigma_beta_22", "Sigma_beta_23",
                             "Sigma_beta_33", "mu_gamma", "mu_tau", "Sigma_alpha_11", "Sigma_alpha_12",
                             "Sigma_alpha_22", "mu_tauA", "sigma2_tauA"};
  for (int k = 1; k <= p; ++k) c.push_back("phi_" + std::to_string(k));
  for (std::size_t i = 1; i <= m; ++i)
    for (const char* f : {"beta0_", "beta1_", "beta2_", "gamma_", "tau_", "I_", "sigma2_"})
      c.push_back(f + std::to_string(i));
  return c;
}

std::string draws_to_csv(const std::vector<ChainOutput>& chains) {
  if (chains.empty()) throw std::invalid_argument("draws_to_csv: no chains");
  const int p = chains.front().p;
  const std::size_t m = chains.front().individuals.empty() ? 0 : chains.front().individuals.front().size();
  std::string out;
  const auto cols = draw_columns(p, m);
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
  out += '\n';
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    for (std::size_t d = 0; d < ch.population.size(); ++d) {
      const auto& pop = ch.population[d];
      out += std::to_string(c + 1) + ',' + std::to_string(d + 1) + ',' + fmt(ch.deviance[d]);
      const double vals[] = {pop.omega,
                             pop.mu_beta[0],
                             pop.mu_beta[1],
                             pop.mu_beta[2],
                             pop.Sigma_beta(0, 0),
                             pop.Sigma_beta(0, 1),
                             pop.Sigma_beta(0, 2),
                             pop.Sigma_beta(1, 1),
                             pop.Sigma_beta(1, 2),
                             pop.Sigma_beta(2, 2),
                             pop.mu_alpha[0],
                             pop.mu_alpha[1],
                             pop.Sigma_alpha(0, 0),
                             pop.Sigma_alpha(0, 1),
                             pop.Sigma_alpha(1, 1),
                             pop.mu_tauA,
                             pop.sigma2_tauA};
      for (double v : vals) out += ',' + fmt(v);
      for (double v : pop.ar.phi) out += ',' + fmt(v);
      if (m > 0) {
        for (const auto& ind : ch.individuals[d]) {
          out += ',' + fmt(ind.beta.beta0) + ',' + fmt(ind.beta.beta1) + ',' + fmt(ind.beta.beta2) + ',' +
                 fmt(ind.trans.gamma) + ',' + fmt(ind.trans.tau) + ',' + std::to_string(ind.indicator) + ',' +
                 fmt(ind.sigma2);
        }
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<ChainOutput> draws_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("draws table is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  int p = 0;
  while (std::find(header.begin(), header.end(), "phi_" + std::to_string(p + 1)) != header.end()) ++p;
  const std::size_t fixed = 20 + static_cast<std::size_t>(p);
  if (header.size() < fixed || (header.size() - fixed) % 7 != 0)
    throw std::invalid_argument("draws table has an unexpected column layout");
  const std::size_t m = (header.size() - fixed) / 7;
  if (header != draw_columns(p, m)) throw std::invalid_argument("draws table header does not match the layout");

  std::map<int, ChainOutput> chains;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> v;
    v.reserve(header.size());
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) v.push_back(std::stod(f));
    if (v.size() != header.size())
      throw std::invalid_argument("draws table row " + std::to_string(row) + " has the wrong number of fields");
    ChainOutput& ch = chains[static_cast<int>(v[0])];
    ch.p = p;
    ch.deviance.push_back(v[2]);
    PopulationParams pop;
    pop.omega = v[3];
    pop.mu_beta = Eigen::Vector3d(v[4], v[5], v[6]);
    pop.Sigma_beta << v[7], v[8], v[9], v[8], v[10], v[11], v[9], v[11], v[12];
    pop.mu_alpha = Eigen::Vector2d(v[13], v[14]);
    pop.Sigma_alpha << v[15], v[16], v[16], v[17];
    pop.mu_tauA = v[18];
    pop.sigma2_tauA = v[19];
    pop.ar.phi.assign(v.begin() + 20, v.begin() + 20 + p);
    ch.population.push_back(pop);
    if (m > 0) {
      std::vector<IndividualParams> inds(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double* x = v.data() + fixed + 7 * i;
        inds[i].beta = {x[0], x[1], x[2]};
        inds[i].trans = {x[3], x[4]};
        inds[i].indicator = static_cast<int>(x[5]);
        inds[i].sigma2 = x[6];
      }
      ch.individuals.push_back(std::move(inds));
    }
  }
  std::vector<ChainOutput> out;
  for (auto& [id, ch] : chains) {
    ch.alpha_acceptance.assign(m, 0.0);
    ch.indicator_flips.assign(m, 0);
    out.push_back(std::move(ch));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

std::string digest_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bentcable

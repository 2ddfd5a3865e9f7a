#include "bentcable/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace bentcable {

double lognormal_sd(double mu, double var) {
  return std::sqrt(std::exp(2.0 * mu + var) * (std::exp(var) - 1.0));
}

DerivedDraw derive_per_draw(const PopulationParams& pop) {
  DerivedDraw d;
  const double mu_g = pop.mu_alpha[0], mu_t = pop.mu_alpha[1];
  const double v_g = pop.Sigma_alpha(0, 0), v_t = pop.Sigma_alpha(1, 1), c_gt = pop.Sigma_alpha(0, 1);
  d.M_gamma = std::exp(mu_g);
  d.M_tau = std::exp(mu_t);
  d.M_tauA = std::exp(pop.mu_tauA);
  d.S_gamma = lognormal_sd(mu_g, v_g);
  d.S_tau = lognormal_sd(mu_t, v_t);
  d.S_tauA = lognormal_sd(pop.mu_tauA, pop.sigma2_tauA);

  const double mu1 = pop.mu_beta[1], mu2 = pop.mu_beta[2];
  d.outgoing_slope = mu1 + mu2;
  d.ctp_G = critical_time_point(BentCableCoefs{pop.mu_beta[0], mu1, mu2}, TransitionCoefs{d.M_gamma, d.M_tau});
  d.ctp_A = d.M_tauA;

  const auto& S = pop.Sigma_beta;
  d.sd_beta0 = std::sqrt(S(0, 0));
  d.sd_beta1 = std::sqrt(S(1, 1));
  d.sd_beta2 = std::sqrt(S(2, 2));
  d.sd_outgoing = std::sqrt(S(1, 1) + S(2, 2) + 2.0 * S(1, 2));
  d.corr_beta01 = S(0, 1) / (d.sd_beta0 * d.sd_beta1);
  d.corr_beta02 = S(0, 2) / (d.sd_beta0 * d.sd_beta2);
  d.corr_beta12 = S(1, 2) / (d.sd_beta1 * d.sd_beta2);
  d.corr_gamma_tau = c_gt / std::sqrt(v_g * v_t);

  // Moments of the bivariate lognormal (gamma, tau).
  const double var_g = d.S_gamma * d.S_gamma;
  const double var_t = d.S_tau * d.S_tau;
  const double cov_gt = std::exp(mu_g + mu_t + 0.5 * (v_g + v_t)) * (std::exp(c_gt) - 1.0);
  const double cov = cov_gt - var_g;
  const double var_diff = var_t + var_g - 2.0 * cov_gt;
  d.corr_gamma_incoming = cov / std::sqrt(var_g * var_diff);
  return d;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SummaryStats summarize_values(const std::string& name, const std::vector<double>& values, double level,
                              const std::string& preferred) {
  SummaryStats s;
  s.name = name;
  s.preferred = preferred;
  s.draws = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double prob) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto a = static_cast<std::size_t>(std::floor(h));
    const auto b = std::min(a + 1, sorted.size() - 1);
    return sorted[a] + (h - static_cast<double>(a)) * (sorted[b] - sorted[a]);
  };
  const double tail = 0.5 * (1.0 - level);
  s.median = q(0.5);
  s.lo = q(tail);
  s.hi = q(1.0 - tail);
  // Identical draws must give identical summaries.
  if (sorted.front() == sorted.back()) s.mean = s.median = s.lo = s.hi = sorted.front();
  return s;
}

const SummaryStats* PopulationSummary::find(const std::string& name) const {
  for (const auto& p : parameters)
    if (p.name == name) return &p;
  return nullptr;
}

PopulationSummary summarize_population(const ChainOutput& chain, double level) {
  if (chain.population.empty()) throw std::invalid_argument("summarize_population: empty chain");
  PopulationSummary out;
  out.draws = chain.population.size();
  out.stationarity_proportion = chain.stationarity_proportion();

  // Parameters of a population are only defined while it has members.
  enum class Scope { All, Mixture, Gradual, Abrupt };
  const bool has_g = chain.variant != ModelVariant::AOnly;
  const bool has_a = chain.variant != ModelVariant::GOnly;
  struct Column {
    std::string name;
    std::string preferred;
    Scope scope;
    std::function<double(const PopulationParams&, const DerivedDraw&)> get;
    std::vector<double> values;
  };
  std::vector<Column> cols;
  auto add = [&](std::string name, const char* pref, Scope scope, auto get) {
    if (scope == Scope::Mixture && chain.variant != ModelVariant::Flexible) return;
    if (scope == Scope::Gradual && !has_g) return;
    if (scope == Scope::Abrupt && !has_a) return;
    cols.push_back(Column{std::move(name), pref, scope, get, {}});
  };
  using P = const PopulationParams&;
  using D = const DerivedDraw&;
  add("omega", "mean", Scope::Mixture, [](P p, D) { return p.omega; });
  add("mu0", "mean", Scope::All, [](P p, D) { return p.mu_beta[0]; });
  add("mu1", "mean", Scope::All, [](P p, D) { return p.mu_beta[1]; });
  add("mu2", "mean", Scope::All, [](P p, D) { return p.mu_beta[2]; });
  add("mu_gamma", "mean", Scope::Gradual, [](P p, D) { return p.mu_alpha[0]; });
  add("mu_tau", "mean", Scope::Gradual, [](P p, D) { return p.mu_alpha[1]; });
  add("mu_tauA", "mean", Scope::Abrupt, [](P p, D) { return p.mu_tauA; });
  for (int r = 0; r < 3; ++r)
    for (int c = r; c < 3; ++c)
      add("Sigma_beta_" + std::to_string(r + 1) + std::to_string(c + 1), "median", Scope::All,
          [r, c](P p, D) { return p.Sigma_beta(r, c); });
  add("Sigma_alpha_11", "median", Scope::Gradual, [](P p, D) { return p.Sigma_alpha(0, 0); });
  add("Sigma_alpha_22", "median", Scope::Gradual, [](P p, D) { return p.Sigma_alpha(1, 1); });
  add("Sigma_alpha_12", "median", Scope::Gradual, [](P p, D) { return p.Sigma_alpha(0, 1); });
  add("sigma2_tauA", "median", Scope::Abrupt, [](P p, D) { return p.sigma2_tauA; });
  for (int k = 0; k < chain.p; ++k)
    add("phi_" + std::to_string(k + 1), "mean", Scope::All,
        [k](P p, D) { return p.ar.phi[static_cast<std::size_t>(k)]; });
  add("M_gamma", "mean", Scope::Gradual, [](P, D d) { return d.M_gamma; });
  add("M_tau", "mean", Scope::Gradual, [](P, D d) { return d.M_tau; });
  add("M_tauA", "mean", Scope::Abrupt, [](P, D d) { return d.M_tauA; });
  add("M_tau_minus_M_gamma", "mean", Scope::Gradual, [](P, D d) { return d.M_tau - d.M_gamma; });
  add("M_tau_plus_M_gamma", "mean", Scope::Gradual, [](P, D d) { return d.M_tau + d.M_gamma; });
  add("ctp_A", "mean", Scope::Abrupt, [](P, D d) { return d.ctp_A; });
  add("outgoing_slope", "mean", Scope::All, [](P, D d) { return d.outgoing_slope; });
  add("S_gamma", "median", Scope::Gradual, [](P, D d) { return d.S_gamma; });
  add("S_tau", "median", Scope::Gradual, [](P, D d) { return d.S_tau; });
  add("S_tauA", "median", Scope::Abrupt, [](P, D d) { return d.S_tauA; });
  add("sd_beta0", "median", Scope::All, [](P, D d) { return d.sd_beta0; });
  add("sd_beta1", "median", Scope::All, [](P, D d) { return d.sd_beta1; });
  add("sd_beta2", "median", Scope::All, [](P, D d) { return d.sd_beta2; });
  add("sd_outgoing", "median", Scope::All, [](P, D d) { return d.sd_outgoing; });
  add("corr_beta01", "median", Scope::All, [](P, D d) { return d.corr_beta01; });
  add("corr_beta02", "median", Scope::All, [](P, D d) { return d.corr_beta02; });
  add("corr_beta12", "median", Scope::All, [](P, D d) { return d.corr_beta12; });
  add("corr_gamma_tau", "median", Scope::Gradual, [](P, D d) { return d.corr_gamma_tau; });
  add("corr_gamma_incoming", "median", Scope::Gradual, [](P, D d) { return d.corr_gamma_incoming; });

  const bool have_individuals = !chain.individuals.empty();
  std::size_t g_occupied = 0, a_occupied = 0;
  std::vector<double> ctp;
  for (std::size_t t = 0; t < chain.population.size(); ++t) {
    const PopulationParams& pop = chain.population[t];
    std::size_t m_g = 1, m_a = 1;
    if (have_individuals) {
      m_g = 0;
      for (const auto& ind : chain.individuals[t]) m_g += ind.indicator == 1;
      m_a = chain.individuals[t].size() - m_g;
    }
    const bool g_ok = has_g && m_g > 0;
    const bool a_ok = has_a && m_a > 0;
    g_occupied += g_ok;
    a_occupied += a_ok;
    const DerivedDraw d = derive_per_draw(pop);
    for (auto& c : cols) {
      if ((c.scope == Scope::Gradual && !g_ok) || (c.scope == Scope::Abrupt && !a_ok)) continue;
      c.values.push_back(c.get(pop, d));
    }
    if (g_ok && d.ctp_G) ctp.push_back(*d.ctp_G);
  }
  const double n = static_cast<double>(chain.population.size());
  out.gradual_occupied_fraction = static_cast<double>(g_occupied) / n;
  out.abrupt_occupied_fraction = static_cast<double>(a_occupied) / n;
  for (const auto& c : cols)
    if (!c.values.empty()) out.parameters.push_back(summarize_values(c.name, c.values, level, c.preferred));
  if (has_g) {
    out.ctp_G_undefined_count = g_occupied - ctp.size();
    out.ctp_G_undefined_fraction =
        g_occupied > 0 ? static_cast<double>(out.ctp_G_undefined_count) / static_cast<double>(g_occupied) : 0.0;
    if (!ctp.empty()) out.parameters.push_back(summarize_values("ctp_G", ctp, level));
  }

  if (have_individuals) {
    const std::size_t m = chain.individuals.front().size();
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> s2, ind;
      for (const auto& draw : chain.individuals) {
        s2.push_back(draw[i].sigma2);
        ind.push_back(draw[i].indicator);
      }
      out.parameters.push_back(summarize_values("sigma2_" + std::to_string(i + 1), s2, level, "median"));
      out.parameters.push_back(summarize_values("P_gradual_" + std::to_string(i + 1), ind, level));
    }
  }
  return out;
}

namespace {

void band_from_samples(const std::vector<std::vector<double>>& samples, double level, Band& band) {
  for (std::size_t g = 0; g < samples.size(); ++g) {
    const SummaryStats s = summarize_values("", samples[g], level);
    band.mean[g] = s.mean;
    band.lo[g] = s.lo;
    band.hi[g] = s.hi;
  }
}

Band make_band(std::span<const double> grid) {
  Band b;
  b.times.assign(grid.begin(), grid.end());
  b.mean.resize(grid.size());
  b.lo.resize(grid.size());
  b.hi.resize(grid.size());
  return b;
}

}  // namespace

Band fitted_individual(const ChainOutput& chain, std::size_t i, std::span<const double> grid, double level) {
  if (chain.individuals.empty()) throw std::invalid_argument("fitted_individual: no stored individual draws");
  if (i >= chain.individuals.front().size()) throw std::out_of_range("fitted_individual: bad index");
  Band band = make_band(grid);
  std::vector<std::vector<double>> samples(grid.size());
  for (const auto& draw : chain.individuals) {
    const auto& ind = draw[i];
    for (std::size_t g = 0; g < grid.size(); ++g) samples[g].push_back(bent_cable(grid[g], ind.beta, ind.trans));
  }
  band_from_samples(samples, level, band);
  return band;
}

PopulationCurves fitted_population(const ChainOutput& chain, std::span<const double> grid, double level) {
  if (chain.population.empty()) throw std::invalid_argument("fitted_population: empty chain");
  PopulationCurves c{make_band(grid), make_band(grid)};
  std::vector<std::vector<double>> sg(grid.size()), sa(grid.size());
  for (const auto& pop : chain.population) {
    const BentCableCoefs lin{pop.mu_beta[0], pop.mu_beta[1], pop.mu_beta[2]};
    const TransitionCoefs g{std::exp(pop.mu_alpha[0]), std::exp(pop.mu_alpha[1])};
    const TransitionCoefs a{0.0, std::exp(pop.mu_tauA)};
    for (std::size_t k = 0; k < grid.size(); ++k) {
      sg[k].push_back(bent_cable(grid[k], lin, g));
      sa[k].push_back(bent_cable(grid[k], lin, a));
    }
  }
  band_from_samples(sg, level, c.gradual);
  band_from_samples(sa, level, c.abrupt);
  return c;
}

std::vector<double> linear_grid(double from, double to, int points) {
  if (points < 2) return {from};
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) g[static_cast<std::size_t>(k)] = from + (to - from) * k / (points - 1);
  return g;
}

std::string curves_to_csv(const PopulationCurves& curves) {
  std::ostringstream out;
  out.precision(10);
  out << "time,mean,lo95,hi95,population\n";
  auto emit = [&](const Band& b, const char* pop) {
    for (std::size_t k = 0; k < b.times.size(); ++k)
      out << b.times[k] << ',' << b.mean[k] << ',' << b.lo[k] << ',' << b.hi[k] << ',' << pop << '\n';
  };
  emit(curves.gradual, "G");
  emit(curves.abrupt, "A");
  return out.str();
}

std::string curves_to_svg(const PopulationCurves& curves, const std::string& title) {
  const double width = 640, height = 400, margin = 50;
  double tmin = curves.gradual.times.front(), tmax = curves.gradual.times.back();
  double ymin = 1e300, ymax = -1e300;
  for (const Band* b : {&curves.gradual, &curves.abrupt})
    for (std::size_t k = 0; k < b->times.size(); ++k) {
      ymin = std::min(ymin, b->lo[k]);
      ymax = std::max(ymax, b->hi[k]);
    }
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  if (!(tmax > tmin)) tmax = tmin + 1.0;
  auto px = [&](double t) { return margin + (t - tmin) / (tmax - tmin) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin); };
  std::ostringstream out;
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << margin << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  auto path = [&](const Band& b, const std::vector<double>& ys, const char* color, const char* dash) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dash) out << " stroke-dasharray=\"" << dash << "\"";
    out << " points=\"";
    for (std::size_t k = 0; k < b.times.size(); ++k) out << px(b.times[k]) << ',' << py(ys[k]) << ' ';
    out << "\"/>\n";
  };
  path(curves.abrupt, curves.abrupt.mean, "grey", nullptr);
  path(curves.abrupt, curves.abrupt.lo, "grey", "3,3");
  path(curves.abrupt, curves.abrupt.hi, "grey", "3,3");
  path(curves.gradual, curves.gradual.mean, "black", nullptr);
  path(curves.gradual, curves.gradual.lo, "black", "3,3");
  path(curves.gradual, curves.gradual.hi, "black", "3,3");
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", tmin);
  out << "<text x=\"" << margin << "\" y=\"" << height - margin + 15 << "\" font-size=\"10\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.4g", tmax);
  out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 15 << "\" font-size=\"10\">" << buf
      << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.4g", ymax);
  out << "<text x=\"5\" y=\"" << margin << "\" font-size=\"10\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.4g", ymin);
  out << "<text x=\"5\" y=\"" << height - margin << "\" font-size=\"10\">" << buf << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace bentcable

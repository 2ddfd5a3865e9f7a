#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bentcable/sampler.hpp"

namespace bentcable {

/// Population-level quantities derived from one posterior draw.
struct DerivedDraw {
  double M_gamma = 0.0;  ///< median of gamma_i in population G
  double M_tau = 0.0;    ///< median of tau_i in population G
  double M_tauA = 0.0;   ///< median of tau_i in population A
  double S_gamma = 0.0;  ///< lognormal standard deviation of gamma_i
  double S_tau = 0.0;
  double S_tauA = 0.0;
  std::optional<double> ctp_G;
  double ctp_A = 0.0;
  double outgoing_slope = 0.0;
  double sd_beta0 = 0.0, sd_beta1 = 0.0, sd_beta2 = 0.0;
  double sd_outgoing = 0.0;  ///< sd of beta1 + beta2
  double corr_beta01 = 0.0, corr_beta02 = 0.0, corr_beta12 = 0.0;
  double corr_gamma_tau = 0.0;        ///< corr(log gamma, log tau)
  double corr_gamma_incoming = 0.0;   ///< corr(gamma_i, tau_i - gamma_i)
};

/// Standard deviation of a lognormal with log-scale mean and variance.
double lognormal_sd(double mu, double var);

DerivedDraw derive_per_draw(const PopulationParams& pop);

/// Equal-tailed sample quantile with linear interpolation (type 7).
double quantile(std::vector<double> values, double prob);

struct SummaryStats {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double lo = 0.0;  ///< lower equal-tailed bound
  double hi = 0.0;
  std::size_t draws = 0;
  /// Which point estimate the usual report uses: "mean" for regression
  /// coefficients and locations, "median" for variances and standard
  /// deviations.
  std::string preferred = "mean";
};

SummaryStats summarize_values(const std::string& name, const std::vector<double>& values,
                              double level = 0.95, const std::string& preferred = "mean");

struct PopulationSummary {
  std::vector<SummaryStats> parameters;
  std::size_t draws = 0;
  /// Fraction of draws (among those with population G occupied) whose G
  /// critical time point is undefined.
  double ctp_G_undefined_fraction = 0.0;
  std::size_t ctp_G_undefined_count = 0;
  double stationarity_proportion = 1.0;
  /// Fractions of draws in which population G / A had at least one member.
  /// Parameters of a population are summarized over those draws only.
  double gradual_occupied_fraction = 1.0;
  double abrupt_occupied_fraction = 1.0;

  const SummaryStats* find(const std::string& name) const;
};

/// Posterior summaries of population-level parameters and derived
/// quantities. omega is only reported for the flexible variant; parameters
/// of a population the variant excludes are omitted.
PopulationSummary summarize_population(const ChainOutput& chain, double level = 0.95);

struct Band {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Posterior mean and pointwise equal-tailed band of individual i's bent
/// cable, evaluating each stored draw with its own gamma (0 when abrupt).
Band fitted_individual(const ChainOutput& chain, std::size_t i, std::span<const double> grid,
                       double level = 0.95);

struct PopulationCurves {
  Band gradual;
  Band abrupt;
};

/// Population curves from theoretical medians: G uses (mu_beta, M_gamma,
/// M_tau), A uses (mu_beta, 0, M_tauA). Only Level-2/3 uncertainty enters
/// the bands.
PopulationCurves fitted_population(const ChainOutput& chain, std::span<const double> grid,
                                   double level = 0.95);

std::vector<double> linear_grid(double from, double to, int points);

/// Tidy CSV: time,mean,lo95,hi95,population.
std::string curves_to_csv(const PopulationCurves& curves);
/// Static SVG line chart of the two population curves and their bands.
std::string curves_to_svg(const PopulationCurves& curves, const std::string& title = "");

}  // namespace bentcable

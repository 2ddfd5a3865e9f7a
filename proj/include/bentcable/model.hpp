#pragma once

// Bent-cable mean structure, its broken-stick limit, critical time points
// and the AR(p)-filtered regression quantities used by the Level-1
// conditional likelihood.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bentcable {

class LongitudinalDataset;

/// Raised when a model cannot be set up for the given data (e.g. a profile
/// shorter than the AR order).
class ModelSetupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a parameter lies outside its domain (e.g. a non-positive
/// variance).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Linear coefficients of the bent cable: incoming intercept, incoming
/// slope, and the change in slope between incoming and outgoing phases.
struct BentCableCoefs {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;

  double outgoing_slope() const { return beta1 + beta2; }
};

/// Transition coefficients: half-width `gamma` (0 for an abrupt transition)
/// and centre `tau` of the bend.
struct TransitionCoefs {
  double gamma = 0.0;
  double tau = 1.0;

  bool abrupt() const { return gamma == 0.0; }
};

/// Autoregressive coefficients phi_1..phi_p of the within-individual errors.
struct ArCoefs {
  std::vector<double> phi;

  int order() const { return static_cast<int>(phi.size()); }
  double sum() const;
  /// True when every root of 1 - phi_1 z - ... - phi_p z^p lies outside the
  /// unit circle. Order 0 is trivially stationary.
  bool is_stationary() const;
};

/// Per-individual regression state. `indicator` is 1 for the gradual
/// population (gamma > 0) and 0 for the abrupt population (gamma == 0).
struct IndividualParams {
  BentCableCoefs beta;
  TransitionCoefs trans;
  int indicator = 1;
  double sigma2 = 1.0;
};

/// Quadratic-bend basis: 0 left of the bend, (t - tau + gamma)^2 / (4 gamma)
/// inside it, t - tau right of it. With gamma == 0 this is the hinge
/// max(t - tau, 0).
double q_basis(double t, const TransitionCoefs& trans);

double bent_cable(double t, const BentCableCoefs& lin, const TransitionCoefs& trans);

/// Time at which the slope of the cable changes sign, or nullopt when it
/// does not.
std::optional<double> critical_time_point(const BentCableCoefs& lin, const TransitionCoefs& trans);

/// AR-filtered quantities for observations p+1..n of one profile.
struct ArTransformed {
  std::vector<double> z;  ///< filtered responses
  std::vector<double> x;  ///< filtered times
  std::vector<double> r;  ///< filtered bend basis
  double intercept = 1.0; ///< 1 - sum(phi)
};

ArTransformed ar_transform(std::span<const double> times, std::span<const double> responses,
                           std::span<const double> basis, const ArCoefs& ar);

/// Conditional mean of observation j (j >= p) given the p preceding
/// responses.
double conditional_mean(std::span<const double> times, std::span<const double> responses,
                        const IndividualParams& ind, const ArCoefs& ar, std::size_t j);

/// Innovations v_j = e_j - sum_k phi_k e_{j-k} for j = p..n-1 where
/// e_j = y_j - f(t_j). Writes into `out` (resized to n - p).
void innovations(std::span<const double> times, std::span<const double> responses,
                 const BentCableCoefs& lin, const TransitionCoefs& trans, const ArCoefs& ar,
                 std::vector<double>& out);

/// Sum of squared innovations for one profile.
double innovation_ss(std::span<const double> times, std::span<const double> responses,
                     const BentCableCoefs& lin, const TransitionCoefs& trans, const ArCoefs& ar);

/// Conditional log-likelihood contribution of one profile.
double profile_loglik(std::span<const double> times, std::span<const double> responses,
                      const IndividualParams& ind, const ArCoefs& ar);

/// Level-1 conditional log-likelihood summed over individuals; the first p
/// observations of each profile are treated as known.
double level1_loglik(const LongitudinalDataset& ds, std::span<const IndividualParams> params,
                     const ArCoefs& ar);

}  // namespace bentcable

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bentcable {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One individual's repeated measurements, times strictly increasing.
struct Profile {
  std::string id;
  std::vector<double> times;
  std::vector<double> responses;

  std::size_t size() const { return times.size(); }
  double time_range() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

/// Minimum sizes enforced when a dataset is built. Ingested files use the
/// defaults; in-process callers may relax them for single-profile models.
struct DatasetLimits {
  std::size_t min_individuals = 2;
  std::size_t min_observations = 4;
};

class LongitudinalDataset {
 public:
  LongitudinalDataset() = default;
  explicit LongitudinalDataset(std::vector<Profile> profiles, DatasetLimits limits = {});

  std::size_t size() const { return profiles_.size(); }
  const Profile& operator[](std::size_t i) const { return profiles_[i]; }
  std::span<const Profile> profiles() const { return profiles_; }

  std::size_t min_length() const;
  std::size_t total_observations() const;

  /// Replaces the responses of profile i (same length). Used by simulation
  /// based checks that regenerate data around a fixed design.
  void set_responses(std::size_t i, std::vector<double> y);

 private:
  std::vector<Profile> profiles_;
};

/// Reads a long-format CSV with header `id,time,y`. Rows of one id must
/// appear in strictly increasing time order.
LongitudinalDataset load_csv(const std::filesystem::path& path, DatasetLimits limits = {});
LongitudinalDataset parse_csv(const std::string& text, DatasetLimits limits = {});
void write_csv(const LongitudinalDataset& ds, const std::filesystem::path& path);
std::string to_csv(const LongitudinalDataset& ds);

/// Warnings for profiles whose time steps are not equal to within `rel_tol`
/// (AR(p) errors assume equal spacing).
std::vector<std::string> spacing_warnings(const LongitudinalDataset& ds, double rel_tol = 1e-9);

/// View of a dataset for DIC comparison across AR orders: the first
/// p_max - p observations of every profile are dropped and the next p act
/// as the known AR preamble, so the likelihood-contributing block is
/// observations p_max+1..n_i for every p.
struct ReducedView {
  const LongitudinalDataset* source = nullptr;
  int p_max = 0;
  int p = 0;

  int dropped() const { return p_max - p; }
  /// Zero-based source indices of the likelihood-contributing observations
  /// of profile i.
  std::vector<std::size_t> random_indices(std::size_t i) const;
  /// Materializes the view as a dataset whose first p observations are the
  /// preamble.
  LongitudinalDataset materialize() const;
};

ReducedView reduce_for_dic(const LongitudinalDataset& ds, int p_max, int p);

}  // namespace bentcable

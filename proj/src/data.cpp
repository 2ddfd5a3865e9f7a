#include "bentcable/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace bentcable {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(trim(f));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace

LongitudinalDataset::LongitudinalDataset(std::vector<Profile> profiles, DatasetLimits limits)
    : profiles_(std::move(profiles)) {
  if (profiles_.empty()) throw DataError("no profiles");
  if (profiles_.size() < limits.min_individuals)
    throw DataError("dataset has " + std::to_string(profiles_.size()) + " profiles, need at least " +
                    std::to_string(limits.min_individuals));
  for (const auto& p : profiles_) {
    if (p.times.size() != p.responses.size())
      throw DataError("profile '" + p.id + "': times and responses differ in length");
    if (p.size() < limits.min_observations)
      throw DataError("profile '" + p.id + "' has " + std::to_string(p.size()) +
                      " observations, need at least " + std::to_string(limits.min_observations));
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!std::isfinite(p.times[j]) || !std::isfinite(p.responses[j]))
        throw DataError("profile '" + p.id + "': non-finite value at position " + std::to_string(j));
      if (j > 0 && !(p.times[j] > p.times[j - 1]))
        throw DataError("profile '" + p.id + "': times are not strictly increasing");
    }
  }
}

std::size_t LongitudinalDataset::min_length() const {
  std::size_t n = profiles_.empty() ? 0 : profiles_.front().size();
  for (const auto& p : profiles_) n = std::min(n, p.size());
  return n;
}

std::size_t LongitudinalDataset::total_observations() const {
  std::size_t n = 0;
  for (const auto& p : profiles_) n += p.size();
  return n;
}

void LongitudinalDataset::set_responses(std::size_t i, std::vector<double> y) {
  if (y.size() != profiles_.at(i).size()) throw DataError("set_responses: length mismatch");
  profiles_[i].responses = std::move(y);
}

LongitudinalDataset parse_csv(const std::string& text, DatasetLimits limits) {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (!trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw DataError("no profiles: file is empty");
  if (!line.empty() && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // BOM
  const auto header = split_fields(line);
  if (header != std::vector<std::string>{"id", "time", "y"})
    throw DataError("row " + std::to_string(row) + ": header must be 'id,time,y'");

  std::vector<Profile> profiles;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 3)
      throw DataError("row " + std::to_string(row) + ": expected 3 fields, found " +
                      std::to_string(f.size()));
    if (f[0].empty()) throw DataError("row " + std::to_string(row) + ": empty id");
    double t = 0.0, y = 0.0;
    if (!parse_double(f[1], t))
      throw DataError("row " + std::to_string(row) + ": non-numeric time '" + f[1] + "'");
    if (!parse_double(f[2], y))
      throw DataError("row " + std::to_string(row) + ": non-numeric y '" + f[2] + "'");
    auto [it, inserted] = index.try_emplace(f[0], profiles.size());
    if (inserted) profiles.push_back(Profile{f[0], {}, {}});
    Profile& p = profiles[it->second];
    if (!p.times.empty()) {
      if (t == p.times.back() ||
          std::find(p.times.begin(), p.times.end(), t) != p.times.end())
        throw DataError("row " + std::to_string(row) + ": duplicate (id, time) = (" + f[0] + ", " +
                        f[1] + ")");
      if (t < p.times.back())
        throw DataError("row " + std::to_string(row) + ": time " + f[1] + " for id '" + f[0] +
                        "' is not increasing");
    }
    p.times.push_back(t);
    p.responses.push_back(y);
  }
  if (profiles.empty()) throw DataError("no profiles");
  return LongitudinalDataset(std::move(profiles), limits);
}

LongitudinalDataset load_csv(const std::filesystem::path& path, DatasetLimits limits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), limits);
}

std::string to_csv(const LongitudinalDataset& ds) {
  std::ostringstream out;
  out << std::setprecision(17) << "id,time,y\n";
  for (const auto& p : ds.profiles())
    for (std::size_t j = 0; j < p.size(); ++j)
      out << p.id << ',' << p.times[j] << ',' << p.responses[j] << '\n';
  return out.str();
}

void write_csv(const LongitudinalDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_csv(ds);
}

std::vector<std::string> spacing_warnings(const LongitudinalDataset& ds, double rel_tol) {
  std::vector<std::string> warnings;
  for (const auto& p : ds.profiles()) {
    if (p.size() < 3) continue;
    const double step = p.times[1] - p.times[0];
    for (std::size_t j = 2; j < p.size(); ++j) {
      const double s = p.times[j] - p.times[j - 1];
      if (std::abs(s - step) > rel_tol * std::abs(step)) {
        warnings.push_back("profile '" + p.id +
                           "' has unequal time spacing; AR errors assume equal steps");
        break;
      }
    }
  }
  return warnings;
}

std::vector<std::size_t> ReducedView::random_indices(std::size_t i) const {
  std::vector<std::size_t> idx;
  for (std::size_t j = static_cast<std::size_t>(p_max); j < (*source)[i].size(); ++j) idx.push_back(j);
  return idx;
}

LongitudinalDataset ReducedView::materialize() const {
  std::vector<Profile> out;
  out.reserve(source->size());
  const auto drop = static_cast<std::ptrdiff_t>(dropped());
  for (const auto& p : source->profiles()) {
    Profile q{p.id, {p.times.begin() + drop, p.times.end()},
              {p.responses.begin() + drop, p.responses.end()}};
    out.push_back(std::move(q));
  }
  return LongitudinalDataset(std::move(out), DatasetLimits{1, static_cast<std::size_t>(p) + 1});
}

ReducedView reduce_for_dic(const LongitudinalDataset& ds, int p_max, int p) {
  if (p < 0 || p > p_max) throw DataError("reduce_for_dic: need 0 <= p <= p_max");
  if (ds.min_length() <= static_cast<std::size_t>(p_max))
    throw DataError("reduce_for_dic: every profile needs more than p_max = " +
                    std::to_string(p_max) + " observations");
  return ReducedView{&ds, p_max, p};
}

}  // namespace bentcable

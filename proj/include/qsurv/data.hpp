// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Right-censored survival data and its CSV form.
///
/// CSV schema: a header row containing a `time` column and an `event` column;
/// every other column is a numeric covariate, in header order.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "qsurv/errors.hpp"
#include "qsurv/random.hpp"

namespace qsurv {

/// One subject: covariates, observed time, event indicator.
struct SurvivalRecord {
  std::vector<double> x;
  double time = 0.0;
  int event = 0;
};

/// Column-oriented survival data. Covariates are stored row-major.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<std::string> covariate_names) : names_(std::move(covariate_names)) {}

  std::size_t size() const { return time_.size(); }
  bool empty() const { return time_.empty(); }
  std::size_t dim() const { return names_.size(); }
  const std::vector<std::string>& covariate_names() const { return names_; }

  void add(std::span<const double> x, double time, int event) {
    if (x.size() != dim()) {
      throw ShapeError("record has " + std::to_string(x.size()) + " covariates, dataset expects " +
                       std::to_string(dim()));
    }
    if (!(time >= 0.0) || !std::isfinite(time)) throw IngestionError("observed time must be finite and >= 0");
    if (event != 0 && event != 1) throw IngestionError("event indicator must be 0 or 1");
    for (double v : x)
      if (!std::isfinite(v)) throw IngestionError("covariates must be finite");
    x_.insert(x_.end(), x.begin(), x.end());
    time_.push_back(time);
    event_.push_back(event);
  }

  void add(const SurvivalRecord& r) { add(r.x, r.time, r.event); }

  std::span<const double> x(std::size_t i) const { return {x_.data() + i * dim(), dim()}; }
  std::span<const double> covariates() const { return x_; }
  double time(std::size_t i) const { return time_[i]; }
  int event(std::size_t i) const { return event_[i]; }
  const std::vector<double>& times() const { return time_; }
  const std::vector<int>& events() const { return event_; }

  SurvivalRecord record(std::size_t i) const {
    return {std::vector<double>(x(i).begin(), x(i).end()), time_[i], event_[i]};
  }

  std::size_t event_count() const { return static_cast<std::size_t>(std::count(event_.begin(), event_.end(), 1)); }

  double censoring_rate() const {
    return empty() ? 0.0 : 1.0 - static_cast<double>(event_count()) / static_cast<double>(size());
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out(names_);
    for (std::size_t i : indices) out.add(x(i), time_[i], event_[i]);
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<double> x_;
  std::vector<double> time_;
  std::vector<int> event_;
};

/// Per-covariate mean and standard deviation (population form).
/// Constant columns get scale 1.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;
};

inline Standardization fit_standardization(const Dataset& data) {
  const std::size_t d = data.dim(), n = data.size();
  Standardization s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += data.x(i)[c];
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = data.x(i)[c] - s.mean[c];
      var[c] += dv * dv;
    }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(n));
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Random split stratified by event indicator: each stratum contributes
/// round(fraction * stratum size) subjects to validation. Both output lists are sorted.
inline Split stratified_split(const Dataset& data, double validation_fraction, Rng& rng) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must be in (0, 1)");
  }
  Split split;
  for (int stratum : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.event(i) == stratum) idx.push_back(i);
    rng.shuffle(idx);
    const auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(idx.size())));
    split.validation.insert(split.validation.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest decimal form that round-trips a double (at most 17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r\"");
    const auto e = field.find_last_not_of(" \t\r\"");
    fields.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_number(const std::string& text, const std::string& column, std::size_t line) {
  if (text.empty()) throw IngestionError("missing value in column '" + column + "' on line " + std::to_string(line));
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw IngestionError("non-numeric value '" + text + "' in column '" + column + "' on line " +
                         std::to_string(line));
  }
  return v;
}

}  // namespace detail

/// Parse survival CSV. With `require_outcome` false the `time`/`event`
/// columns are optional (covariate-only files for prediction).
inline Dataset read_csv(std::istream& in, bool require_outcome = true) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("CSV input is empty");
  const auto header = detail::split_csv_line(line);
  int time_col = -1, event_col = -1;
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "time") {
      time_col = static_cast<int>(c);
    } else if (header[c] == "event") {
      event_col = static_cast<int>(c);
    } else {
      if (header[c].empty()) throw IngestionError("empty column name at position " + std::to_string(c));
      cov_cols.push_back(c);
      names.push_back(header[c]);
    }
  }
  if (require_outcome) {
    if (time_col < 0) throw IngestionError("required column 'time' is missing");
    if (event_col < 0) throw IngestionError("required column 'event' is missing");
  }
  Dataset data(names);
  std::vector<double> x(cov_cols.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IngestionError("line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                           " fields, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cov_cols.size(); ++c) x[c] = detail::parse_number(fields[cov_cols[c]], names[c], line_no);
    double t = 0.0;
    int e = 0;
    if (time_col >= 0) {
      t = detail::parse_number(fields[static_cast<std::size_t>(time_col)], "time", line_no);
      if (t < 0.0) throw IngestionError("negative value in column 'time' on line " + std::to_string(line_no));
    }
    if (event_col >= 0) {
      const double ev = detail::parse_number(fields[static_cast<std::size_t>(event_col)], "event", line_no);
      if (ev != 0.0 && ev != 1.0) {
        throw IngestionError("column 'event' must be 0 or 1 (line " + std::to_string(line_no) + ")");
      }
      e = static_cast<int>(ev);
    }
    data.add(x, t, e);
  }
  return data;
}

inline Dataset read_csv_file(const std::string& path, bool require_outcome = true) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  return read_csv(in, require_outcome);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  for (const auto& n : data.covariate_names()) out << n << ',';
  out << "time,event\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x(i)) out << format_double(v) << ',';
    out << format_double(data.time(i)) << ',' << data.event(i) << '\n';
  }
}

inline void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  write_csv(out, data);
}

/// Linear-interpolation quantile (type 7) of unsorted values.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  v[n - 1] = hi;
  return v;
}

}  // namespace qsurv

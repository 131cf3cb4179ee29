#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cliotime/csv.hpp"
#include "cliotime/error.hpp"
#include "cliotime/logistic.hpp"
#include "cliotime/random.hpp"

namespace cliotime {

inline constexpr std::string_view kCulturalLabel = "cultural.continuity";
inline constexpr std::string_view kInstitutionalLabel = "institutional.continuity";
// Spelling accepted on input alongside kInstitutionalLabel.
inline constexpr std::string_view kInstitutionalLabelAlt = "institutional.continuity-equivalent";
inline constexpr std::string_view kOutsideLabel = "outside.central";

inline constexpr std::array<std::string_view, 7> kRequiredColumns = {
    "NGA", "PolID", "AbsTime", "RelTime", "SPC1", "Culture.Sequence", "Institutions.Sequence"};
inline constexpr std::string_view kScaledColumn = "SPC1.scaled";

enum class ContinuityMode { Cultural, Institutional };

inline std::string_view to_string(ContinuityMode mode) noexcept {
  return mode == ContinuityMode::Cultural ? "cultural" : "institutional";
}

struct Observation {
  std::string nga;
  std::string pol_id;
  int abs_time = 0;                      // calendar year, BCE negative
  std::optional<int> rel_time_recorded;  // as present in the source file
  double spc1_raw = 0.0;
  bool cultural_continuity = false;
  bool institutional_continuity = false;

  bool continuous(ContinuityMode mode) const noexcept {
    return mode == ContinuityMode::Cultural ? cultural_continuity : institutional_continuity;
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct RegionSeries {
  std::string nga;
  std::vector<Observation> points;  // ascending abs_time
  std::vector<double> spc1_scaled;  // empty until scaled

  bool is_scaled() const noexcept { return !points.empty() && spc1_scaled.size() == points.size(); }

  friend bool operator==(const RegionSeries&, const RegionSeries&) = default;
};

/// Affine map (x - min) / (max - min) onto the unit interval.
struct ScaleRange {
  double min = 0.0;
  double max = 1.0;

  double apply(double raw) const noexcept { return (raw - min) / (max - min); }
  double invert(double scaled) const noexcept { return min + scaled * (max - min); }

  friend bool operator==(const ScaleRange&, const ScaleRange&) = default;
};

struct Dataset {
  std::vector<RegionSeries> regions;  // ascending by NGA name
  std::optional<ScaleRange> scale;

  bool is_scaled() const noexcept { return scale.has_value(); }

  std::size_t point_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : regions) n += r.points.size();
    return n;
  }

  const RegionSeries* find(std::string_view nga) const noexcept {
    for (const auto& r : regions) {
      if (r.nga == nga) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace detail {

inline bool parse_label(std::string_view raw, ContinuityMode mode, std::size_t line) {
  const auto value = csv::trim(raw);
  if (value.empty() || value == "NA" || value == kOutsideLabel) return false;
  if (mode == ContinuityMode::Cultural && value == kCulturalLabel) return true;
  if (mode == ContinuityMode::Institutional &&
      (value == kInstitutionalLabel || value == kInstitutionalLabelAlt)) {
    return true;
  }
  throw RowError(line, "unknown " + std::string(to_string(mode)) + " continuity label '" +
                           std::string(value) + "'");
}

inline int checked_year(long long value, std::size_t line, std::string_view column) {
  if (value < -1'000'000 || value > 1'000'000) {
    throw RowError(line, std::string(column) + " out of range");
  }
  return static_cast<int>(value);
}

}  // namespace detail

/// Reads the panel format. Columns are located by header name; unknown columns
/// are ignored. Rows are grouped by NGA (regions sorted by name) and ordered by
/// AbsTime. An SPC1.scaled column, when present and filled on every row,
/// restores the scaled state written by serialize_dataset.
inline Dataset parse_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (!csv::trim(line).empty()) {
      header = csv::split_record(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::Format, "input has no header row");

  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    column.emplace(std::string(csv::trim(header[i])), i);
  }
  std::array<std::size_t, kRequiredColumns.size()> idx{};
  for (std::size_t k = 0; k < kRequiredColumns.size(); ++k) {
    const auto it = column.find(kRequiredColumns[k]);
    if (it == column.end()) {
      throw Error(ErrorCode::Format, "header is missing column '" + std::string(kRequiredColumns[k]) + "'");
    }
    idx[k] = it->second;
  }
  const auto scaled_it = column.find(kScaledColumn);
  const std::size_t scaled_col = scaled_it == column.end() ? std::string::npos : scaled_it->second;
  const std::size_t min_fields = *std::max_element(idx.begin(), idx.end()) + 1;

  struct Row {
    Observation obs;
    std::optional<double> scaled;
    std::size_t line;
  };
  std::map<std::string, std::vector<Row>, std::less<>> by_region;

  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split_record(line);
    if (fields.size() < min_fields) {
      throw RowError(line_no, "expected at least " + std::to_string(min_fields) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    Row row{{}, std::nullopt, line_no};
    row.obs.nga = std::string(csv::trim(fields[idx[0]]));
    row.obs.pol_id = std::string(csv::trim(fields[idx[1]]));
    if (row.obs.nga.empty()) throw RowError(line_no, "empty NGA");

    const auto abs_time = csv::parse_integral(fields[idx[2]]);
    if (!abs_time) throw RowError(line_no, "AbsTime '" + fields[idx[2]] + "' is not an integer year");
    row.obs.abs_time = detail::checked_year(*abs_time, line_no, "AbsTime");

    if (!csv::is_missing(fields[idx[3]])) {
      const auto rel = csv::parse_integral(fields[idx[3]]);
      if (!rel) throw RowError(line_no, "RelTime '" + fields[idx[3]] + "' is not an integer year");
      row.obs.rel_time_recorded = detail::checked_year(*rel, line_no, "RelTime");
    }

    const auto spc1 = csv::parse_double(fields[idx[4]]);
    if (!spc1 || !std::isfinite(*spc1)) {
      throw RowError(line_no, "SPC1 '" + fields[idx[4]] + "' is not a finite number");
    }
    row.obs.spc1_raw = *spc1;
    row.obs.cultural_continuity = detail::parse_label(fields[idx[5]], ContinuityMode::Cultural, line_no);
    row.obs.institutional_continuity =
        detail::parse_label(fields[idx[6]], ContinuityMode::Institutional, line_no);

    if (scaled_col < fields.size() && !csv::is_missing(fields[scaled_col])) {
      const auto scaled = csv::parse_double(fields[scaled_col]);
      if (!scaled) throw RowError(line_no, "SPC1.scaled '" + fields[scaled_col] + "' is not a number");
      row.scaled = *scaled;
    }
    by_region[row.obs.nga].push_back(std::move(row));
  }

  Dataset dataset;
  bool all_scaled = !by_region.empty();
  for (auto& [nga, rows] : by_region) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& l, const Row& r) { return l.obs.abs_time < r.obs.abs_time; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const int gap = rows[i].obs.abs_time - rows[i - 1].obs.abs_time;
      if (gap == 0) {
        throw Error(ErrorCode::Duplicate, "NGA '" + nga + "' has AbsTime " +
                                              std::to_string(rows[i].obs.abs_time) + " on lines " +
                                              std::to_string(rows[i - 1].line) + " and " +
                                              std::to_string(rows[i].line));
      }
      if (gap % 100 != 0) {
        throw Error(ErrorCode::Grid, "NGA '" + nga + "' line " + std::to_string(rows[i].line) +
                                         ": AbsTime " + std::to_string(rows[i].obs.abs_time) +
                                         " is off the century grid");
      }
    }
    RegionSeries series;
    series.nga = nga;
    for (auto& row : rows) {
      all_scaled = all_scaled && row.scaled.has_value();
      series.points.push_back(std::move(row.obs));
    }
    if (all_scaled) {
      for (const auto& row : rows) series.spc1_scaled.push_back(*row.scaled);
    }
    dataset.regions.push_back(std::move(series));
  }

  if (all_scaled) {
    // Under global scaling the raw extrema map to 0 and 1, so the stored range
    // is recovered from the raw column.
    double lo = dataset.regions.front().points.front().spc1_raw;
    double hi = lo;
    for (const auto& r : dataset.regions) {
      for (const auto& p : r.points) {
        lo = std::min(lo, p.spc1_raw);
        hi = std::max(hi, p.spc1_raw);
      }
    }
    dataset.scale = ScaleRange{lo, hi};
  } else {
    for (auto& r : dataset.regions) r.spc1_scaled.clear();
  }
  return dataset;
}

inline Dataset parse_dataset(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dataset(in);
}

/// Writes the input columns plus SPC1.scaled (blank when unscaled).
inline std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  for (std::size_t k = 0; k < kRequiredColumns.size(); ++k) {
    out += kRequiredColumns[k];
    out += ',';
  }
  out += kScaledColumn;
  out += '\n';
  for (const auto& region : dataset.regions) {
    for (std::size_t i = 0; i < region.points.size(); ++i) {
      const auto& p = region.points[i];
      out += csv::quote_if_needed(p.nga) + ',' + csv::quote_if_needed(p.pol_id) + ',' +
             std::to_string(p.abs_time) + ',' +
             (p.rel_time_recorded ? std::to_string(*p.rel_time_recorded) : std::string()) + ',' +
             csv::format_double(p.spc1_raw) + ',' +
             std::string(p.cultural_continuity ? kCulturalLabel : kOutsideLabel) + ',' +
             std::string(p.institutional_continuity ? kInstitutionalLabel : kOutsideLabel) + ',';
      if (region.is_scaled()) out += csv::format_double(region.spc1_scaled[i]);
      out += '\n';
    }
  }
  return out;
}

/// Raw extrema over every observation of every region.
inline ScaleRange raw_extrema(const Dataset& dataset) {
  bool first = true;
  ScaleRange range;
  for (const auto& r : dataset.regions) {
    for (const auto& p : r.points) {
      range.min = first ? p.spc1_raw : std::min(range.min, p.spc1_raw);
      range.max = first ? p.spc1_raw : std::max(range.max, p.spc1_raw);
      first = false;
    }
  }
  return range;
}

/// Min-max scaling with a single range shared by all regions. By default the
/// range is the global raw extrema; `fixed` substitutes an externally chosen
/// range (values outside it then map outside [0, 1]).
inline Dataset minmax_scale(Dataset dataset, std::optional<ScaleRange> fixed = std::nullopt) {
  const ScaleRange range = fixed ? *fixed : raw_extrema(dataset);
  if (dataset.point_count() == 0 || !(range.min < range.max)) {
    throw Error(ErrorCode::DegenerateScale,
                "min-max scaling needs at least two distinct SPC1 values");
  }
  for (auto& r : dataset.regions) {
    r.spc1_scaled.clear();
    r.spc1_scaled.reserve(r.points.size());
    for (const auto& p : r.points) r.spc1_scaled.push_back(range.apply(p.spc1_raw));
  }
  dataset.scale = range;
  return dataset;
}

/// All scaled values of every region, in region then time order.
inline std::vector<double> pooled_scaled_values(const Dataset& dataset) {
  if (!dataset.is_scaled()) throw Error(ErrorCode::State, "dataset has not been scaled");
  std::vector<double> values;
  values.reserve(dataset.point_count());
  for (const auto& r : dataset.regions) values.insert(values.end(), r.spc1_scaled.begin(), r.spc1_scaled.end());
  return values;
}

/// Parameters for century-sampled logistic panels used as test fixtures and by
/// the `synth` command.
struct SyntheticSpec {
  int n_regions = 23;
  LogisticParams params{1.0, 0.0, 0.002, 0.0};
  double noise_sigma = 0.0;
  // Calendar year of each region's RelTime origin; cycled when shorter than
  // n_regions. Empty selects -3000 + 200 * k.
  std::vector<int> anchor_years;
  // Centuries sampled before and after the origin (cycled like anchor_years).
  std::vector<int> centuries_before{30};
  std::vector<int> centuries_after{30};
  // Half-width in centuries of the continuity windows around the origin;
  // negative marks the whole series continuous.
  int cultural_halfwidth = -1;
  int institutional_halfwidth = -1;
  std::string name_prefix = "Region";
};

/// Region k samples RelTime 100 * j for j in [-before, after], draws
/// f(RelTime) + N(0, sigma^2) as raw SPC1, and places the sample at calendar
/// year anchor + RelTime. Deterministic in (spec, seed).
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n_regions <= 0) throw Error(ErrorCode::Parameter, "synthetic region count must be positive");
  if (!(spec.noise_sigma >= 0.0)) throw Error(ErrorCode::Parameter, "noise sigma must be non-negative");
  if (spec.centuries_before.empty() || spec.centuries_after.empty()) {
    throw Error(ErrorCode::Parameter, "plateau lengths must not be empty");
  }
  const auto cycled = [](const std::vector<int>& v, int k) { return v[static_cast<std::size_t>(k) % v.size()]; };

  Dataset dataset;
  const int width = std::to_string(spec.n_regions - 1).size();
  for (int k = 0; k < spec.n_regions; ++k) {
    Substream rng(seed, StreamTag::Synthetic, static_cast<std::uint64_t>(k));
    const int anchor = spec.anchor_years.empty() ? -3000 + 200 * k : cycled(spec.anchor_years, k);
    const int before = cycled(spec.centuries_before, k);
    const int after = cycled(spec.centuries_after, k);
    if (before < 0 || after < 0) throw Error(ErrorCode::Parameter, "plateau lengths must be non-negative");

    std::string index = std::to_string(k);
    RegionSeries series;
    series.nga = spec.name_prefix + " " + std::string(width - index.size(), '0') + index;
    for (int j = -before; j <= after; ++j) {
      Observation obs;
      obs.nga = series.nga;
      obs.pol_id = series.nga + "-P" + std::to_string(j < 0 ? 0 : 1);
      obs.abs_time = anchor + 100 * j;
      obs.spc1_raw = logistic_eval(spec.params, 100.0 * j);
      if (spec.noise_sigma > 0.0) obs.spc1_raw += spec.noise_sigma * rng.normal();
      const int dist = j < 0 ? -j : j;
      obs.cultural_continuity = spec.cultural_halfwidth < 0 || dist <= spec.cultural_halfwidth;
      obs.institutional_continuity = spec.institutional_halfwidth < 0 || dist <= spec.institutional_halfwidth;
      if (obs.cultural_continuity || obs.institutional_continuity) obs.rel_time_recorded = 100 * j;
      series.points.push_back(std::move(obs));
    }
    dataset.regions.push_back(std::move(series));
  }
  std::sort(dataset.regions.begin(), dataset.regions.end(),
            [](const RegionSeries& l, const RegionSeries& r) { return l.nga < r.nga; });
  return dataset;
}

}  // namespace cliotime

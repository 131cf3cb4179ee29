#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "cliotime/dataset.hpp"
#include "cliotime/error.hpp"
#include "cliotime/logistic.hpp"

namespace cliotime {

struct AnchorResult {
  std::string nga;
  std::optional<int> anchor_year;
  bool crossed = false;
  std::size_t anchor_index = 0;
  // Observations whose scaled value equals the threshold exactly. They do not
  // anchor; the count is reported.
  std::size_t ties = 0;
};

/// First observation whose scaled SPC1 strictly exceeds the threshold.
inline AnchorResult anchor_time(const RegionSeries& series, double threshold) {
  if (!series.is_scaled()) {
    throw Error(ErrorCode::State, "region '" + series.nga + "' has not been scaled");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::Parameter, "anchor threshold must lie in (0, 1)");
  }
  AnchorResult result;
  result.nga = series.nga;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const double v = series.spc1_scaled[i];
    if (v == threshold) ++result.ties;
    if (!result.crossed && v > threshold) {
      result.crossed = true;
      result.anchor_year = series.points[i].abs_time;
      result.anchor_index = i;
    }
  }
  return result;
}

struct AlignedRegion {
  RegionSeries series;
  int anchor_year = 0;
  std::size_t anchor_index = 0;
  std::vector<int> rel_time;  // abs_time - anchor_year, per point

  std::size_t size() const noexcept { return rel_time.size(); }
  double value(std::size_t i) const noexcept { return series.spc1_scaled[i]; }
  const std::string& nga() const noexcept { return series.nga; }
};

struct AlignedDataset {
  std::vector<AlignedRegion> regions;  // ascending by NGA
  double threshold = 0.0;
  std::vector<std::string> discarded;
  std::vector<AnchorResult> anchors;  // one per input region, same order
  std::size_t tie_count = 0;

  std::size_t point_count() const noexcept {
    std::size_t n = 0;
    for (const auto& r : regions) n += r.size();
    return n;
  }

  const AlignedRegion* find(std::string_view nga) const noexcept {
    for (const auto& r : regions) {
      if (r.nga() == nga) return &r;
    }
    return nullptr;
  }
};

/// (RelTime, scaled SPC1) for every point of the region.
inline std::vector<DataPoint> region_points(const AlignedRegion& region) {
  std::vector<DataPoint> pts;
  pts.reserve(region.size());
  for (std::size_t i = 0; i < region.size(); ++i) {
    pts.push_back({static_cast<double>(region.rel_time[i]), region.value(i)});
  }
  return pts;
}

/// All retained points, region by region.
inline std::vector<DataPoint> pooled_points(const AlignedDataset& aligned) {
  std::vector<DataPoint> pts;
  pts.reserve(aligned.point_count());
  for (const auto& r : aligned.regions) {
    const auto region = region_points(r);
    pts.insert(pts.end(), region.begin(), region.end());
  }
  return pts;
}

inline AlignedRegion align_region(const RegionSeries& series, const AnchorResult& anchor) {
  AlignedRegion region;
  region.series = series;
  region.anchor_year = *anchor.anchor_year;
  region.anchor_index = anchor.anchor_index;
  region.rel_time.reserve(series.points.size());
  for (const auto& p : series.points) region.rel_time.push_back(p.abs_time - region.anchor_year);
  return region;
}

inline AlignedDataset shift_to_reltime(const Dataset& dataset, double threshold) {
  if (!dataset.is_scaled()) throw Error(ErrorCode::State, "dataset has not been scaled");
  AlignedDataset aligned;
  aligned.threshold = threshold;
  for (const auto& series : dataset.regions) {
    auto anchor = anchor_time(series, threshold);
    aligned.tie_count += anchor.ties;
    if (anchor.crossed) {
      aligned.regions.push_back(align_region(series, anchor));
    } else {
      aligned.discarded.push_back(series.nga);
    }
    aligned.anchors.push_back(std::move(anchor));
  }
  return aligned;
}

struct CentralSegment {
  std::string nga;
  ContinuityMode mode = ContinuityMode::Cultural;
  std::size_t begin = 0;  // index range [begin, end) into the region
  std::size_t end = 0;
  std::vector<DataPoint> points;

  std::size_t length() const noexcept { return end - begin; }
};

/// Longest run of points labelled continuous for `mode` that contains the
/// RelTime 0 observation.
inline CentralSegment extract_central_sequence(const AlignedRegion& region, ContinuityMode mode) {
  const auto& pts = region.series.points;
  const std::size_t zero = region.anchor_index;
  if (zero >= pts.size() || region.rel_time[zero] != 0) {
    throw Error(ErrorCode::State, "region '" + region.nga() + "' has no RelTime 0 observation");
  }
  if (!pts[zero].continuous(mode)) {
    throw Error(ErrorCode::NoCentralSegment, "region '" + region.nga() + "' is outside the central " +
                                                 std::string(to_string(mode)) +
                                                 " sequence at RelTime 0");
  }
  std::size_t begin = zero;
  while (begin > 0 && pts[begin - 1].continuous(mode)) --begin;
  std::size_t end = zero + 1;
  while (end < pts.size() && pts[end].continuous(mode)) ++end;

  CentralSegment segment{region.nga(), mode, begin, end, {}};
  segment.points.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    segment.points.push_back({static_cast<double>(region.rel_time[i]), region.value(i)});
  }
  return segment;
}

struct SegmentSet {
  ContinuityMode mode = ContinuityMode::Cultural;
  std::vector<CentralSegment> segments;  // ascending by NGA
  std::vector<std::pair<std::string, std::string>> excluded;  // (NGA, reason)

  double mean_length() const noexcept {
    if (segments.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : segments) total += static_cast<double>(s.length());
    return total / static_cast<double>(segments.size());
  }

  /// (NGA, length) by descending length, ties by name.
  std::vector<std::pair<std::string, std::size_t>> ranking() const {
    std::vector<std::pair<std::string, std::size_t>> rows;
    for (const auto& s : segments) rows.emplace_back(s.nga, s.length());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& l, const auto& r) { return l.second > r.second; });
    return rows;
  }
};

/// Central segments of every retained region. Regions without one are listed
/// in `excluded` instead of failing the whole set.
inline SegmentSet central_segments(const AlignedDataset& aligned, ContinuityMode mode) {
  SegmentSet set;
  set.mode = mode;
  for (const auto& region : aligned.regions) {
    try {
      set.segments.push_back(extract_central_sequence(region, mode));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoCentralSegment) throw;
      set.excluded.emplace_back(region.nga(), e.what());
    }
  }
  return set;
}

}  // namespace cliotime

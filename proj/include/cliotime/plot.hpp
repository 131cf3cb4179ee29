#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "cliotime/pipeline.hpp"
#include "cliotime/report.hpp"
#include "cliotime/svg.hpp"

namespace cliotime {

/// File-name-safe form of an NGA name.
inline std::string slug(std::string_view name) {
  std::string out;
  for (unsigned char ch : name) out.push_back(std::isalnum(ch) ? static_cast<char>(ch) : '_');
  return out.empty() ? std::string("region") : out;
}

namespace detail {

inline std::string row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  return out + "\n";
}

inline std::string num(double v) { return csv::format_double(v); }

// Full-data fit crossing RelTimes for a pair of thresholds, when both lie
// inside its asymptote interval.
inline std::optional<std::pair<double, double>> fit_crossings(const LogisticParams& p, double th1, double th2) {
  try {
    return std::pair{logistic_inverse(p, th1), logistic_inverse(p, th2)};
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline std::vector<DataPoint> sample_curve(const LogisticParams& p, double lo, double hi, double step) {
  std::vector<DataPoint> pts;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = lo + step * static_cast<double>(i);
    pts.push_back({t, logistic_eval(p, t)});
  }
  return pts;
}

struct TimeSpan {
  double lo;
  double hi;
};

inline TimeSpan rel_time_span(const AlignedDataset& aligned) {
  int lo = 0;
  int hi = 0;
  for (const auto& r : aligned.regions) {
    lo = std::min(lo, r.rel_time.front());
    hi = std::max(hi, r.rel_time.back());
  }
  return {100.0 * std::floor((lo - 500) / 100.0), 100.0 * std::ceil((hi + 500) / 100.0)};
}

inline void histogram(std::span<const double> values, double lo, double hi, std::size_t bins,
                      std::vector<double>& edges, std::vector<double>& density) {
  edges.clear();
  density.assign(bins, 0.0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) edges.push_back(lo + width * static_cast<double>(i));
  for (double v : values) {
    auto k = static_cast<long long>(std::floor((v - lo) / width));
    k = std::clamp<long long>(k, 0, static_cast<long long>(bins) - 1);
    density[static_cast<std::size_t>(k)] += 1.0;
  }
  for (auto& d : density) d /= static_cast<double>(values.size()) * width;
}

}  // namespace detail

/// Writes the plot-ready CSV tables and SVG renderings for a bundle. Returns
/// the written paths in creation order.
inline std::vector<std::filesystem::path> emit_plot_data(const ReportBundle& b, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  using detail::num;
  using detail::row;
  ensure_directory(dir);
  ensure_directory(dir / "series");
  std::vector<fs::path> written;
  const auto put = [&](const fs::path& path, const std::string& content) {
    write_text_file(path, content);
    written.push_back(path);
  };

  // Per-NGA shifted series.
  std::set<std::string> used;
  for (const auto& r : b.aligned.regions) {
    std::string name = slug(r.nga());
    for (int k = 2; used.count(name) != 0; ++k) name = slug(r.nga()) + "_" + std::to_string(k);
    used.insert(name);
    std::string out = row({"NGA", "AbsTime", "RelTime", "SPC1.scaled", "Culture.Sequence", "Institutions.Sequence"});
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto& p = r.series.points[i];
      out += row({csv::quote_if_needed(r.nga()), std::to_string(p.abs_time), std::to_string(r.rel_time[i]),
                  num(r.value(i)), std::string(p.cultural_continuity ? kCulturalLabel : kOutsideLabel),
                  std::string(p.institutional_continuity ? kInstitutionalLabel : kOutsideLabel)});
    }
    put(dir / "series" / (name + ".csv"), out);
  }

  // Dense curve samples; the full-fit threshold crossings are inserted exactly.
  const auto span = detail::rel_time_span(b.aligned);
  std::vector<double> times;
  for (double t = span.lo; t <= span.hi + 1e-9; t += 10.0) times.push_back(t);
  for (const auto& ts : b.timescales) {
    if (auto x = detail::fit_crossings(b.full_fit.params, ts.thresholds.th1, ts.thresholds.th2)) {
      times.push_back(x->first);
      times.push_back(x->second);
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  {
    std::string header = "RelTime,full";
    for (const auto& c : b.continuity) header += "," + std::string(to_string(c.segments.mode));
    std::string out = header + "\n";
    for (double t : times) {
      out += num(t) + "," + num(logistic_eval(b.full_fit.params, t));
      for (const auto& c : b.continuity) out += "," + num(logistic_eval(c.fit.params, t));
      out += "\n";
    }
    put(dir / "curves.csv", out);
  }

  {
    std::string out = row({"k_sigma", "th1", "th2", "t1_mean", "t2_mean", "duration_mean", "full_fit_t1", "full_fit_t2"});
    for (const auto& ts : b.timescales) {
      const auto x = detail::fit_crossings(b.full_fit.params, ts.thresholds.th1, ts.thresholds.th2);
      out += row({num(ts.thresholds.k_sigma), num(ts.thresholds.th1), num(ts.thresholds.th2), num(ts.estimate.t1_mean),
                  num(ts.estimate.t2_mean), num(ts.estimate.duration_mean), x ? num(x->first) : "",
                  x ? num(x->second) : ""});
    }
    put(dir / "growth_window.csv", out);
  }

  {
    std::string out = row({"SPC1.scaled", "density"});
    for (std::size_t i = 0; i < b.density.grid.size(); ++i) out += row({num(b.density.grid[i]), num(b.density.density[i])});
    put(dir / "kde.csv", out);
  }

  {
    std::string out = row({"NGA", "RelTime", "SPC1.scaled", "predicted", "residual"});
    std::size_t k = 0;
    for (const auto& r : b.aligned.regions) {
      for (std::size_t i = 0; i < r.size(); ++i, ++k) {
        out += row({csv::quote_if_needed(r.nga()), std::to_string(r.rel_time[i]), num(r.value(i)),
                    num(logistic_eval(b.full_fit.params, r.rel_time[i])), num(b.full_fit.residuals[k])});
      }
    }
    put(dir / "residuals.csv", out);
  }

  if (b.ensemble) {
    std::string out = row({"index", "a", "b", "c", "d"});
    for (std::size_t i = 0; i < b.ensemble->param_sets.size(); ++i) {
      const auto& p = b.ensemble->param_sets[i];
      out += row({std::to_string(i), num(p.a), num(p.b), num(p.c), num(p.d)});
    }
    put(dir / "bootstrap_params.csv", out);
  }

  if (b.empirical) {
    std::string out = row({"NGA", "tau1", "tau2", "duration"});
    for (const auto& d : b.empirical->per_nga) {
      out += row({csv::quote_if_needed(d.nga), std::to_string(d.tau1), std::to_string(d.tau2), std::to_string(d.duration)});
    }
    put(dir / "empirical_durations.csv", out);
  }

  for (const auto& c : b.continuity) {
    std::string out = row({"rank", "NGA", "length"});
    std::size_t rank = 1;
    for (const auto& [nga, len] : c.segments.ranking()) {
      out += row({std::to_string(rank++), csv::quote_if_needed(nga), std::to_string(len)});
    }
    put(dir / ("segments_" + std::string(to_string(c.segments.mode)) + ".csv"), out);
  }

  // Aligned series, fitted curve and growth window.
  const svg::Range x_range{span.lo, span.hi};
  const svg::Range y_range{-0.05, 1.05};
  const auto full_curve = detail::sample_curve(b.full_fit.params, span.lo, span.hi, 20.0);
  {
    svg::Plot plot(900, 520, x_range, y_range);
    const auto* window = b.timescale_for(3.0);
    if (window == nullptr && !b.timescales.empty()) window = &b.timescales.front();
    if (window != nullptr) plot.band(window->estimate.t1_mean, window->estimate.t2_mean, "#d62728", 0.15);
    for (std::size_t i = 0; i < b.aligned.regions.size(); ++i) {
      plot.polyline(region_points(b.aligned.regions[i]), svg::palette(i), 1.0, 0.6);
    }
    plot.polyline(full_curve, "#000000", 2.5);
    plot.axes("RelTime (years)", "SPC1 (scaled)",
              "Aligned series of " + std::to_string(b.aligned.regions.size()) + " NGAs and logistic fit");
    put(dir / "aligned_series.svg", plot.document());
  }

  {
    double peak = 0.0;
    for (double v : b.density.density) peak = std::max(peak, v);
    std::vector<double> edges;
    std::vector<double> heights;
    const auto values = pooled_scaled_values(b.dataset);
    detail::histogram(values, 0.0, 1.0, 25, edges, heights);
    for (double h : heights) peak = std::max(peak, h);
    svg::Plot plot(480, 320, {0.0, 1.0}, {0.0, peak * 1.05});
    plot.bars(edges, heights, "#9ecae1");
    std::vector<DataPoint> curve;
    for (std::size_t i = 0; i < b.density.grid.size(); ++i) curve.push_back({b.density.grid[i], b.density.density[i]});
    plot.polyline(curve, "#d62728", 2.0);
    plot.vline(b.threshold.spc1_0, "#000000");
    plot.axes("SPC1 (scaled)", "density", "SPC1 distribution, KDE and threshold");
    put(dir / "density.svg", plot.document());
  }

  {
    double largest = 0.0;
    for (double r : b.full_fit.residuals) largest = std::max(largest, std::abs(r));
    const double reach = std::max(0.05, std::ceil(largest * 20.0) / 20.0);
    std::vector<double> edges;
    std::vector<double> heights;
    detail::histogram(b.full_fit.residuals, -reach, reach, 30, edges, heights);
    const double top = *std::max_element(heights.begin(), heights.end());
    svg::Plot plot(480, 320, {-reach, reach}, {0.0, top * 1.05});
    plot.bars(edges, heights, "#a1d99b");
    plot.vline(0.0, "#000000");
    plot.axes("residual", "density", "Residuals of the full-data fit");
    put(dir / "residuals.svg", plot.document());
  }

  if (!b.continuity.empty()) {
    svg::Plot plot(900, 520, x_range, y_range);
    std::size_t color = 1;
    for (const auto& c : b.continuity) {
      for (const auto& s : c.segments.segments) plot.markers(s.points, svg::palette(color), 1.2);
      ++color;
    }
    plot.polyline(full_curve, "#000000", 2.5);
    color = 1;
    for (const auto& c : b.continuity) {
      plot.polyline(detail::sample_curve(c.fit.params, span.lo, span.hi, 20.0), svg::palette(color++), 2.0, 1.0, "8 4");
    }
    plot.axes("RelTime (years)", "SPC1 (scaled)", "Full-data fit (black) and continuity-restricted fits (dashed)");
    put(dir / "continuity_curves.svg", plot.document());
  }

  {
    constexpr std::size_t columns = 4;
    constexpr double panel_w = 260.0;
    constexpr double panel_h = 180.0;
    const std::size_t n = b.aligned.regions.size();
    const std::size_t rows = std::max<std::size_t>(1, (n + columns - 1) / columns);
    std::string content;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = b.aligned.regions[i];
      svg::Plot plot(panel_w, panel_h, x_range, y_range);
      plot.polyline(full_curve, "#000000", 1.5);
      plot.polyline(region_points(r), svg::palette(i), 1.2);
      plot.axes("RelTime", "SPC1", r.nga(), 4);
      content += plot.group(panel_w * static_cast<double>(i % columns), panel_h * static_cast<double>(i / columns));
    }
    put(dir / "small_multiples.svg", svg::Plot::wrap(panel_w * columns, panel_h * static_cast<double>(rows), content));
  }
  return written;
}

}  // namespace cliotime

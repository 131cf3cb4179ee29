#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "cliotime/pipeline.hpp"

namespace cliotime {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json params_json(const LogisticParams& p) {
  return Json{{"a", p.a}, {"b", p.b}, {"c", p.c}, {"d", p.d}, {"lower_plateau", p.lower_plateau()},
              {"upper_plateau", p.upper_plateau()}};
}

inline Json fit_json(const FitResult& fit) {
  return Json{{"params", params_json(fit.params)}, {"rmse", fit.rmse},       {"n_points", fit.n_points},
              {"converged", fit.converged},      {"iterations", fit.iterations}, {"gradient_norm", fit.gradient_norm}};
}

}  // namespace detail

/// Structured form of the report. The text report is rendered from this value,
/// so the two carry the same content.
inline Json report_json(const ReportBundle& b) {
  Json j;
  j["provenance"] = {{"tool", "cliotime"},
                     {"version", kVersion},
                     {"seed", b.provenance.seed},
                     {"config_hash", b.provenance.config_hash},
                     {"input_checksum", b.provenance.input_checksum},
                     {"input_bytes", b.provenance.input_bytes}};

  const auto& scale = *b.dataset.scale;
  j["dataset"] = {{"regions", b.dataset.regions.size()},
                  {"points", b.dataset.point_count()},
                  {"scale_min", scale.min},
                  {"scale_max", scale.max}};

  j["threshold"] = {{"spc1_0", b.threshold.spc1_0},
                    {"left_peak", b.threshold.left_peak},
                    {"right_peak", b.threshold.right_peak},
                    {"left_peak_density", b.threshold.left_peak_density},
                    {"right_peak_density", b.threshold.right_peak_density},
                    {"threshold_density", b.threshold.threshold_density},
                    {"bandwidth", b.density.bandwidth},
                    {"grid_size", b.density.grid.size()},
                    {"n_samples", b.density.n_samples}};

  Json anchors = Json::array();
  for (const auto& r : b.aligned.regions) {
    anchors.push_back({{"nga", r.nga()}, {"anchor_year", r.anchor_year}, {"points", r.size()}});
  }
  std::size_t retained_points = 0;
  std::size_t discarded_points = 0;
  for (const auto& r : b.dataset.regions) {
    (b.aligned.find(r.nga) ? retained_points : discarded_points) += r.points.size();
  }
  const auto mean_of = [](std::size_t total, std::size_t count) {
    return count == 0 ? Json(nullptr) : Json(static_cast<double>(total) / static_cast<double>(count));
  };
  j["alignment"] = {{"retained", b.aligned.regions.size()},
                    {"discarded", b.aligned.discarded.size()},
                    {"threshold_ties", b.aligned.tie_count},
                    {"pooled_points", b.pooled.size()},
                    {"mean_points_retained", mean_of(retained_points, b.aligned.regions.size())},
                    {"mean_points_discarded", mean_of(discarded_points, b.aligned.discarded.size())},
                    {"discarded_ngas", b.aligned.discarded},
                    {"anchors", anchors}};

  j["full_fit"] = detail::fit_json(b.full_fit);

  if (b.validation) {
    const auto& v = *b.validation;
    j["validation"] = {{"repeats", v.n_repeats},      {"failed", v.failed},
                       {"mean_rho2", v.mean_rho2},    {"stderr_rho2", v.stderr_rho2},
                       {"stddev_rho2", v.stddev_rho2}, {"seed", v.seed},
                       {"rho2_values", v.rho2_values}};
  }

  if (b.ensemble) {
    const auto& e = *b.ensemble;
    Json scales = Json::array();
    for (const auto& t : b.timescales) {
      scales.push_back({{"k_sigma", t.thresholds.k_sigma},
                        {"th1", t.thresholds.th1},
                        {"th2", t.thresholds.th2},
                        {"mean_b", t.thresholds.lower.mean},
                        {"sd_b", t.thresholds.lower.sd},
                        {"mean_upper", t.thresholds.upper.mean},
                        {"sd_upper", t.thresholds.upper.sd},
                        {"t1_mean", t.estimate.t1_mean},
                        {"t2_mean", t.estimate.t2_mean},
                        {"duration_mean", t.estimate.duration_mean},
                        {"crossing_curves", t.estimate.n_crossing_curves},
                        {"excluded_curves", t.estimate.n_excluded_curves}});
    }
    j["bootstrap"] = {{"iterations", e.n_iter},
                      {"accepted", e.param_sets.size()},
                      {"failed_fits", e.failed_fits},
                      {"non_converged", e.non_converged},
                      {"seed", e.seed},
                      {"timescales", scales}};
  }

  if (b.empirical) {
    const auto& em = *b.empirical;
    Json rows = Json::array();
    for (const auto& d : em.per_nga) {
      rows.push_back({{"nga", d.nga}, {"tau1", d.tau1}, {"tau2", d.tau2}, {"duration", d.duration}});
    }
    j["empirical_durations"] = {{"k_sigma", b.empirical_thresholds->k_sigma},
                                {"th1", b.empirical_thresholds->th1},
                                {"th2", b.empirical_thresholds->th2},
                                {"count", em.per_nga.size()},
                                {"mean", detail::number(em.mean_duration)},
                                {"median", detail::number(em.median_duration)},
                                {"excluded", em.excluded},
                                {"per_nga", rows}};
  }

  if (!b.continuity.empty()) {
    Json modes = Json::array();
    for (const auto& c : b.continuity) {
      Json ranking = Json::array();
      for (const auto& [nga, len] : c.segments.ranking()) ranking.push_back({{"nga", nga}, {"length", len}});
      Json excluded = Json::array();
      for (const auto& [nga, reason] : c.segments.excluded) excluded.push_back(nga);
      modes.push_back({{"mode", to_string(c.segments.mode)},
                       {"segments", c.segments.segments.size()},
                       {"mean_length", c.segments.mean_length()},
                       {"excluded", excluded},
                       {"fit", detail::fit_json(c.fit)},
                       {"ranking", ranking}});
    }
    j["continuity"] = modes;
  }

  j["warnings"] = b.warnings;
  return j;
}

namespace detail {

inline bool is_scalar_array(const Json& j) {
  for (const auto& v : j) {
    if (v.is_structured()) return false;
  }
  return true;
}

inline void render(const Json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      render(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    }
  } else if (j.is_array() && !is_scalar_array(j)) {
    for (std::size_t i = 0; i < j.size(); ++i) render(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else {
    out += prefix + " = " + (j.is_string() ? j.get<std::string>() : j.dump()) + "\n";
  }
}

}  // namespace detail

/// Line-oriented `key = value` text, one section per top-level key.
inline std::string render_text(const Json& report) {
  std::string out = "# cliotime report\n";
  for (auto it = report.begin(); it != report.end(); ++it) {
    out += "\n[" + it.key() + "]\n";
    detail::render(it.value(), it.key(), out);
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::Io, "cannot create output directory '" + dir.string() + "'");
  }
}

/// Writes report.txt and report.json into `dir`.
inline void write_report(const ReportBundle& bundle, const std::filesystem::path& dir) {
  ensure_directory(dir);
  const Json j = report_json(bundle);
  write_text_file(dir / "report.json", j.dump(2) + "\n");
  write_text_file(dir / "report.txt", render_text(j));
}

}  // namespace cliotime

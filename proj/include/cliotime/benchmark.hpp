#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cliotime/pipeline.hpp"
#include "cliotime/report.hpp"

namespace cliotime {

struct RegionDivergence {
  std::string nga;
  bool anchorable = false;
  std::optional<int> anchor_year;
  std::vector<int> rel_time;
  std::vector<double> residuals;  // predicted - observed
  std::size_t exceeding = 0;      // |residual| > 2 * reference RMSE
  double fraction_exceeding = 0.0;
};

struct DivergenceReport {
  double threshold = 0.0;
  double reference_rmse = 0.0;
  ScaleRange scale;
  std::vector<RegionDivergence> regions;
};

/// Compares new series against a fitted bundle: values are scaled with the
/// bundle's extrema and anchored at its SPC1 threshold. A series that never
/// crosses the threshold is reported as not anchorable.
inline DivergenceReport benchmark_check(const ReportBundle& bundle, const Dataset& series) {
  if (!bundle.dataset.scale) throw Error(ErrorCode::State, "bundle has no stored scale");
  DivergenceReport report;
  report.threshold = bundle.threshold.spc1_0;
  report.reference_rmse = bundle.full_fit.rmse;
  report.scale = *bundle.dataset.scale;
  const Dataset scaled = minmax_scale(series, report.scale);
  const double limit = 2.0 * report.reference_rmse;
  for (const auto& r : scaled.regions) {
    RegionDivergence d;
    d.nga = r.nga;
    const auto anchor = anchor_time(r, report.threshold);
    if (anchor.crossed) {
      const auto aligned = align_region(r, anchor);
      d.anchorable = true;
      d.anchor_year = anchor.anchor_year;
      d.rel_time = aligned.rel_time;
      for (std::size_t i = 0; i < aligned.size(); ++i) {
        const double res = logistic_eval(bundle.full_fit.params, aligned.rel_time[i]) - aligned.value(i);
        d.residuals.push_back(res);
        if (std::abs(res) > limit) ++d.exceeding;
      }
      d.fraction_exceeding = static_cast<double>(d.exceeding) / static_cast<double>(d.residuals.size());
    }
    report.regions.push_back(std::move(d));
  }
  return report;
}

inline DivergenceReport benchmark_check(const ReportBundle& bundle, const std::filesystem::path& series_path) {
  return benchmark_check(bundle, parse_dataset(read_file(series_path)));
}

inline Json divergence_json(const DivergenceReport& report) {
  Json regions = Json::array();
  for (const auto& d : report.regions) {
    Json row = {{"nga", d.nga}, {"anchorable", d.anchorable}};
    if (d.anchorable) {
      row["anchor_year"] = *d.anchor_year;
      row["points"] = d.residuals.size();
      row["exceeding"] = d.exceeding;
      row["fraction_exceeding"] = d.fraction_exceeding;
      row["rel_time"] = d.rel_time;
      row["residuals"] = d.residuals;
    }
    regions.push_back(std::move(row));
  }
  return {{"threshold", report.threshold},
          {"reference_rmse", report.reference_rmse},
          {"scale_min", report.scale.min},
          {"scale_max", report.scale.max},
          {"regions", regions}};
}

}  // namespace cliotime

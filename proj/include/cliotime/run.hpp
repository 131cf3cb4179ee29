#pragma once

#include <filesystem>

#include "cliotime/pipeline.hpp"
#include "cliotime/plot.hpp"
#include "cliotime/report.hpp"

namespace cliotime {

/// Reads the input, runs every enabled stage and only then writes the report
/// and plot files, so a failing run leaves the output directory untouched.
inline ReportBundle run_pipeline(const PipelineConfig& config) {
  validate(config);
  const std::string text = read_file(config.input_path);
  ReportBundle bundle = analyze(text, config);
  write_report(bundle, config.output_dir);
  if (config.stages.plots) emit_plot_data(bundle, config.output_dir);
  return bundle;
}

}  // namespace cliotime

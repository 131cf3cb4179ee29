#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cliotime/cliotime.hpp"

namespace {

using cliotime::ContinuityMode;
using cliotime::Error;
using cliotime::ErrorCode;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = std::string(cliotime::csv::trim(item));
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

struct Options {
  std::string input;
  std::string out = "out";
  std::uint64_t seed = 1;
  std::size_t bootstrap = 1000;
  std::size_t validation = 100;
  std::string bandwidth = "auto";
  std::string k_sigma = "1,3";
  std::string modes = "cultural,institutional";
  unsigned threads = 1;
  std::optional<double> scale_min;
  std::optional<double> scale_max;
  bool no_plots = false;
  bool quiet = false;
};

void add_common(CLI::App& cmd, Options& o) {
  cmd.add_option("-i,--input", o.input, "Input CSV in the region/century format")->required()->envname("CLIOTIME_INPUT");
  cmd.add_option("-o,--out", o.out, "Output directory")->envname("CLIOTIME_OUT")->capture_default_str();
  cmd.add_option("--seed", o.seed, "Master RNG seed")->envname("CLIOTIME_SEED")->capture_default_str();
  cmd.add_option("--bandwidth", o.bandwidth, "KDE bandwidth: positive number or 'auto'")
      ->envname("CLIOTIME_BANDWIDTH")
      ->capture_default_str();
  cmd.add_option("--threads", o.threads, "Worker threads")->envname("CLIOTIME_THREADS")->capture_default_str();
  cmd.add_option("--scale-min", o.scale_min, "Fixed SPC1 scaling minimum (with --scale-max)");
  cmd.add_option("--scale-max", o.scale_max, "Fixed SPC1 scaling maximum (with --scale-min)");
  cmd.add_flag("--no-plots", o.no_plots, "Skip plot CSV and SVG files");
  cmd.add_flag("-q,--quiet", o.quiet, "Only print errors");
}

void add_validation(CLI::App& cmd, Options& o) {
  cmd.add_option("--validation", o.validation, "Out-of-sample validation repeats")
      ->envname("CLIOTIME_VALIDATION")
      ->capture_default_str();
}

void add_bootstrap(CLI::App& cmd, Options& o) {
  cmd.add_option("--bootstrap", o.bootstrap, "Bootstrap iterations")->envname("CLIOTIME_BOOTSTRAP")->capture_default_str();
  cmd.add_option("--k-sigma", o.k_sigma, "Plateau threshold multipliers, subset of 1,3")
      ->envname("CLIOTIME_K_SIGMA")
      ->capture_default_str();
}

void add_modes(CLI::App& cmd, Options& o) {
  cmd.add_option("--modes", o.modes, "Continuity modes, subset of cultural,institutional")
      ->envname("CLIOTIME_MODES")
      ->capture_default_str();
}

cliotime::PipelineConfig to_config(const Options& o, cliotime::Stages stages) {
  cliotime::PipelineConfig c;
  c.input_path = o.input;
  c.output_dir = o.out;
  c.seed = o.seed;
  c.n_bootstrap = o.bootstrap;
  c.n_validation = o.validation;
  c.threads = o.threads;
  stages.plots = !o.no_plots;
  c.stages = stages;
  if (o.bandwidth != "auto") {
    const auto h = cliotime::csv::parse_double(o.bandwidth);
    if (!h) throw Error(ErrorCode::Parameter, "bandwidth must be a number or 'auto'");
    c.bandwidth = cliotime::Bandwidth::fixed(*h);
  }
  c.k_sigma_list.clear();
  for (const auto& k : split_list(o.k_sigma)) {
    const auto v = cliotime::csv::parse_integral(k);
    if (!v) throw Error(ErrorCode::Parameter, "invalid k-sigma value '" + k + "'");
    c.k_sigma_list.push_back(static_cast<int>(*v));
  }
  c.continuity_modes.clear();
  for (const auto& m : split_list(o.modes)) {
    if (m == "cultural") {
      c.continuity_modes.push_back(ContinuityMode::Cultural);
    } else if (m == "institutional") {
      c.continuity_modes.push_back(ContinuityMode::Institutional);
    } else {
      throw Error(ErrorCode::Parameter, "unknown continuity mode '" + m + "'");
    }
  }
  if (stages.continuity && c.continuity_modes.empty()) throw Error(ErrorCode::Parameter, "no continuity mode selected");
  if (o.scale_min.has_value() != o.scale_max.has_value()) {
    throw Error(ErrorCode::Parameter, "--scale-min and --scale-max must be given together");
  }
  if (o.scale_min) c.scale_range = cliotime::ScaleRange{*o.scale_min, *o.scale_max};
  return c;
}

void summarize(const cliotime::ReportBundle& b) {
  std::cout << "SPC1_0 = " << b.threshold.spc1_0 << "\n"
            << "retained = " << b.aligned.regions.size() << ", discarded = " << b.aligned.discarded.size() << "\n"
            << "full fit: a = " << b.full_fit.params.a << ", b = " << b.full_fit.params.b
            << ", c = " << b.full_fit.params.c << ", d = " << b.full_fit.params.d << ", rmse = " << b.full_fit.rmse
            << "\n";
  if (b.validation) {
    std::cout << "rho2 = " << b.validation->mean_rho2 << " +/- " << b.validation->stderr_rho2 << "\n";
  }
  for (const auto& t : b.timescales) {
    std::cout << "k = " << t.thresholds.k_sigma << ": th1 = " << t.thresholds.th1 << ", th2 = " << t.thresholds.th2
              << ", duration = " << t.estimate.duration_mean << " yr\n";
  }
  if (b.empirical) {
    std::cout << "empirical durations: n = " << b.empirical->per_nga.size() << ", mean = " << b.empirical->mean_duration
              << ", median = " << b.empirical->median_duration << "\n";
  }
  for (const auto& c : b.continuity) {
    std::cout << to_string(c.segments.mode) << ": mean segment length = " << c.segments.mean_length()
              << ", upper plateau = " << c.fit.params.upper_plateau() << "\n";
  }
  for (const auto& w : b.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "report written to " << b.config.output_dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Align regional social-complexity series and fit logistic growth curves"};
  app.set_version_flag("--version", std::string(cliotime::kVersion));
  app.require_subcommand(1);

  Options o;
  auto* fit = app.add_subcommand("fit", "Threshold, alignment, full-data fit and out-of-sample validation");
  add_common(*fit, o);
  add_validation(*fit, o);
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap ensemble, characteristic timescales and empirical durations");
  add_common(*boot, o);
  add_bootstrap(*boot, o);
  auto* cont = app.add_subcommand("continuity", "Fits restricted to cultural or institutional continuity segments");
  add_common(*cont, o);
  add_modes(*cont, o);
  auto* report = app.add_subcommand("report", "Run every stage and write the full report");
  add_common(*report, o);
  add_validation(*report, o);
  add_bootstrap(*report, o);
  add_modes(*report, o);

  auto* check = app.add_subcommand("check", "Compare new series against the fit of a reference dataset");
  add_common(*check, o);
  std::string series_path;
  check->add_option("--series", series_path, "CSV with the series to compare")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic logistic dataset");
  cliotime::SyntheticSpec spec;
  std::string synth_out;
  std::uint64_t synth_seed = 1;
  synth->add_option("-o,--out", synth_out, "Output CSV file")->required();
  synth->add_option("--seed", synth_seed, "Noise seed")->envname("CLIOTIME_SEED")->capture_default_str();
  synth->add_option("--regions", spec.n_regions, "Number of regions")->capture_default_str();
  synth->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  synth->add_option("--a", spec.params.a, "Logistic amplitude")->capture_default_str();
  synth->add_option("--b", spec.params.b, "Lower plateau")->capture_default_str();
  synth->add_option("--c", spec.params.c, "Growth rate per year")->capture_default_str();
  synth->add_option("--d", spec.params.d, "Midpoint RelTime")->capture_default_str();
  synth->add_option("--before", spec.centuries_before, "Centuries before the origin (cycled per region)");
  synth->add_option("--after", spec.centuries_after, "Centuries after the origin (cycled per region)");
  synth->add_option("--cultural-halfwidth", spec.cultural_halfwidth, "Cultural continuity half-width in centuries");
  synth->add_option("--institutional-halfwidth", spec.institutional_halfwidth,
                    "Institutional continuity half-width in centuries");
  synth->add_option("--prefix", spec.name_prefix, "Region name prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      cliotime::write_text_file(synth_out, cliotime::serialize_dataset(cliotime::generate_synthetic(spec, synth_seed)));
      return 0;
    }
    if (check->parsed()) {
      auto config = to_config(o, {false, false, false, false});
      const auto bundle = cliotime::analyze(cliotime::read_file(config.input_path), config);
      const auto divergence = cliotime::benchmark_check(bundle, std::filesystem::path(series_path));
      const auto j = cliotime::divergence_json(divergence);
      cliotime::ensure_directory(config.output_dir);
      cliotime::write_text_file(config.output_dir / "check.json", j.dump(2) + "\n");
      if (!o.quiet) {
        for (const auto& r : divergence.regions) {
          if (r.anchorable) {
            std::cout << r.nga << ": anchor " << *r.anchor_year << ", " << r.exceeding << "/" << r.residuals.size()
                      << " points beyond 2*RMSE (" << r.fraction_exceeding << ")\n";
          } else {
            std::cout << r.nga << ": not anchorable (never exceeds SPC1_0 = " << divergence.threshold << ")\n";
          }
        }
      }
      return 0;
    }
    cliotime::Stages stages;
    if (fit->parsed()) stages = {true, false, false, true};
    if (boot->parsed()) stages = {false, true, false, true};
    if (cont->parsed()) stages = {false, false, true, true};
    const auto bundle = cliotime::run_pipeline(to_config(o, stages));
    if (!o.quiet) summarize(bundle);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error [" << cliotime::to_string(e.code()) << "]: " << e.what() << "\n";
    return e.category() == cliotime::ErrorCategory::Data ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

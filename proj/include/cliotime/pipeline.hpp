#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cliotime/align.hpp"
#include "cliotime/dataset.hpp"
#include "cliotime/density.hpp"
#include "cliotime/error.hpp"
#include "cliotime/inference.hpp"
#include "cliotime/logistic.hpp"

namespace cliotime {

inline constexpr std::string_view kVersion = "0.1.0";

struct Stages {
  bool validation = true;
  bool bootstrap = true;
  bool continuity = true;
  bool plots = true;
};

struct PipelineConfig {
  std::filesystem::path input_path;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  std::size_t n_bootstrap = 1000;
  std::size_t n_validation = 100;
  std::vector<int> k_sigma_list{1, 3};
  Bandwidth bandwidth;
  std::vector<ContinuityMode> continuity_modes{ContinuityMode::Cultural, ContinuityMode::Institutional};
  std::optional<ScaleRange> scale_range;  // replaces the global raw extrema
  std::size_t grid_size = 1024;
  LogisticParams initial_guess{1.0, 0.0, 0.002, 0.0};
  FitConfig fit;
  unsigned threads = 1;
  Stages stages;
};

inline void validate(const PipelineConfig& config) {
  if (config.n_bootstrap < 1 || config.n_validation < 1) {
    throw Error(ErrorCode::Parameter, "bootstrap and validation counts must be at least 1");
  }
  if (config.bandwidth.value && !(*config.bandwidth.value > 0.0)) {
    throw Error(ErrorCode::Parameter, "explicit bandwidth must be positive");
  }
  if (config.stages.bootstrap && config.k_sigma_list.empty()) {
    throw Error(ErrorCode::Parameter, "at least one k_sigma value is required");
  }
  for (int k : config.k_sigma_list) {
    if (k != 1 && k != 3) throw Error(ErrorCode::Parameter, "k_sigma must be 1 or 3");
  }
  if (config.grid_size < 3) throw Error(ErrorCode::Parameter, "grid size must be at least 3");
}

/// 64-bit FNV-1a, used as the provenance checksum.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

struct Provenance {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string input_checksum;
  std::size_t input_bytes = 0;
};

struct TimescaleResult {
  PlateauThresholds thresholds;
  TimescaleEstimate estimate;
};

struct ReportBundle {
  PipelineConfig config;
  Provenance provenance;
  Dataset dataset;  // scaled
  DensityEstimate density;
  BimodalThreshold threshold;
  AlignedDataset aligned;
  std::vector<DataPoint> pooled;
  FitResult full_fit;
  std::optional<ValidationReport> validation;
  std::optional<BootstrapEnsemble> ensemble;
  std::vector<TimescaleResult> timescales;  // ascending k_sigma
  std::optional<PlateauThresholds> empirical_thresholds;
  std::optional<EmpiricalDurations> empirical;
  std::vector<ContinuityComparison> continuity;
  std::vector<std::string> warnings;

  const TimescaleResult* timescale_for(double k) const noexcept {
    for (const auto& t : timescales) {
      if (t.thresholds.k_sigma == k) return &t;
    }
    return nullptr;
  }

  const ContinuityComparison* continuity_for(ContinuityMode mode) const noexcept {
    for (const auto& c : continuity) {
      if (c.segments.mode == mode) return &c;
    }
    return nullptr;
  }
};

/// Canonical text of every setting that affects the numbers in a report. The
/// input and output locations are excluded so that copies of a file produce
/// identical reports.
inline std::string canonical_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "seed=" << c.seed << ";bootstrap=" << c.n_bootstrap << ";validation=" << c.n_validation << ";k=";
  for (int k : c.k_sigma_list) out << k << ',';
  out << ";bandwidth=" << (c.bandwidth.value ? csv::format_double(*c.bandwidth.value) : "auto") << ";modes=";
  for (auto m : c.continuity_modes) out << to_string(m) << ',';
  out << ";scale=";
  if (c.scale_range) out << csv::format_double(c.scale_range->min) << ',' << csv::format_double(c.scale_range->max);
  out << ";grid=" << c.grid_size << ";init=" << csv::format_double(c.initial_guess.a) << ','
      << csv::format_double(c.initial_guess.b) << ',' << csv::format_double(c.initial_guess.c) << ','
      << csv::format_double(c.initial_guess.d) << ";max_iter=" << c.fit.max_iter
      << ";tol=" << csv::format_double(c.fit.tol) << ";gtol=" << csv::format_double(c.fit.gradient_tol)
      << ";stages=" << c.stages.validation << c.stages.bootstrap << c.stages.continuity;
  return out.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open input file '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Scale, threshold, align and fit: the part every subcommand needs.
inline ReportBundle analyze_core(std::string_view input_text, const PipelineConfig& config) {
  validate(config);
  ReportBundle bundle;
  bundle.config = config;
  bundle.provenance.seed = config.seed;
  bundle.provenance.config_hash = "fnv1a64:" + hex64(fnv1a64(canonical_config(config)));
  bundle.provenance.input_checksum = "fnv1a64:" + hex64(fnv1a64(input_text));
  bundle.provenance.input_bytes = input_text.size();

  bundle.dataset = minmax_scale(parse_dataset(input_text), config.scale_range);
  const auto values = pooled_scaled_values(bundle.dataset);
  KdeOptions kde;
  kde.grid_size = config.grid_size;
  kde.threads = config.threads;
  bundle.density = gaussian_kde(values, config.bandwidth, kde);
  bundle.threshold = find_bimodal_threshold(bundle.density);

  bundle.aligned = shift_to_reltime(bundle.dataset, bundle.threshold.spc1_0);
  if (bundle.aligned.tie_count > 0) {
    bundle.warnings.push_back(std::to_string(bundle.aligned.tie_count) +
                              " observation(s) equal the threshold exactly and did not anchor");
  }
  bundle.pooled = pooled_points(bundle.aligned);
  bundle.full_fit = fit_logistic(bundle.pooled, config.initial_guess, config.fit);
  if (!bundle.full_fit.converged) {
    bundle.warnings.push_back("full-data fit stopped before the gradient tolerance was met");
  }
  return bundle;
}

/// Every analysis stage enabled in config.stages, in pipeline order.
inline ReportBundle analyze(std::string_view input_text, const PipelineConfig& config) {
  ReportBundle bundle = analyze_core(input_text, config);
  const InferenceOptions options{config.fit, config.threads};

  if (config.stages.validation) {
    bundle.validation = out_of_sample_validation(bundle.aligned, bundle.full_fit, config.n_validation,
                                                 config.seed, options);
    if (bundle.validation->failed > 0) {
      bundle.warnings.push_back(std::to_string(bundle.validation->failed) + " validation repeat(s) failed");
    }
  }

  if (config.stages.bootstrap) {
    bundle.ensemble = bootstrap_fits(bundle.aligned, bundle.full_fit, config.n_bootstrap, config.seed, options);
    std::vector<int> ks = config.k_sigma_list;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    for (int k : ks) {
      const auto th = plateau_thresholds(*bundle.ensemble, k);
      bundle.timescales.push_back({th, characteristic_timescale(*bundle.ensemble, th)});
    }
    // First-passage durations use the conservative 3-sigma thresholds when
    // they were computed.
    const auto* chosen = bundle.timescale_for(3.0);
    if (chosen == nullptr) chosen = &bundle.timescales.front();
    bundle.empirical_thresholds = chosen->thresholds;
    bundle.empirical = empirical_durations(bundle.aligned, chosen->thresholds.th1, chosen->thresholds.th2);
  }

  if (config.stages.continuity) {
    for (auto mode : config.continuity_modes) {
      auto comparison = continuity_comparison(bundle.aligned, bundle.full_fit, mode, config.fit);
      for (const auto& [nga, reason] : comparison.segments.excluded) {
        bundle.warnings.push_back(std::string(to_string(mode)) + " fit excludes " + nga + ": " + reason);
      }
      bundle.continuity.push_back(std::move(comparison));
    }
  }
  return bundle;
}

}  // namespace cliotime

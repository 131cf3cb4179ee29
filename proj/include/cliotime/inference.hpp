#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cliotime/align.hpp"
#include "cliotime/error.hpp"
#include "cliotime/logistic.hpp"
#include "cliotime/parallel.hpp"
#include "cliotime/random.hpp"

namespace cliotime {

struct Moments {
  double mean = 0.0;
  double sd = 0.0;  // population convention (divide by N)
};

inline Moments population_moments(std::span<const double> xs) {
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  return xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
}

struct InferenceOptions {
  FitConfig fit;
  unsigned threads = 1;
};

struct ValidationReport {
  std::vector<double> rho2_values;  // successful repeats in repeat order
  double mean_rho2 = 0.0;
  double stddev_rho2 = 0.0;  // sample standard deviation (n - 1)
  double stderr_rho2 = 0.0;  // stddev / sqrt(n)
  std::size_t n_repeats = 0;
  std::size_t failed = 0;
  std::uint64_t seed = 0;
};

/// Summary statistics of a list of rho^2 values.
inline void summarize_rho2(ValidationReport& report) {
  const auto& v = report.rho2_values;
  const double n = static_cast<double>(v.size());
  report.mean_rho2 = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - report.mean_rho2) * (x - report.mean_rho2);
  report.stddev_rho2 = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  report.stderr_rho2 = report.stddev_rho2 / std::sqrt(n);
}

/// Repeated random halving of the pooled points: fit on one half starting from
/// the full-data parameters, score rho^2 on the other half. Repeats whose fit
/// is singular or whose test half has no variance count as failed.
inline ValidationReport out_of_sample_validation(const AlignedDataset& aligned, const FitResult& full_fit,
                                                 std::size_t n_repeats, std::uint64_t seed,
                                                 const InferenceOptions& options = {}) {
  const auto pooled = pooled_points(aligned);
  if (pooled.size() < 10) {
    throw Error(ErrorCode::InsufficientData, "out-of-sample validation needs at least 10 pooled points");
  }
  if (n_repeats == 0) throw Error(ErrorCode::Parameter, "validation repeat count must be positive");

  std::vector<std::optional<double>> outcome(n_repeats);
  parallel_for(n_repeats, options.threads, [&](std::size_t rep) {
    Substream rng(seed, StreamTag::Validation, rep);
    std::vector<DataPoint> shuffled = pooled;
    rng.shuffle(std::span<DataPoint>(shuffled));
    const std::size_t half = shuffled.size() / 2;
    const std::span<const DataPoint> train(shuffled.data(), half);
    const std::span<const DataPoint> test(shuffled.data() + half, shuffled.size() - half);
    try {
      const auto fit = fit_logistic(train, full_fit.params, options.fit);
      std::vector<double> predicted;
      std::vector<double> actual;
      for (const auto& pt : test) {
        predicted.push_back(logistic_eval(fit.params, pt.t));
        actual.push_back(pt.y);
      }
      outcome[rep] = coefficient_of_prediction(predicted, actual);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Singularity && e.code() != ErrorCode::UndefinedMetric) throw;
    }
  });

  ValidationReport report;
  report.n_repeats = n_repeats;
  report.seed = seed;
  for (const auto& o : outcome) {
    if (o) {
      report.rho2_values.push_back(*o);
    } else {
      ++report.failed;
    }
  }
  if (report.rho2_values.empty()) throw Error(ErrorCode::Estimate, "every validation repeat failed");
  summarize_rho2(report);
  return report;
}

struct BootstrapEnsemble {
  std::size_t n_iter = 0;
  std::vector<LogisticParams> param_sets;  // accepted fits, iteration order
  std::size_t failed_fits = 0;             // singular or non-converged
  std::size_t non_converged = 0;           // part of failed_fits
  std::uint64_t seed = 0;
};

/// Region-level bootstrap: every iteration draws as many region names as there
/// are retained regions, with replacement, pools the drawn regions' points
/// (duplicates included) and refits from the full-data parameters.
inline BootstrapEnsemble bootstrap_fits(const AlignedDataset& aligned, const FitResult& full_fit,
                                        std::size_t n_iter, std::uint64_t seed,
                                        const InferenceOptions& options = {}) {
  if (aligned.regions.empty()) throw Error(ErrorCode::InsufficientData, "bootstrap needs retained regions");
  if (n_iter == 0) throw Error(ErrorCode::Parameter, "bootstrap iteration count must be positive");

  std::vector<std::vector<DataPoint>> per_region;
  per_region.reserve(aligned.regions.size());
  for (const auto& r : aligned.regions) per_region.push_back(region_points(r));

  enum class Outcome { Accepted, Singular, NotConverged };
  std::vector<Outcome> status(n_iter, Outcome::Singular);
  std::vector<LogisticParams> params(n_iter);
  parallel_for(n_iter, options.threads, [&](std::size_t it) {
    Substream rng(seed, StreamTag::Bootstrap, it);
    std::vector<DataPoint> sample;
    for (std::size_t k = 0; k < per_region.size(); ++k) {
      const auto& drawn = per_region[rng.below(per_region.size())];
      sample.insert(sample.end(), drawn.begin(), drawn.end());
    }
    try {
      const auto fit = fit_logistic(sample, full_fit.params, options.fit);
      params[it] = fit.params;
      status[it] = fit.converged && fit.params.c > 0.0 ? Outcome::Accepted : Outcome::NotConverged;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Singularity && e.code() != ErrorCode::InsufficientData) throw;
    }
  });

  BootstrapEnsemble ensemble;
  ensemble.n_iter = n_iter;
  ensemble.seed = seed;
  for (std::size_t it = 0; it < n_iter; ++it) {
    if (status[it] == Outcome::Accepted) {
      ensemble.param_sets.push_back(params[it]);
    } else {
      ++ensemble.failed_fits;
      if (status[it] == Outcome::NotConverged) ++ensemble.non_converged;
    }
  }
  if (ensemble.param_sets.empty()) throw Error(ErrorCode::Ensemble, "every bootstrap fit failed");
  return ensemble;
}

struct PlateauThresholds {
  double th1 = 0.0;
  double th2 = 1.0;
  double k_sigma = 3.0;
  Moments lower;  // of b
  Moments upper;  // of a + b
};

/// th1 = mean(b) + k sd(b), th2 = mean(a + b) - k sd(a + b).
inline PlateauThresholds plateau_thresholds(const BootstrapEnsemble& ensemble, double k_sigma) {
  if (ensemble.param_sets.empty()) throw Error(ErrorCode::Ensemble, "ensemble is empty");
  if (!(k_sigma > 0.0)) throw Error(ErrorCode::Parameter, "k_sigma must be positive");
  std::vector<double> lower;
  std::vector<double> upper;
  for (const auto& p : ensemble.param_sets) {
    lower.push_back(p.lower_plateau());
    upper.push_back(p.upper_plateau());
  }
  PlateauThresholds out;
  out.k_sigma = k_sigma;
  out.lower = population_moments(lower);
  out.upper = population_moments(upper);
  out.th1 = out.lower.mean + k_sigma * out.lower.sd;
  out.th2 = out.upper.mean - k_sigma * out.upper.sd;
  if (!(out.th1 < out.th2)) {
    throw Error(ErrorCode::InvertedThresholds, "plateau thresholds are inverted (th1 = " +
                                                   std::to_string(out.th1) + ", th2 = " +
                                                   std::to_string(out.th2) + ")");
  }
  return out;
}

struct TimescaleEstimate {
  double th1 = 0.0;
  double th2 = 0.0;
  double k_sigma = 0.0;
  double t1_mean = 0.0;
  double t2_mean = 0.0;
  double duration_mean = 0.0;
  std::size_t n_crossing_curves = 0;
  std::size_t n_excluded_curves = 0;
  std::vector<double> per_curve_t1;
  std::vector<double> per_curve_t2;
  std::vector<double> per_curve_durations;
};

/// Mean RelTime gap between each ensemble curve's crossings of th1 and th2.
/// Curves whose open asymptote interval does not contain both thresholds are
/// left out and counted.
inline TimescaleEstimate characteristic_timescale(const BootstrapEnsemble& ensemble, double th1, double th2,
                                                  double k_sigma = 0.0) {
  if (!(th1 < th2)) throw Error(ErrorCode::InvertedThresholds, "th1 must be below th2");
  TimescaleEstimate est;
  est.th1 = th1;
  est.th2 = th2;
  est.k_sigma = k_sigma;
  for (const auto& p : ensemble.param_sets) {
    const double lo = std::min(p.b, p.a + p.b);
    const double hi = std::max(p.b, p.a + p.b);
    if (!(p.c != 0.0 && lo < th1 && th2 < hi)) {
      ++est.n_excluded_curves;
      continue;
    }
    const double t1 = logistic_inverse(p, th1);
    const double t2 = logistic_inverse(p, th2);
    est.per_curve_t1.push_back(t1);
    est.per_curve_t2.push_back(t2);
    est.per_curve_durations.push_back(t2 - t1);
  }
  est.n_crossing_curves = est.per_curve_durations.size();
  if (est.n_crossing_curves == 0) {
    throw Error(ErrorCode::Estimate, "no ensemble curve crosses both plateau thresholds");
  }
  const double n = static_cast<double>(est.n_crossing_curves);
  est.t1_mean = std::accumulate(est.per_curve_t1.begin(), est.per_curve_t1.end(), 0.0) / n;
  est.t2_mean = std::accumulate(est.per_curve_t2.begin(), est.per_curve_t2.end(), 0.0) / n;
  est.duration_mean =
      std::accumulate(est.per_curve_durations.begin(), est.per_curve_durations.end(), 0.0) / n;
  return est;
}

inline TimescaleEstimate characteristic_timescale(const BootstrapEnsemble& ensemble,
                                                  const PlateauThresholds& thresholds) {
  return characteristic_timescale(ensemble, thresholds.th1, thresholds.th2, thresholds.k_sigma);
}

struct RegionDuration {
  std::string nga;
  int tau1 = 0;  // RelTime of the first value above th1
  int tau2 = 0;  // RelTime of the first value above th2
  int duration = 0;
};

struct EmpiricalDurations {
  std::vector<RegionDuration> per_nga;  // ascending by NGA
  std::vector<std::string> excluded;    // never above th2
  double mean_duration = 0.0;
  double median_duration = 0.0;
};

/// Per-region first-passage times of the observed series over th1 and th2.
inline EmpiricalDurations empirical_durations(const AlignedDataset& aligned, double th1, double th2) {
  if (aligned.regions.empty()) throw Error(ErrorCode::InsufficientData, "no retained regions");
  if (!(th1 < th2)) throw Error(ErrorCode::InvertedThresholds, "th1 must be below th2");
  EmpiricalDurations out;
  std::vector<double> durations;
  for (const auto& region : aligned.regions) {
    std::optional<int> tau1;
    std::optional<int> tau2;
    for (std::size_t i = 0; i < region.size() && !tau2; ++i) {
      if (!tau1 && region.value(i) > th1) tau1 = region.rel_time[i];
      if (region.value(i) > th2) tau2 = region.rel_time[i];
    }
    if (!tau2) {
      out.excluded.push_back(region.nga());
      continue;
    }
    out.per_nga.push_back({region.nga(), *tau1, *tau2, *tau2 - *tau1});
    durations.push_back(static_cast<double>(*tau2 - *tau1));
  }
  out.mean_duration = population_moments(durations).mean;
  out.median_duration = median(durations);
  return out;
}

struct ContinuityComparison {
  SegmentSet segments;
  FitResult fit;
};

/// Logistic fit restricted to each region's central continuous segment,
/// started from the full-data parameters.
inline ContinuityComparison continuity_comparison(const AlignedDataset& aligned, const FitResult& full_fit,
                                                  ContinuityMode mode, const FitConfig& config = {}) {
  ContinuityComparison out;
  out.segments = central_segments(aligned, mode);
  if (out.segments.segments.size() < 2) {
    throw Error(ErrorCode::FitInfeasible, std::string(to_string(mode)) + " central segments exist for " +
                                              std::to_string(out.segments.segments.size()) +
                                              " region(s); at least 2 are needed");
  }
  std::vector<DataPoint> pooled;
  for (const auto& s : out.segments.segments) pooled.insert(pooled.end(), s.points.begin(), s.points.end());
  if (pooled.size() < 5) {
    throw Error(ErrorCode::FitInfeasible, "only " + std::to_string(pooled.size()) + " pooled " +
                                              std::string(to_string(mode)) + " points");
  }
  out.fit = fit_logistic(pooled, full_fit.params, config);
  return out;
}

}  // namespace cliotime

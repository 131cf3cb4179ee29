#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "cliotime/error.hpp"
#include "cliotime/parallel.hpp"

namespace cliotime {

/// Kernel width: Scott's rule when unset, otherwise the explicit value.
struct Bandwidth {
  std::optional<double> value;

  static Bandwidth scott() { return {}; }
  static Bandwidth fixed(double h) { return {h}; }
  bool is_auto() const noexcept { return !value.has_value(); }
};

struct KdeOptions {
  std::size_t grid_size = 1024;
  // The evaluation grid spans [min - 4h, max + 4h] intersected with this range.
  double range_min = 0.0;
  double range_max = 1.0;
  unsigned threads = 1;
};

struct DensityEstimate {
  std::vector<double> grid;  // uniform, ascending
  std::vector<double> density;
  double bandwidth = 0.0;
  std::size_t n_samples = 0;

  double step() const noexcept { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }

  /// Trapezoidal integral over the grid.
  double integral() const noexcept {
    double total = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      total += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    }
    return total;
  }
};

/// h = s * n^(-1/5) with s the sample standard deviation (n - 1 divisor).
inline double scott_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "bandwidth selection needs at least 2 samples");
  }
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi || !(sd > 0.0)) {
    throw Error(ErrorCode::DegenerateBandwidth, "samples have zero variance; Scott's rule is undefined");
  }
  return sd * std::pow(n, -0.2);
}

/// (1 / (n h)) sum_i phi((x - x_i) / h).
inline double kde_at(std::span<const double> samples, double h, double x) noexcept {
  constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  double sum = 0.0;
  for (double xi : samples) {
    const double u = (x - xi) / h;
    sum += std::exp(-0.5 * u * u);
  }
  return sum * inv_sqrt_2pi / (static_cast<double>(samples.size()) * h);
}

inline DensityEstimate gaussian_kde(std::span<const double> samples, Bandwidth bandwidth = Bandwidth::scott(),
                                    const KdeOptions& options = {}) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "density estimation needs at least 2 samples, got " +
                                                 std::to_string(samples.size()));
  }
  if (!std::all_of(samples.begin(), samples.end(), [](double x) { return std::isfinite(x); })) {
    throw Error(ErrorCode::InsufficientData, "samples must be finite");
  }
  if (options.grid_size < 3) throw Error(ErrorCode::Parameter, "density grid needs at least 3 points");
  const double h = bandwidth.is_auto() ? scott_bandwidth(samples) : *bandwidth.value;
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::Parameter, "bandwidth must be positive");

  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = std::max(*lo_it - 4.0 * h, options.range_min);
  const double hi = std::min(*hi_it + 4.0 * h, options.range_max);
  if (!(lo < hi)) throw Error(ErrorCode::Parameter, "density grid range is empty after clipping");

  DensityEstimate est;
  est.bandwidth = h;
  est.n_samples = samples.size();
  est.grid.resize(options.grid_size);
  est.density.resize(options.grid_size);
  const double last = static_cast<double>(options.grid_size - 1);
  for (std::size_t i = 0; i < options.grid_size; ++i) {
    est.grid[i] = lo + (hi - lo) * (static_cast<double>(i) / last);
  }
  parallel_for(options.grid_size, options.threads,
               [&](std::size_t i) { est.density[i] = kde_at(samples, h, est.grid[i]); });
  return est;
}

/// Grid indices of local maxima. A run of equal values counts as one maximum,
/// located at the run's midpoint, when it is strictly above each neighbour it
/// has; a grid endpoint therefore needs only its single neighbour below it.
inline std::vector<std::size_t> local_maxima(std::span<const double> density) {
  std::vector<std::size_t> maxima;
  std::size_t i = 0;
  while (i < density.size()) {
    std::size_t end = i;
    while (end + 1 < density.size() && density[end + 1] == density[i]) ++end;
    const bool above_left = i == 0 || density[i - 1] < density[i];
    const bool above_right = end + 1 == density.size() || density[end + 1] < density[i];
    if (above_left && above_right && !(i == 0 && end + 1 == density.size())) {
      maxima.push_back((i + end) / 2);
    }
    i = end + 1;
  }
  return maxima;
}

struct BimodalThreshold {
  double spc1_0 = 0.0;
  std::size_t index = 0;  // grid index of spc1_0
  double left_peak = 0.0;
  double right_peak = 0.0;
  double left_peak_density = 0.0;
  double right_peak_density = 0.0;
  double threshold_density = 0.0;
};

/// Minimum of the density strictly between its two highest local maxima.
/// Ties prefer the smaller grid location.
inline BimodalThreshold find_bimodal_threshold(const DensityEstimate& estimate) {
  const auto& f = estimate.density;
  if (f.size() < 3 || estimate.grid.size() != f.size()) {
    throw Error(ErrorCode::InsufficientData, "density estimate needs at least 3 grid points");
  }
  auto maxima = local_maxima(f);
  if (maxima.size() < 2) {
    throw Error(ErrorCode::UnimodalDensity,
                "density has " + std::to_string(maxima.size()) +
                    " local maximum; the low/high threshold between two modes is undefined");
  }
  std::stable_sort(maxima.begin(), maxima.end(),
                   [&](std::size_t l, std::size_t r) { return f[l] > f[r]; });
  const std::size_t left = std::min(maxima[0], maxima[1]);
  const std::size_t right = std::max(maxima[0], maxima[1]);

  std::size_t best = left + 1;
  for (std::size_t i = left + 1; i < right; ++i) {
    if (f[i] < f[best]) best = i;
  }
  return {estimate.grid[best], best, estimate.grid[left], estimate.grid[right], f[left], f[right], f[best]};
}

}  // namespace cliotime

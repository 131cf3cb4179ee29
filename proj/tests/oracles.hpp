// Independent reference computations for the test suites. Nothing here calls
// into the optimizer, density grid or threshold search under test.
#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace oracle {

// Logistic curve written out directly rather than through the library.
inline double logistic(double a, double b, double c, double d, double t) {
  return a / (1.0 + std::exp(-c * (t - d))) + b;
}

// Root of f on [lo, hi] for monotone f with a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  double flo = f(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double normal_pdf(double x, double mu, double sigma) {
  const double u = (x - mu) / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

struct Component {
  double weight;
  double mu;
  double sigma;
};

inline double mixture_pdf(const std::vector<Component>& mix, double x) {
  double total = 0.0;
  for (const auto& c : mix) total += c.weight * normal_pdf(x, c.mu, c.sigma);
  return total;
}

// Mixture with every component widened by a Gaussian kernel of width h: the
// expected value of a Gaussian KDE built from the mixture.
inline std::vector<Component> convolve(std::vector<Component> mix, double h) {
  for (auto& c : mix) c.sigma = std::sqrt(c.sigma * c.sigma + h * h);
  return mix;
}

// Exhaustive minimiser of f over `points` uniformly spaced locations in [lo, hi].
inline double brute_force_argmin(const std::function<double(double)>& f, double lo, double hi,
                                 int points = 10000) {
  double best_x = lo;
  double best = f(lo);
  for (int i = 1; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

// Deterministic "sample" of n points at the mixture's component quantiles
// (i + 1/2) / n_k, so sampling noise does not enter the fixture.
inline std::vector<double> quantile_sample(const std::vector<Component>& mix, int n) {
  std::vector<double> xs;
  for (const auto& c : mix) {
    const int nk = static_cast<int>(std::lround(c.weight * n));
    const boost::math::normal_distribution<double> dist(c.mu, c.sigma);
    for (int i = 0; i < nk; ++i) xs.push_back(boost::math::quantile(dist, (i + 0.5) / nk));
  }
  return xs;
}

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace oracle

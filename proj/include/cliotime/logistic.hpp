#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cliotime/error.hpp"

namespace cliotime {

/// f(t) = a / (1 + exp(-c (t - d))) + b.
/// Lower asymptote b, upper asymptote a + b, rate c in 1/years and midpoint d
/// in RelTime years.
struct LogisticParams {
  double a = 1.0;
  double b = 0.0;
  double c = 0.002;
  double d = 0.0;

  double lower_plateau() const noexcept { return b; }
  double upper_plateau() const noexcept { return a + b; }

  friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

struct DataPoint {
  double t = 0.0;
  double y = 0.0;
};

namespace detail {

inline constexpr double kMaxExponent = 700.0;

// 1 / (1 + exp(-c (t - d))) with the exponent clamped.
inline double logistic_unit(const LogisticParams& p, double t) noexcept {
  const double z = std::clamp(-p.c * (t - p.d), -kMaxExponent, kMaxExponent);
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace detail

inline double logistic_eval(const LogisticParams& p, double t) noexcept {
  return p.a * detail::logistic_unit(p, t) + p.b;
}

/// Partial derivatives of f with respect to (a, b, c, d).
inline std::array<double, 4> logistic_gradient(const LogisticParams& p, double t) noexcept {
  const double s = detail::logistic_unit(p, t);
  const double slope = p.a * s * (1.0 - s);
  return {s, 1.0, slope * (t - p.d), -slope * p.c};
}

/// The reparametrisation (a, b, c, d) -> (-a, a + b, -c, d) describes the same
/// curve with the opposite sign of c.
inline LogisticParams mirror(const LogisticParams& p) noexcept {
  return {-p.a, p.a + p.b, -p.c, p.d};
}

/// Representative with c >= 0.
inline LogisticParams canonicalize(const LogisticParams& p) noexcept {
  return p.c < 0.0 ? mirror(p) : p;
}

/// RelTime at which the curve takes the value y.
inline double logistic_inverse(const LogisticParams& p, double y) {
  const double lo = std::min(p.b, p.a + p.b);
  const double hi = std::max(p.b, p.a + p.b);
  if (p.c == 0.0 || !(y > lo && y < hi)) {
    throw Error(ErrorCode::NoCrossing, "value " + std::to_string(y) +
                                           " lies outside the open asymptote interval (" +
                                           std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }
  return p.d - std::log(p.a / (y - p.b) - 1.0) / p.c;
}

inline double root_mean_square(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double ss = std::inner_product(values.begin(), values.end(), values.begin(), 0.0);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

/// rho^2 = 1 - sum (yhat - y)^2 / sum (ybar - y)^2.
inline double coefficient_of_prediction(std::span<const double> predicted,
                                        std::span<const double> actual) {
  if (predicted.size() != actual.size() || actual.empty()) {
    throw Error(ErrorCode::UndefinedMetric, "predicted and actual must have equal nonzero length");
  }
  const double mean =
      std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
    ss_tot += (mean - actual[i]) * (mean - actual[i]);
  }
  if (ss_tot == 0.0) {
    throw Error(ErrorCode::UndefinedMetric, "actual values have zero variance");
  }
  return 1.0 - ss_res / ss_tot;
}

struct FitConfig {
  int max_iter = 500;
  // Stop once an accepted step lowers the objective by less than this fraction.
  double tol = 1e-10;
  // Convergence requires the largest cosine between the residual vector and a
  // Jacobian column to fall below this.
  double gradient_tol = 1e-4;
  // Reject initial guesses with c <= 0 and return canonical parameters.
  bool direction_lock = true;
};

struct FitResult {
  LogisticParams params;
  std::vector<double> residuals;  // predicted - observed
  double rmse = 0.0;
  std::size_t n_points = 0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  // Sum of squared residuals after each accepted step, starting at the initial guess.
  std::vector<double> cost_history;
};

namespace detail {

struct Linearization {
  Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
  Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
  double cost = 0.0;
};

inline Eigen::Vector4d to_vector(const LogisticParams& p) { return {p.a, p.b, p.c, p.d}; }
inline LogisticParams to_params(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

inline double sum_of_squares(std::span<const DataPoint> points, const LogisticParams& p) {
  double cost = 0.0;
  for (const auto& pt : points) {
    const double r = logistic_eval(p, pt.t) - pt.y;
    cost += r * r;
  }
  return cost;
}

inline Linearization linearize(std::span<const DataPoint> points, const LogisticParams& p) {
  Linearization lin;
  for (const auto& pt : points) {
    const auto g = logistic_gradient(p, pt.t);
    const Eigen::Vector4d row(g[0], g[1], g[2], g[3]);
    const double r = logistic_eval(p, pt.t) - pt.y;
    lin.jtj.noalias() += row * row.transpose();
    lin.jtr += r * row;
    lin.cost += r * r;
  }
  return lin;
}

// max_j |J_j . r| / (|J_j| |r|): zero at a stationary point, scale free.
inline double gradient_cosine(const Linearization& lin, std::size_t n) {
  const double rnorm = std::max(std::sqrt(lin.cost), 1e-10 * std::sqrt(static_cast<double>(n)));
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double cnorm = std::sqrt(lin.jtj(j, j));
    if (cnorm > 0.0) worst = std::max(worst, std::abs(lin.jtr[j]) / (cnorm * rnorm));
  }
  return worst;
}

// A Jacobian column that has collapsed relative to its largest observed norm,
// or two columns that are numerically collinear, leave the fit unidentified.
inline bool is_degenerate(const Linearization& lin, const Eigen::Vector4d& peak_diag) {
  for (int j = 0; j < 4; ++j) {
    if (!(lin.jtj(j, j) > 1e-20 * peak_diag[j])) return true;
  }
  const Eigen::Vector4d inv = lin.jtj.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::Matrix4d corr = inv.asDiagonal() * lin.jtj * inv.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(corr, Eigen::EigenvaluesOnly);
  return !(eig.eigenvalues().minCoeff() > 1e-14);
}

}  // namespace detail

/// Levenberg-Marquardt least squares for the four-parameter logistic with an
/// analytic Jacobian and Marquardt diagonal scaling.
///
/// Returns the best iterate; `converged` is false when the iteration budget
/// runs out or the step search stalls away from a stationary point. A
/// rank-deficient Jacobian at the start or the end raises a singularity error.
inline FitResult fit_logistic(std::span<const DataPoint> points, const LogisticParams& init,
                              const FitConfig& config = {}) {
  if (points.size() < 5) {
    throw Error(ErrorCode::InsufficientData,
                "logistic fit needs at least 5 points, got " + std::to_string(points.size()));
  }
  if (config.direction_lock && !(init.c > 0.0)) {
    throw Error(ErrorCode::Parameter, "initial rate c must be positive to lock the curve direction");
  }

  const std::size_t n = points.size();
  LogisticParams current = init;
  detail::Linearization lin = detail::linearize(points, current);
  if (!std::isfinite(lin.cost)) {
    throw Error(ErrorCode::Singularity, "objective is not finite at the initial guess");
  }
  Eigen::Vector4d peak_diag = lin.jtj.diagonal();
  if (detail::is_degenerate(lin, peak_diag)) {
    throw Error(ErrorCode::Singularity, "Jacobian is rank deficient at the initial guess");
  }

  FitResult result;
  result.cost_history.push_back(lin.cost);
  Eigen::Vector4d scale = lin.jtj.diagonal();
  double lambda = 1e-3;
  int iter = 0;

  while (iter < config.max_iter) {
    if (lin.cost == 0.0 || detail::gradient_cosine(lin, n) <= 1e-14) break;
    ++iter;
    scale = scale.cwiseMax(lin.jtj.diagonal());

    Eigen::Matrix4d damped = lin.jtj;
    damped.diagonal() += lambda * scale;
    const Eigen::Vector4d step = damped.ldlt().solve(-lin.jtr);
    if (!step.allFinite()) {
      lambda *= 10.0;
      if (lambda > 1e20) break;
      continue;
    }

    const Eigen::Vector4d x = detail::to_vector(current);
    const LogisticParams trial = detail::to_params(x + step);
    const double trial_cost = detail::sum_of_squares(points, trial);

    if (std::isfinite(trial_cost) && trial_cost < lin.cost) {
      const double decrease = (lin.cost - trial_cost) / lin.cost;
      current = trial;
      lin = detail::linearize(points, current);
      peak_diag = peak_diag.cwiseMax(lin.jtj.diagonal());
      result.cost_history.push_back(lin.cost);
      lambda = std::max(lambda * 0.1, 1e-12);
      if (decrease <= config.tol) break;
    } else {
      lambda *= 10.0;
      const bool tiny_step =
          (step.array().abs() <= 1e-15 * (x.array().abs() + 1e-300)).all();
      if (lambda > 1e20 || tiny_step) break;
    }
  }

  if (detail::is_degenerate(lin, peak_diag)) {
    throw Error(ErrorCode::Singularity, "Jacobian became rank deficient during the fit");
  }

  result.params = config.direction_lock ? canonicalize(current) : current;
  result.iterations = iter;
  result.n_points = n;
  result.gradient_norm = detail::gradient_cosine(lin, n);
  result.converged = result.gradient_norm <= config.gradient_tol;
  result.residuals.reserve(n);
  for (const auto& pt : points) result.residuals.push_back(logistic_eval(result.params, pt.t) - pt.y);
  result.rmse = root_mean_square(result.residuals);
  return result;
}

}  // namespace cliotime

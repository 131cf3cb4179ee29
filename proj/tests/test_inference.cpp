#include <cmath>

#include <gtest/gtest.h>

#include "cliotime/align.hpp"
#include "cliotime/dataset.hpp"
#include "cliotime/inference.hpp"

using namespace cliotime;

namespace {

AlignedDataset synthetic_aligned(double sigma, std::uint64_t seed, int regions = 23,
                                 int cultural_halfwidth = -1, int institutional_halfwidth = -1) {
  SyntheticSpec spec;
  spec.n_regions = regions;
  spec.noise_sigma = sigma;
  spec.cultural_halfwidth = cultural_halfwidth;
  spec.institutional_halfwidth = institutional_halfwidth;
  return shift_to_reltime(minmax_scale(generate_synthetic(spec, seed)), 0.5);
}

BootstrapEnsemble ensemble_of(std::vector<LogisticParams> params) {
  BootstrapEnsemble e;
  e.n_iter = params.size();
  e.param_sets = std::move(params);
  return e;
}

}  // namespace

TEST(Moments, PopulationConventionAndMedian) {
  const std::vector<double> xs{0.0, 0.02};
  const auto m = population_moments(xs);
  EXPECT_DOUBLE_EQ(m.mean, 0.01);
  EXPECT_DOUBLE_EQ(m.sd, 0.01);
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

TEST(PlateauThresholds, ZeroVarianceEnsemble) {
  const auto e = ensemble_of(std::vector<LogisticParams>(10, {1, 0, 0.002, 0}));
  const auto th = plateau_thresholds(e, 3);
  EXPECT_DOUBLE_EQ(th.th1, 0.0);
  EXPECT_DOUBLE_EQ(th.th2, 1.0);
}

TEST(PlateauThresholds, TwoPointMoments) {
  const auto e = ensemble_of({{1, 0, 0.002, 0}, {1, 0.02, 0.002, 0}});
  const auto th = plateau_thresholds(e, 1);
  EXPECT_DOUBLE_EQ(th.th1, 0.02);
}

TEST(PlateauThresholds, InvertedIsAnError) {
  const auto e = ensemble_of({{0.1, 0, 0.002, 0}, {0.1, 0.5, 0.002, 0}});
  try {
    (void)plateau_thresholds(e, 3);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::InvertedThresholds);
  }
}

TEST(CharacteristicTimescale, SymmetricThresholdsClosedForm) {
  const double c = 0.002;
  const auto e = ensemble_of({{1, 0, c, 0}});
  const double y2 = 0.9;
  const auto est = characteristic_timescale(e, 1.0 - y2, y2);
  EXPECT_NEAR(est.duration_mean, 2.0 / c * std::log(y2 / (1.0 - y2)), 1e-9);
  EXPECT_EQ(est.n_crossing_curves, 1u);
}

TEST(CharacteristicTimescale, MeanIdentityAndExclusions) {
  std::vector<LogisticParams> params;
  for (int k = 0; k < 50; ++k) {
    params.push_back({0.9 + 0.004 * k, 0.01 * (k % 5), 0.001 + 0.00005 * k, -300.0 + 17.0 * k});
  }
  params.push_back({0.3, 0.0, 0.002, 0.0});  // never reaches th2
  const auto e = ensemble_of(params);
  const auto est = characteristic_timescale(e, 0.1, 0.85);
  EXPECT_EQ(est.n_excluded_curves, 1u);
  EXPECT_EQ(est.n_crossing_curves, 50u);
  EXPECT_NEAR(est.duration_mean, est.t2_mean - est.t1_mean, 1e-9);
  for (double d : est.per_curve_durations) EXPECT_GT(d, 0.0);

  const auto none = ensemble_of({{0.3, 0.0, 0.002, 0.0}});
  try {
    (void)characteristic_timescale(none, 0.1, 0.85);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::Estimate);
  }
}

TEST(Validation, NoiselessDataPredictsAlmostPerfectly) {
  const auto aligned = synthetic_aligned(0.0, 1);
  const auto pts = pooled_points(aligned);
  const auto full = fit_logistic(pts, {});
  const auto report = out_of_sample_validation(aligned, full, 20, 42);
  EXPECT_EQ(report.failed, 0u);
  ASSERT_EQ(report.rho2_values.size(), 20u);
  for (double r : report.rho2_values) EXPECT_GT(r, 0.999);
}

TEST(Validation, DeterministicAndSummariesConsistent) {
  const auto aligned = synthetic_aligned(0.08, 3);
  const auto full = fit_logistic(pooled_points(aligned), {});
  const auto r1 = out_of_sample_validation(aligned, full, 30, 7);
  const auto r2 = out_of_sample_validation(aligned, full, 30, 7, {.fit = {}, .threads = 4});
  EXPECT_EQ(r1.rho2_values, r2.rho2_values);
  auto copy = r1;
  summarize_rho2(copy);
  EXPECT_NEAR(copy.mean_rho2, r1.mean_rho2, 1e-12);
  EXPECT_NEAR(copy.stderr_rho2, r1.stderr_rho2, 1e-12);
  const auto r3 = out_of_sample_validation(aligned, full, 30, 8);
  EXPECT_NE(r1.rho2_values, r3.rho2_values);
}

TEST(Validation, StandardErrorShrinksWithRepeats) {
  const auto aligned = synthetic_aligned(0.1, 5);
  const auto full = fit_logistic(pooled_points(aligned), {});
  const auto small = out_of_sample_validation(aligned, full, 25, 11);
  const auto large = out_of_sample_validation(aligned, full, 100, 11);
  const double ratio = small.stderr_rho2 / large.stderr_rho2;
  EXPECT_GE(ratio, 1.5);
  EXPECT_LE(ratio, 2.5);
}

TEST(Bootstrap, SingleRegionHasNoSpread) {
  const auto aligned = synthetic_aligned(0.05, 2, 1);
  ASSERT_EQ(aligned.regions.size(), 1u);
  const auto full = fit_logistic(pooled_points(aligned), {});
  const auto e = bootstrap_fits(aligned, full, 20, 9);
  ASSERT_EQ(e.param_sets.size(), 20u);
  for (const auto& p : e.param_sets) EXPECT_EQ(p, e.param_sets.front());
}

TEST(Bootstrap, DeterministicCountsAndPositiveRates) {
  const auto aligned = synthetic_aligned(0.06, 4);
  const auto full = fit_logistic(pooled_points(aligned), {});
  const auto e1 = bootstrap_fits(aligned, full, 60, 123);
  const auto e2 = bootstrap_fits(aligned, full, 60, 123, {.fit = {}, .threads = 3});
  EXPECT_EQ(e1.param_sets, e2.param_sets);
  EXPECT_EQ(e1.param_sets.size() + e1.failed_fits, e1.n_iter);
  for (const auto& p : e1.param_sets) EXPECT_GT(p.c, 0.0);
}

TEST(Bootstrap, UpperPlateauConsistentWithTruth) {
  SyntheticSpec spec;
  spec.params = {0.8, 0.1, 0.002, 0.0};
  spec.noise_sigma = 0.03;
  // No rescaling here so the generating plateau stays comparable.
  auto ds = generate_synthetic(spec, 77);
  ds = minmax_scale(ds, ScaleRange{0.0, 1.0});
  const auto aligned = shift_to_reltime(ds, 0.5);
  const auto full = fit_logistic(pooled_points(aligned), {});
  const auto e = bootstrap_fits(aligned, full, 200, 5);
  std::vector<double> upper;
  for (const auto& p : e.param_sets) upper.push_back(p.upper_plateau());
  const auto m = population_moments(upper);
  EXPECT_GT(m.sd, 0.0);
  EXPECT_LE(std::abs(m.mean - 0.9), 2.0 * m.sd);
}

TEST(Bootstrap, LooserThresholdsGiveLongerDurations) {
  const auto aligned = synthetic_aligned(0.08, 6);
  const auto full = fit_logistic(pooled_points(aligned), {});
  const auto e = bootstrap_fits(aligned, full, 200, 31);
  const auto th3 = plateau_thresholds(e, 3);
  const auto th1 = plateau_thresholds(e, 1);
  EXPECT_GE(characteristic_timescale(e, th1).duration_mean, characteristic_timescale(e, th3).duration_mean);
}

TEST(EmpiricalDurations, FirstPassageTimes) {
  Dataset ds;
  ds.scale = ScaleRange{0, 1};
  const auto add = [&](std::string name, std::vector<double> values) {
    RegionSeries s;
    s.nga = name;
    for (std::size_t i = 0; i < values.size(); ++i) {
      Observation o;
      o.nga = name;
      o.abs_time = -1000 + 100 * static_cast<int>(i);
      o.spc1_raw = values[i];
      s.points.push_back(o);
    }
    s.spc1_scaled = values;
    ds.regions.push_back(s);
  };
  add("A", {0.0, 0.2, 0.4, 0.6, 0.8, 0.95});
  add("B", {0.05, 0.5, 0.7, 0.6, 0.92});
  add("Ghanaian Coast", {0.0, 0.3, 0.6, 0.7});
  const auto aligned = shift_to_reltime(ds, 0.5);
  const auto out = empirical_durations(aligned, 0.1, 0.9);
  ASSERT_EQ(out.per_nga.size(), 2u);
  EXPECT_EQ(out.excluded, std::vector<std::string>{"Ghanaian Coast"});
  // A: crosses 0.1 at index 1 and 0.9 at index 5 -> 400 years.
  EXPECT_EQ(out.per_nga[0].duration, 400);
  // B: 0.1 at index 1, 0.9 at index 4 -> 300 years.
  EXPECT_EQ(out.per_nga[1].duration, 300);
  EXPECT_DOUBLE_EQ(out.mean_duration, 350.0);
  EXPECT_DOUBLE_EQ(out.median_duration, 350.0);
  for (const auto& d : out.per_nga) EXPECT_EQ(d.duration, d.tau2 - d.tau1);
}

TEST(ContinuityComparison, RestrictedFitAndInfeasibleMode) {
  const auto aligned = synthetic_aligned(0.05, 8, 23, 8, 0);
  const auto full = fit_logistic(pooled_points(aligned), {});
  const auto cultural = continuity_comparison(aligned, full, ContinuityMode::Cultural);
  EXPECT_EQ(cultural.segments.segments.size(), 23u);
  EXPECT_TRUE(cultural.fit.converged);
  EXPECT_GT(cultural.fit.params.c, 0.0);

  // With every institutional label cleared no region has a segment.
  auto none = aligned;
  for (auto& r : none.regions) {
    for (auto& p : r.series.points) p.institutional_continuity = false;
  }
  try {
    (void)continuity_comparison(none, full, ContinuityMode::Institutional);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FitInfeasible);
  }
}

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cliotime/cliotime.hpp"
#include "oracles.hpp"

using namespace cliotime;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cliotime_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) rows.push_back(csv::split_record(line));
  return rows;
}

fs::path write_synthetic(const fs::path& dir, double sigma, std::uint64_t seed, int regions = 23) {
  SyntheticSpec spec;
  spec.n_regions = regions;
  spec.noise_sigma = sigma;
  spec.cultural_halfwidth = 8;
  spec.institutional_halfwidth = 4;
  const auto path = dir / "input.csv";
  write_text_file(path, serialize_dataset(generate_synthetic(spec, seed)));
  return path;
}

PipelineConfig small_config(const fs::path& input, const fs::path& out) {
  PipelineConfig c;
  c.input_path = input;
  c.output_dir = out;
  c.n_bootstrap = 60;
  c.n_validation = 20;
  c.threads = 2;
  return c;
}

// Reference FNV-1a (64-bit) from its published offset basis and prime.
std::uint64_t fnv_reference(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CLIOTIME_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Pipeline, NoiselessSyntheticReport) {
  const auto dir = scratch("noiseless");
  const auto input = write_synthetic(dir, 0.0, 1);
  run_pipeline(small_config(input, dir / "out"));
  const auto j = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_LT(j["full_fit"]["rmse"].get<double>(), 1e-6);
  EXPECT_GT(j["validation"]["mean_rho2"].get<double>(), 0.999);
  EXPECT_EQ(j["alignment"]["retained"].get<int>(), 23);
  EXPECT_EQ(j["alignment"]["discarded"].get<int>(), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "report.txt"));
}

TEST(Pipeline, ReportTextMirrorsJson) {
  const auto dir = scratch("mirror");
  const auto input = write_synthetic(dir, 0.05, 3);
  run_pipeline(small_config(input, dir / "out"));
  const auto j = Json::parse(slurp(dir / "out" / "report.json"));
  const auto text = slurp(dir / "out" / "report.txt");
  EXPECT_NE(text.find("full_fit.rmse = " + j["full_fit"]["rmse"].dump()), std::string::npos);
  EXPECT_NE(text.find("validation.mean_rho2 = " + j["validation"]["mean_rho2"].dump()), std::string::npos);
  EXPECT_NE(text.find("bootstrap.timescales[1].duration_mean = " +
                      j["bootstrap"]["timescales"][1]["duration_mean"].dump()),
            std::string::npos);
}

TEST(Pipeline, ByteIdenticalRerunsAcrossThreadCounts) {
  const auto dir = scratch("determinism");
  const auto input = write_synthetic(dir, 0.05, 11);
  auto c1 = small_config(input, dir / "a");
  auto c2 = small_config(input, dir / "b");
  c2.threads = 5;
  run_pipeline(c1);
  run_pipeline(c2);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir / "a");
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "b" / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 30u);
}

TEST(Pipeline, SeedChangesResampling) {
  const auto dir = scratch("seed");
  const auto input = write_synthetic(dir, 0.05, 11);
  const auto text = read_file(input);
  auto c = small_config(input, dir);
  const auto b1 = analyze(text, c);
  c.seed = 2;
  const auto b2 = analyze(text, c);
  EXPECT_NE(b1.validation->mean_rho2, b2.validation->mean_rho2);
  EXPECT_NE(b1.provenance.config_hash, b2.provenance.config_hash);
  EXPECT_EQ(b1.full_fit.params.c, b2.full_fit.params.c);
}

TEST(Pipeline, ProvenanceMatchesInputBytes) {
  const auto dir = scratch("provenance");
  const auto input = write_synthetic(dir, 0.05, 4);
  run_pipeline(small_config(input, dir / "out"));
  const auto j = Json::parse(slurp(dir / "out" / "report.json"));
  const auto bytes = slurp(input);
  char expected[40];
  std::snprintf(expected, sizeof(expected), "fnv1a64:%016llx", static_cast<unsigned long long>(fnv_reference(bytes)));
  EXPECT_EQ(j["provenance"]["input_checksum"].get<std::string>(), expected);
  EXPECT_EQ(j["provenance"]["input_bytes"].get<std::size_t>(), bytes.size());
}

TEST(Pipeline, ReportCarriesEveryHeadlineNumber) {
  const auto dir = scratch("headline");
  const auto input = write_synthetic(dir, 0.05, 5);
  run_pipeline(small_config(input, dir / "out"));
  const auto j = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_TRUE(j.contains("threshold"));
  EXPECT_EQ(j["alignment"]["anchors"].size(), 23u);
  EXPECT_EQ(j["bootstrap"]["timescales"].size(), 2u);
  EXPECT_EQ(j["bootstrap"]["timescales"][0]["k_sigma"].get<double>(), 1.0);
  EXPECT_EQ(j["bootstrap"]["timescales"][1]["k_sigma"].get<double>(), 3.0);
  EXPECT_TRUE(j["empirical_durations"].contains("median"));
  ASSERT_EQ(j["continuity"].size(), 2u);
  EXPECT_EQ(j["continuity"][0]["mode"], "cultural");
  EXPECT_DOUBLE_EQ(j["continuity"][0]["mean_length"].get<double>(), 17.0);
  EXPECT_DOUBLE_EQ(j["continuity"][1]["mean_length"].get<double>(), 9.0);
  EXPECT_EQ(j["continuity"][0]["ranking"].size(), 23u);
}

TEST(PlotData, CurveValuesAtGrowthWindowAndCardinalities) {
  const auto dir = scratch("plots");
  const auto input = write_synthetic(dir, 0.05, 6);
  const auto bundle = run_pipeline(small_config(input, dir / "out"));
  const auto out = dir / "out";

  const auto window = read_csv(out / "growth_window.csv");
  ASSERT_EQ(window.size(), 3u);
  std::map<double, double> curve;
  const auto curves = read_csv(out / "curves.csv");
  ASSERT_EQ(curves[0][0], "RelTime");
  ASSERT_EQ(curves[0][1], "full");
  for (std::size_t i = 1; i < curves.size(); ++i) curve[std::stod(curves[i][0])] = std::stod(curves[i][1]);
  for (std::size_t i = 1; i < window.size(); ++i) {
    const double th1 = std::stod(window[i][1]);
    const double th2 = std::stod(window[i][2]);
    ASSERT_FALSE(window[i][6].empty());
    const double t1 = std::stod(window[i][6]);
    const double t2 = std::stod(window[i][7]);
    ASSERT_TRUE(curve.count(t1));
    ASSERT_TRUE(curve.count(t2));
    EXPECT_NEAR(curve[t1], th1, 1e-6);
    EXPECT_NEAR(curve[t2], th2, 1e-6);
    EXPECT_LT(t1, t2);
  }

  EXPECT_EQ(read_csv(out / "residuals.csv").size() - 1, bundle.pooled.size());
  std::size_t series_files = 0;
  for (const auto& e : fs::directory_iterator(out / "series")) series_files += e.path().extension() == ".csv";
  EXPECT_EQ(series_files, bundle.aligned.regions.size());
  EXPECT_EQ(read_csv(out / "kde.csv").size() - 1, bundle.density.grid.size());
  EXPECT_EQ(read_csv(out / "bootstrap_params.csv").size() - 1, bundle.ensemble->param_sets.size());
  for (const char* svg : {"aligned_series.svg", "density.svg", "residuals.svg", "continuity_curves.svg",
                          "small_multiples.svg"}) {
    const auto text = slurp(out / svg);
    EXPECT_NE(text.find("<svg"), std::string::npos) << svg;
    EXPECT_NE(text.find("</svg>"), std::string::npos) << svg;
  }
}

TEST(PlotData, UnwritableDirectoryIsIoError) {
  const auto dir = scratch("unwritable");
  const auto input = write_synthetic(dir, 0.05, 6);
  auto config = small_config(input, dir / "input.csv" / "sub");
  config.stages.bootstrap = false;
  try {
    run_pipeline(config);
    FAIL() << "expected an I/O error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}

TEST(Pipeline, MissingInputWritesNothing) {
  const auto dir = scratch("missing");
  auto config = small_config(dir / "absent.csv", dir / "out");
  try {
    run_pipeline(config);
    FAIL() << "expected an I/O error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
    EXPECT_EQ(e.category(), ErrorCategory::Data);
  }
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Pipeline, InvalidConfigRejected) {
  PipelineConfig c;
  c.k_sigma_list = {2};
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.n_bootstrap = 0;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.bandwidth = Bandwidth::fixed(-0.1);
  EXPECT_THROW(validate(c), Error);
}

TEST(Benchmark, SeriesOnTheFittedCurveHasZeroDivergence) {
  const auto dir = scratch("bench_exact");
  const auto input = write_synthetic(dir, 0.0, 1);
  auto config = small_config(input, dir);
  config.stages = {false, false, false, false};
  const auto bundle = analyze(read_file(input), config);
  const auto& p = bundle.full_fit.params;
  const double crossing = logistic_inverse(p, bundle.threshold.spc1_0);
  ASSERT_GE(crossing, -100.0);
  ASSERT_LT(crossing, 0.0);

  Dataset fresh;
  RegionSeries series;
  series.nga = "Newcomer";
  for (int j = -12; j <= 15; ++j) {
    Observation o;
    o.nga = series.nga;
    o.pol_id = "N";
    o.abs_time = 700 + 100 * j;
    o.spc1_raw = bundle.dataset.scale->invert(oracle::logistic(p.a, p.b, p.c, p.d, 100.0 * j));
    series.points.push_back(o);
  }
  fresh.regions.push_back(series);
  const auto report = benchmark_check(bundle, fresh);
  ASSERT_EQ(report.regions.size(), 1u);
  const auto& d = report.regions[0];
  ASSERT_TRUE(d.anchorable);
  EXPECT_EQ(*d.anchor_year, 700);
  for (double r : d.residuals) EXPECT_NEAR(r, 0.0, 1e-9);
  EXPECT_EQ(d.exceeding, 0u);
  EXPECT_EQ(d.fraction_exceeding, 0.0);
}

TEST(Benchmark, FlatSeriesIsNotAnchorable) {
  const auto dir = scratch("bench_flat");
  const auto input = write_synthetic(dir, 0.05, 2);
  auto config = small_config(input, dir);
  config.stages = {false, false, false, false};
  const auto bundle = analyze(read_file(input), config);
  std::string text = "NGA,PolID,AbsTime,RelTime,SPC1,Culture.Sequence,Institutions.Sequence\n";
  for (int t = -2000; t <= 1000; t += 100) {
    text += "Steppe,S1," + std::to_string(t) + ",," + csv::format_double(bundle.dataset.scale->invert(0.1)) +
            ",outside.central,outside.central\n";
  }
  write_text_file(dir / "flat.csv", text);
  const auto report = benchmark_check(bundle, dir / "flat.csv");
  ASSERT_EQ(report.regions.size(), 1u);
  EXPECT_FALSE(report.regions[0].anchorable);
  EXPECT_FALSE(report.regions[0].anchor_year.has_value());
  EXPECT_TRUE(report.regions[0].residuals.empty());
}

TEST(Benchmark, HeldOutRegionDivergesLikeItsInSampleResiduals) {
  SyntheticSpec spec;
  spec.noise_sigma = 0.05;
  const auto full = generate_synthetic(spec, 9);
  PipelineConfig config;
  config.stages = {false, false, false, false};
  const auto in_sample = analyze(serialize_dataset(full), config);

  double held_total = 0.0;
  double in_total = 0.0;
  for (std::size_t held = 0; held < full.regions.size(); ++held) {
    Dataset rest = full;
    Dataset single;
    single.regions.push_back(rest.regions[held]);
    rest.regions.erase(rest.regions.begin() + static_cast<std::ptrdiff_t>(held));
    const auto bundle = analyze(serialize_dataset(rest), config);
    const auto report = benchmark_check(bundle, single);
    ASSERT_TRUE(report.regions[0].anchorable);

    // In-sample exceedance for the same region against the full-data fit.
    const auto& nga = single.regions[0].nga;
    std::size_t offset = 0;
    for (const auto& r : in_sample.aligned.regions) {
      if (r.nga() == nga) break;
      offset += r.size();
    }
    const auto* region = in_sample.aligned.find(nga);
    ASSERT_NE(region, nullptr);
    std::size_t exceeding = 0;
    for (std::size_t i = 0; i < region->size(); ++i) {
      exceeding += std::abs(in_sample.full_fit.residuals[offset + i]) > 2.0 * in_sample.full_fit.rmse;
    }
    const double in_fraction = static_cast<double>(exceeding) / static_cast<double>(region->size());
    // A held-out region can anchor a few centuries away when the threshold
    // moves past one of its noisy early points.
    EXPECT_NEAR(report.regions[0].fraction_exceeding, in_fraction, 0.15) << nga;
    held_total += report.regions[0].fraction_exceeding;
    in_total += in_fraction;
  }
  const auto n = static_cast<double>(full.regions.size());
  EXPECT_NEAR(held_total / n, in_total / n, 0.02);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const std::string d = dir.string();
  EXPECT_EQ(run_cli("report --input " + d + "/absent.csv --out " + d + "/out"), 2);
  EXPECT_FALSE(fs::exists(dir / "out"));
  EXPECT_EQ(run_cli("report --no-such-flag"), 1);
  EXPECT_EQ(run_cli("synth --out " + d + "/syn.csv --noise 0.05 --seed 4 --cultural-halfwidth 6"), 0);
  EXPECT_EQ(run_cli("report --input " + d + "/syn.csv --out " + d + "/out --bootstrap 30 --validation 5 --k-sigma 3"), 0);
  const auto j = Json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(j["bootstrap"]["iterations"].get<int>(), 30);
  EXPECT_EQ(j["bootstrap"]["timescales"].size(), 1u);
  EXPECT_EQ(run_cli("report --input " + d + "/syn.csv --out " + d + "/bad --k-sigma 2"), 2);
  EXPECT_EQ(run_cli("fit --input " + d + "/syn.csv --out " + d + "/fit --bandwidth 0.05"), 0);
  EXPECT_TRUE(fs::exists(dir / "fit" / "report.json"));
  EXPECT_EQ(run_cli("check --input " + d + "/syn.csv --out " + d + "/check --series " + d + "/syn.csv"), 0);
  EXPECT_TRUE(fs::exists(dir / "check" / "check.json"));

  // Noise around a constant has a unimodal density, so no threshold exists.
  SyntheticSpec flat;
  flat.params.c = 1e-9;
  flat.noise_sigma = 0.05;
  write_text_file(dir / "flat.csv", serialize_dataset(generate_synthetic(flat, 3)));
  EXPECT_EQ(run_cli("fit --input " + d + "/flat.csv --out " + d + "/flat"), 3);
  EXPECT_FALSE(fs::exists(dir / "flat"));
}

TEST(Cli, EnvironmentOverridesDefaults) {
  const auto dir = scratch("cli_env");
  const std::string d = dir.string();
  ASSERT_EQ(run_cli("synth --out " + d + "/syn.csv --noise 0.05"), 0);
  ::setenv("CLIOTIME_BOOTSTRAP", "17", 1);
  ASSERT_EQ(run_cli("bootstrap --input " + d + "/syn.csv --out " + d + "/out"), 0);
  const auto j = Json::parse(slurp(dir / "out" / "report.json"));
  ::unsetenv("CLIOTIME_BOOTSTRAP");
  EXPECT_EQ(j["bootstrap"]["iterations"].get<int>(), 17);
}

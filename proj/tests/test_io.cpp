#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "sburgers/io.hpp"

using namespace sburgers;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sburgers_test_io_" + name);
  fs::remove_all(p);
  return p;
}

StudyConfig tiny() {
  return parse_config_text(
      "seed = 3\nT = 0.05\nsteps = 32\nlevels = 2, 4, 8\nM_ref = 32\nsamples_strong = 1\nsamples_weak = 1\n"
      "bootstrap = 5\n");
}

}  // namespace

TEST(ParseConfig, MinimalConfigFillsDefaults) {
  const auto c = parse_config_text("seed = 20240611\n");
  EXPECT_TRUE(c == StudyConfig{});
}

TEST(ParseConfig, CommentsAndWhitespace) {
  const auto c = parse_config_text("# header\n  seed=5   # trailing\n\nlevels = 4,8 , 16\n");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.levels, (std::vector<std::size_t>{4, 8, 16}));
}

TEST(ParseConfig, SeedIsMandatory) {
  const auto e = error_of("T = 0.5\n");
  EXPECT_NE(e.find("seed"), std::string::npos);
}

TEST(ParseConfig, NonDyadicLevelsRejectedWithKey) {
  const auto e = error_of("seed = 1\nlevels = 8, 16, 48\n");
  EXPECT_NE(e.find("test.cfg:2"), std::string::npos) << e;
  EXPECT_NE(e.find("'levels'"), std::string::npos) << e;
}

TEST(ParseConfig, NonTraceClassRejected) {
  const auto e = error_of("seed = 1\nrho = 0.9\n");
  EXPECT_NE(e.find("'rho'"), std::string::npos) << e;
  EXPECT_NE(e.find("sum_k q_k < infinity"), std::string::npos) << e;
}

TEST(ParseConfig, ReferenceTooCoarseRejected) {
  const auto e = error_of("seed = 1\nM_ref = 128\n");
  EXPECT_NE(e.find("'M_ref'"), std::string::npos) << e;
}

TEST(ParseConfig, TypeMismatchAndUnknownKeys) {
  EXPECT_NE(error_of("seed = 1\nT = half\n").find("'T'"), std::string::npos);
  EXPECT_NE(error_of("seed = -1\n").find("'seed'"), std::string::npos);
  EXPECT_NE(error_of("seed = 1\nnonlinear = maybe\n").find("'nonlinear'"), std::string::npos);
  EXPECT_NE(error_of("seed = 1\ncolour = red\n").find("unknown key"), std::string::npos);
  EXPECT_NE(error_of("seed = 1\nseed = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("seed = 1\nsamples_weak = 0\n").find("'samples_weak'"), std::string::npos);
  EXPECT_NE(error_of("seed = 1\njust words\n").find("test.cfg:2"), std::string::npos);
}

TEST(ParseConfig, RotationsAndPresets) {
  const auto c = parse_config_text("seed = 1\nrotations = 1:2:0.5; 3:7:-1.25\nx0_preset = low-regularity\n");
  ASSERT_EQ(c.covariance.rotations().size(), 2u);
  EXPECT_EQ(c.covariance.rotations()[1].j, 7u);
  EXPECT_DOUBLE_EQ(c.covariance.rotations()[1].angle, -1.25);
  EXPECT_GT(c.x0.coeffs.size(), 2u);
  EXPECT_NE(error_of("seed = 1\nrotations = 1:300:0.1\n").find("'rotations'"), std::string::npos);
}

TEST(ParseConfig, StepsAndDtAreExclusive) {
  const auto c = parse_config_text("seed = 1\nT = 1\nsteps = 8\nlevels = 2\nM_ref = 8\n");
  EXPECT_DOUBLE_EQ(c.dt, 0.125);
  EXPECT_FALSE(error_of("seed = 1\ndt = 0.1\nsteps = 5\n").empty());
}

TEST(CanonicalText, RoundTripAndStableHash) {
  StudyConfig c;
  c.seed = 77;
  c.dt = 0.1 / 3.0 * 0.015;  // not a short decimal
  c.T = c.dt * 100;
  c.covariance = CovarianceModel(2.5, 0.3, 64, {{2, 9, 0.123456789}});
  c.functional = TestFunctional::gaussian_exp(0.7);
  const auto text = to_config_text(c);
  const auto back = parse_config_text(text);
  EXPECT_TRUE(back == c);
  EXPECT_EQ(to_config_text(back), text);
  EXPECT_EQ(config_hash(text), config_hash(to_config_text(back)));
  EXPECT_EQ(config_hash(text).size(), 16u);
  EXPECT_NE(config_hash(text), config_hash(to_config_text(StudyConfig{})));
}

TEST(ConfigHash, Fnv1aReference) {
  EXPECT_EQ(config_hash(""), "cbf29ce484222325");
  EXPECT_EQ(config_hash("a"), "af63dc4c8601ec8c");
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 123456789.0, 0.30000000000000004}) {
    const auto s = format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
    EXPECT_LE(s.size(), 24u);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(ResultBundle, JsonRoundTripIncludingNan) {
  ResultBundle b;
  b.kind = "strong-rate";
  b.manifest = make_manifest(tiny(), 2);
  b.manifest.counts["strong"] = {10, 1};
  RateEstimate r;
  r.points = {{8, 0.1, 0.09, 0.11, 0.01, true}, {16, 1.0 / 3.0, 0.2, 0.4, 0.1, false}};
  r.sufficient = false;
  r.note = "n";
  b.strong = r;  // slope stays NaN
  b.checks = {{"c", true, 1e-15, 1e-12, "d"}};
  b.series["t"] = {0.0, 0.5, std::nan("")};
  LevelMoments lm;
  lm.M = 8;
  lm.reports = {summarize("sup_l2^4", std::vector<double>{1.0, 2.0, 4.0})};
  b.moments = {lm};
  auto back = bundle_from_json_text(to_json_text(b));
  EXPECT_TRUE(back.strong.has_value());
  EXPECT_TRUE(std::isnan(back.strong->slope));
  EXPECT_FALSE(back.weak.has_value());
  EXPECT_TRUE(std::isnan(back.series.at("t")[2]));
  b.series["t"][2] = back.series.at("t")[2] = 0.0;  // NaN != NaN in vector ==
  EXPECT_TRUE(back == b);
}

TEST(ResultBundle, SingleSampleStudyRoundTrips) {
  const auto c = tiny();
  ResultBundle b;
  b.kind = "rates";
  b.manifest = make_manifest(c, 1);
  auto [s, w] = rate_studies(c, 1);
  b.strong = s;
  b.weak = w;
  b.manifest.counts["strong"] = {s.samples, s.failures};
  const auto back = bundle_from_json_text(to_json_text(b));
  EXPECT_TRUE(back == b);
}

TEST(ResultBundle, ManifestReproducesStudy) {
  const auto c = tiny();
  ResultBundle b;
  b.kind = "strong-rate";
  b.manifest = make_manifest(c, 1);
  b.strong = strong_error_study(c, 1);
  b.manifest.counts["strong"] = {1, 0};
  const auto bundle = bundle_from_json_text(to_json_text(b));
  const auto c2 = parse_config_text(bundle.manifest.config);
  EXPECT_TRUE(c2 == c);
  EXPECT_EQ(config_hash(to_config_text(c2)), bundle.manifest.config_hash);
  ResultBundle b2 = b;
  b2.manifest = make_manifest(c2, 4);
  b2.strong = strong_error_study(c2, 4);
  b2.manifest.counts = b.manifest.counts;
  EXPECT_TRUE(same_results(b, b2));
}

TEST(Emit, WritesCsvJsonAndPlotData) {
  const auto dir = scratch_dir("emit");
  ResultBundle b;
  b.kind = "strong-rate";
  b.manifest = make_manifest(tiny(), 1);
  b.manifest.counts["strong"] = {5, 0};
  RateEstimate r;
  r.points = {{8, 0.1, 0.09, 0.11, 0.01, true}, {16, 1.0 / 3.0, 0.2, 0.4, 0.1, true}};
  b.strong = r;
  const auto files = emit(b, dir, OutputFormat::both);
  EXPECT_TRUE(fs::exists(dir / "results.json"));
  EXPECT_TRUE(fs::exists(dir / "strong.csv"));
  EXPECT_TRUE(fs::exists(dir / "strong.dat"));
  std::ifstream in(dir / "strong.csv");
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_EQ(header.rfind("M,estimate,ci_lo,ci_hi", 0), 0u);
  EXPECT_EQ(row2.rfind("16,0.3333333333333333,0.2,0.4", 0), 0u) << row2;
  for (const auto& e : fs::directory_iterator(dir)) EXPECT_NE(e.path().extension(), ".tmp");
  fs::remove_all(dir);
}

TEST(Emit, JsonOnlyFormat) {
  const auto dir = scratch_dir("json_only");
  ResultBundle b;
  b.kind = "invariants";
  b.manifest = make_manifest(tiny(), 1);
  b.checks = {{"x", true, 0, 0, ""}};
  emit(b, dir, OutputFormat::json);
  EXPECT_TRUE(fs::exists(dir / "results.json"));
  EXPECT_FALSE(fs::exists(dir / "checks.csv"));
  fs::remove_all(dir);
}

TEST(Emit, EmptyStudyRejectedBeforeWriting) {
  const auto dir = scratch_dir("empty");
  ResultBundle b;
  b.kind = "strong-rate";
  b.manifest.counts["strong"] = {0, 0};
  EXPECT_THROW(emit(b, dir, OutputFormat::both), std::invalid_argument);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Emit, FailureLeavesNoPartialFiles) {
  const auto dir = scratch_dir("partial");
  fs::create_directories(dir);
  // a directory squatting on one target name makes that rename fail
  fs::create_directories(dir / "strong.csv");
  ResultBundle b;
  b.kind = "strong-rate";
  b.manifest = make_manifest(tiny(), 1);
  RateEstimate r;
  r.points = {{8, 0.1, 0.09, 0.11, 0.01, true}};
  b.strong = r;
  EXPECT_THROW(emit(b, dir, OutputFormat::both), std::exception);
  for (const auto& e : fs::directory_iterator(dir)) {
    EXPECT_EQ(e.path().filename(), "strong.csv") << "left behind " << e.path();
  }
  fs::remove_all(dir);
}

TEST(LoadConfig, AcceptsResultsJson) {
  const auto dir = scratch_dir("load");
  ResultBundle b;
  b.kind = "invariants";
  b.manifest = make_manifest(tiny(), 1);
  emit(b, dir, OutputFormat::json);
  EXPECT_TRUE(load_config(dir / "results.json") == tiny());
  fs::remove_all(dir);
}

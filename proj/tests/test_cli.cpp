#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "crfrefine/atrous.hpp"
#include "crfrefine/eval.hpp"
#include "crfrefine/io.hpp"
#include "manifest.hpp"

using namespace crfrefine;
using namespace crfrefine::cli;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("crfrefine_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SyntheticOptions small_set() {
  SyntheticOptions o;
  o.size = 32;
  o.count = 3;
  o.heldout = 1;
  o.classes = 3;
  return o;
}

double eval_mean(const fs::path& manifest, const fs::path& pred_dir, int classes, const fs::path& out) {
  std::ostringstream sink, err;
  EvalOptions e;
  e.manifest = manifest;
  e.pred_dir = pred_dir;
  e.classes = classes;
  e.out_dir = out;
  EXPECT_EQ(cmd_eval(e, sink, err), 0) << err.str();
  const std::string text = sink.str();
  return std::stod(text.substr(text.find(',') + 1));
}

}  // namespace

TEST(Manifest, ParsesAndResolvesRelativePaths) {
  const fs::path dir = scratch("manifest");
  write_file_atomic(dir / "m.tsv", "# comment\na.crft\tb.ppm\t-\tout/c.pgm\n\n/abs/s.crft\ti.ppm\tg.pgm\to.pgm\r\n");
  const auto entries = load_manifest(dir / "m.tsv");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].score, dir / "a.crft");
  EXPECT_FALSE(entries[0].gt.has_value());
  EXPECT_EQ(entries[0].output, dir / "out/c.pgm");
  EXPECT_EQ(entries[1].score, fs::path("/abs/s.crft"));
  EXPECT_EQ(*entries[1].gt, dir / "g.pgm");

  write_file_atomic(dir / "bad.tsv", "a\tb\tc\n");
  EXPECT_THROW(load_manifest(dir / "bad.tsv"), std::runtime_error);
  write_file_atomic(dir / "empty.tsv", "# nothing\n");
  EXPECT_THROW(load_manifest(dir / "empty.tsv"), std::runtime_error);
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  write_synthetic_set(small_set(), a);
  write_synthetic_set(small_set(), b);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    EXPECT_EQ(read_file(entry.path()), read_file(b / rel)) << rel;
  }
  SyntheticOptions other = small_set();
  other.seed = 8;
  EXPECT_NE(encode_tensor(make_synthetic_sample(small_set(), 0).scores),
            encode_tensor(make_synthetic_sample(other, 0).scores));
}

TEST(Synthetic, EveryClassPresentAndShapesConsistent) {
  const SyntheticOptions o = small_set();
  for (int i = 0; i < 4; ++i) {
    const SyntheticSample s = make_synthetic_sample(o, i);
    EXPECT_EQ(s.image.height(), 32);
    EXPECT_EQ(s.scores.height(), 4);
    EXPECT_EQ(s.scores.channels(), 3);
    std::vector<int> seen(3, 0);
    for (auto l : s.gt.labels()) ++seen[l];
    for (int c = 0; c < 3; ++c) EXPECT_GT(seen[c], 0);
  }
}

TEST(Synthetic, NoiseFreeFullResolutionScoresRecoverGroundTruth) {
  SyntheticOptions o = small_set();
  o.noise = 0.0;
  o.stride = 1;
  const fs::path dir = scratch("synth_clean");
  write_synthetic_set(o, dir);
  RefineOptions r;
  r.manifest = dir / "manifest.tsv";
  r.output_dir = dir / "raw";
  r.inference.iterations = 0;
  r.upsample = 1;
  std::ostringstream sink, err;
  ASSERT_EQ(cmd_refine(r, sink, err), 0) << err.str();
  EXPECT_DOUBLE_EQ(eval_mean(r.manifest, dir / "raw", 3, dir / "eval"), 1.0);
}

TEST(Synthetic, NoiseRateIsRoughlyHonored) {
  SyntheticOptions o;
  o.noise = 0.3;
  int flipped = 0, cells = 0;
  for (int i = 0; i < 10; ++i) {
    const SyntheticSample s = make_synthetic_sample(o, i);
    for (int cy = 0; cy < s.scores.height(); ++cy)
      for (int cx = 0; cx < s.scores.width(); ++cx) {
        const int y = std::min(cy * 8 + 4, o.size - 1), x = std::min(cx * 8 + 4, o.size - 1);
        int arg = 0;
        for (int c = 1; c < o.classes; ++c)
          if (s.scores.at(cy, cx, c) > s.scores.at(cy, cx, arg)) arg = c;
        flipped += arg != s.gt.at(y, x);
        ++cells;
      }
  }
  EXPECT_NEAR(double(flipped) / cells, 0.3, 0.05);
}

// Benchmark defaults (seed 7, size 96, 4 classes, noise 0.3). The unrefined
// mIOU is counted directly per class and via refine + eval; the range brackets
// the measured 0.5346.
TEST(Synthetic, BenchmarkUnrefinedMiouInRecordedRange) {
  const fs::path dir = scratch("synth_bench");
  const SyntheticOptions o;
  write_synthetic_set(o, dir);
  std::vector<long> inter(o.classes, 0), uni(o.classes, 0);
  for (const auto& e : load_manifest(dir / "manifest.tsv")) {
    const Image im = load_ppm(e.image);
    const LabelMap pred = argmax_channels(prepare_scores(load_tensor(e.score), im, 8));
    const LabelMap gt = load_pgm(*e.gt, o.classes);
    for (int y = 0; y < gt.height(); ++y)
      for (int x = 0; x < gt.width(); ++x) {
        const int g = gt.at(y, x), q = pred.at(y, x);
        if (g == q) {
          ++inter[g];
          ++uni[g];
        } else {
          ++uni[g];
          ++uni[q];
        }
      }
  }
  double direct = 0;
  for (int c = 0; c < o.classes; ++c) direct += double(inter[c]) / uni[c];
  direct /= o.classes;

  RefineOptions r;
  r.manifest = dir / "manifest.tsv";
  r.output_dir = dir / "raw";
  r.inference.iterations = 0;
  std::ostringstream sink, err;
  ASSERT_EQ(cmd_refine(r, sink, err), 0) << err.str();
  EXPECT_NEAR(eval_mean(r.manifest, dir / "raw", o.classes, dir / "eval"), direct, 1e-6);
  EXPECT_GT(direct, 0.50);
  EXPECT_LT(direct, 0.57);
}

TEST(PrepareScores, UpsamplesAndCrops) {
  const Tensor3 coarse(3, 2, 2, 1.0f);
  const Tensor3 up = prepare_scores(coarse, Image(20, 13), 8);
  EXPECT_EQ(up.height(), 20);
  EXPECT_EQ(up.width(), 13);
  EXPECT_THROW(prepare_scores(coarse, Image(25, 13), 8), std::invalid_argument);
}

TEST(Refine, ZeroIterationsEqualsArgmaxOfUpsampledScores) {
  const fs::path dir = scratch("refine0");
  write_synthetic_set(small_set(), dir);
  RefineOptions r;
  r.manifest = dir / "manifest.tsv";
  r.output_dir = dir / "out";
  r.inference.iterations = 0;
  std::ostringstream sink, err;
  ASSERT_EQ(cmd_refine(r, sink, err), 0) << err.str();
  for (const auto& e : load_manifest(r.manifest)) {
    const Image im = load_ppm(e.image);
    const LabelMap want = argmax_channels(prepare_scores(load_tensor(e.score), im, 8));
    EXPECT_EQ(load_pgm(dir / "out" / e.output.filename(), 3), want);
  }
  // Pairwise-free parameters give the same labels with iterations.
  r.inference.iterations = 10;
  r.params = {0, 0, 60, 5, 3};
  r.output_dir = dir / "out_nopair";
  ASSERT_EQ(cmd_refine(r, sink, err), 0);
  for (const auto& e : load_manifest(r.manifest))
    EXPECT_EQ(read_file(dir / "out" / e.output.filename()), read_file(dir / "out_nopair" / e.output.filename()));
}

TEST(Refine, SnapshotsWriteQAndLogQ) {
  const fs::path dir = scratch("snap");
  SyntheticOptions o = small_set();
  o.count = 1;
  write_synthetic_set(o, dir);
  RefineOptions r;
  r.manifest = dir / "manifest.tsv";
  r.output_dir = dir / "out";
  r.inference.iterations = 2;
  r.snapshots = true;
  std::ostringstream sink, err;
  ASSERT_EQ(cmd_refine(r, sink, err), 0) << err.str();
  for (const char* name : {"img_000_q_t00.crft", "img_000_q_t02.crft", "img_000_logq_t01.crft"})
    EXPECT_TRUE(fs::exists(dir / "out" / name)) << name;
  EXPECT_TRUE(is_simplex(load_tensor(dir / "out" / "img_000_q_t02.crft")));
}

TEST(Refine, FailuresAreReportedAndOthersStillRun) {
  const fs::path dir = scratch("refine_fail");
  write_synthetic_set(small_set(), dir);
  std::string text = read_file(dir / "manifest.tsv");
  text += "scores/missing.crft\timages/img_000.ppm\t-\trefined/missing.pgm\n";
  write_file_atomic(dir / "broken.tsv", text);
  RefineOptions r;
  r.manifest = dir / "broken.tsv";
  std::ostringstream sink, err;
  EXPECT_EQ(cmd_refine(r, sink, err), 1);
  EXPECT_NE(err.str().find("missing.crft"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "refined" / "img_002.pgm"));
  EXPECT_NE(sink.str().find("refined 3/4"), std::string::npos);
}

TEST(Refine, OutputIndependentOfJobs) {
  const fs::path dir = scratch("jobs");
  write_synthetic_set(small_set(), dir);
  RefineOptions r;
  r.manifest = dir / "manifest.tsv";
  std::ostringstream sink, err;
  r.output_dir = dir / "j1";
  r.jobs = 1;
  ASSERT_EQ(cmd_refine(r, sink, err), 0);
  r.output_dir = dir / "j3";
  r.jobs = 3;
  ASSERT_EQ(cmd_refine(r, sink, err), 0);
  for (const auto& e : load_manifest(r.manifest))
    EXPECT_EQ(read_file(dir / "j1" / e.output.filename()), read_file(dir / "j3" / e.output.filename()));
}

TEST(Eval, WritesFixedSixDecimalCsv) {
  const fs::path dir = scratch("eval");
  write_synthetic_set(small_set(), dir);
  RefineOptions r;
  r.manifest = dir / "manifest.tsv";
  r.output_dir = dir / "pred";
  std::ostringstream sink, err;
  ASSERT_EQ(cmd_refine(r, sink, err), 0);
  EvalOptions e;
  e.manifest = r.manifest;
  e.pred_dir = dir / "pred";
  e.classes = 3;
  e.radii = {1, 2, 40};
  e.out_dir = dir / "report";
  ASSERT_EQ(cmd_eval(e, sink, err), 0) << err.str();
  const std::string table = read_file(dir / "report" / "class_iou.csv");
  EXPECT_EQ(table.rfind("class,iou\n0,", 0), 0u);
  EXPECT_NE(table.find("\nmean,0."), std::string::npos);
  const std::string curve = read_file(dir / "report" / "trimap.csv");
  EXPECT_EQ(curve.rfind("radius,mean_iou,pixel_acc\n1,", 0), 0u);
  // Every number carries exactly six decimals.
  std::istringstream lines(curve);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto comma = line.find(',');
    const std::string v = line.substr(comma + 1, line.find(',', comma + 1) - comma - 1);
    EXPECT_EQ(v.size() - v.find('.') - 1, 6u) << line;
  }
}

TEST(Eval, MissingGroundTruthFails) {
  const fs::path dir = scratch("eval_nogt");
  write_synthetic_set(small_set(), dir);
  write_file_atomic(dir / "m.tsv", "scores/img_000.crft\timages/img_000.ppm\t-\tp.pgm\n");
  EvalOptions e;
  e.manifest = dir / "m.tsv";
  e.classes = 3;
  e.out_dir = dir / "r";
  std::ostringstream sink, err;
  EXPECT_EQ(cmd_eval(e, sink, err), 1);
}

TEST(Tune, WritesOrderedJson) {
  const fs::path dir = scratch("tune");
  write_synthetic_set(small_set(), dir);
  TuneOptions t;
  t.manifest = dir / "heldout.tsv";
  t.classes = 3;
  t.spec.w1 = {4, 2, 6};
  t.spec.sigma_alpha = {30, 30, 60};
  t.spec.sigma_beta = {5, 5, 10};
  t.spec.refine_rounds = 2;
  t.out = dir / "tune.json";
  std::ostringstream sink, err;
  ASSERT_EQ(cmd_tune(t, sink, err), 0) << err.str();
  const auto doc = nlohmann::ordered_json::parse(read_file(t.out));
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"best", "score", "iterations", "rounds", "trace"}));
  std::vector<std::string> best_keys;
  for (auto it = doc["best"].begin(); it != doc["best"].end(); ++it) best_keys.push_back(it.key());
  EXPECT_EQ(best_keys, (std::vector<std::string>{"w1", "w2", "sigma_alpha", "sigma_beta", "sigma_gamma"}));
  EXPECT_GE(doc["trace"].size(), 8u);
  const KernelParams p = load_params_json(t.out);
  EXPECT_EQ(p.w2, 3.0);
  double max_score = 0;
  for (const auto& e : doc["trace"]) max_score = std::max(max_score, e["score"].get<double>());
  EXPECT_EQ(doc["score"].get<double>(), max_score);
}

TEST(RfCalc, PresetTable) {
  RfCalcOptions o;
  o.preset = "all";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_rf_calc(o, out, err), 0);
  EXPECT_NE(out.str().find("vgg16,404,32,224\n"), std::string::npos);
  EXPECT_NE(out.str().find("deeplab-crf,308,8,128\n"), std::string::npos);
  o.preset = "nope";
  EXPECT_EQ(cmd_rf_calc(o, out, err), 2);
  o.preset.reset();
  EXPECT_EQ(cmd_rf_calc(o, out, err), 2);
}

TEST(RfCalc, LayerFile) {
  const fs::path dir = scratch("rf");
  write_file_atomic(dir / "net.txt", "3,1,1\n2,2,1\n3,1,2\n");
  RfCalcOptions o;
  o.layers = dir / "net.txt";
  std::ostringstream out, err;
  ASSERT_EQ(cmd_rf_calc(o, out, err), 0);
  EXPECT_NE(out.str().find("net.txt,12,2,12\n"), std::string::npos);
}

TEST(FilterBench, ReportsBothPaths) {
  FilterBenchOptions o;
  o.n = 300;
  o.dim = 2;
  o.trials = 2;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_filter_bench(o, out, err), 0);
  EXPECT_EQ(out.str().rfind("path,n,dim,trials,p50_ms,p90_ms,max_ms,rel_l2_vs_exact\nexact,300,2,2,", 0), 0u);
  EXPECT_NE(out.str().find("\npermutohedral,300,2,2,"), std::string::npos);
}

TEST(Jobs, FlagThenEnvironmentThenCores) {
  EXPECT_EQ(resolve_jobs(3), 3);
  EXPECT_THROW(resolve_jobs(0), std::invalid_argument);
  ::setenv("CRF_REFINE_JOBS", "2", 1);
  EXPECT_EQ(resolve_jobs(std::nullopt), 2);
  EXPECT_EQ(resolve_jobs(5), 5);
  ::setenv("CRF_REFINE_JOBS", "zero", 1);
  EXPECT_THROW(resolve_jobs(std::nullopt), std::invalid_argument);
  ::unsetenv("CRF_REFINE_JOBS");
  EXPECT_GE(resolve_jobs(std::nullopt), 1);
}

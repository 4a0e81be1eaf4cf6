// crf-refine: command-line front end for the dense CRF refinement toolkit.

#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using namespace crfrefine;
using namespace crfrefine::cli;

// "start:step:stop" or a single value.
GridAxis parse_axis(const std::string& text, const char* flag) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) {
      throw CLI::ValidationError(flag, "expected start:step:stop or a number, got '" + text + "'");
    }
    return v;
  };
  const auto first = text.find(':');
  if (first == std::string::npos) {
    const double v = number(text);
    return {v, 1.0, v};
  }
  const auto second = text.find(':', first + 1);
  if (second == std::string::npos) {
    throw CLI::ValidationError(flag, "expected start:step:stop, got '" + text + "'");
  }
  return {number(text.substr(0, first)), number(text.substr(first + 1, second - first - 1)),
          number(text.substr(second + 1))};
}

NormalizeMode parse_normalize(const std::string& text) {
  return text == "none" ? NormalizeMode::kNone : NormalizeMode::kSymmetric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense CRF refinement of coarse segmentation score maps"};
  app.require_subcommand(1);

  // refine
  RefineOptions refine;
  std::optional<std::string> refine_out_dir;
  std::optional<std::string> refine_params_file;
  std::optional<double> w1, w2, sigma_alpha, sigma_beta, sigma_gamma;
  std::optional<int> refine_jobs;
  std::string refine_normalize = "symmetric";
  std::string refine_manifest;
  auto* refine_cmd = app.add_subcommand("refine", "Upsample scores, run mean-field inference, write label maps");
  refine_cmd->add_option("manifest,--manifest", refine_manifest, "Manifest file")->required();
  refine_cmd->add_option("--output-dir", refine_out_dir, "Write outputs here instead of the manifest paths");
  refine_cmd->add_option("--params", refine_params_file, "Tune result JSON providing the kernel parameters");
  refine_cmd->add_option("--w1", w1, "Appearance kernel weight");
  refine_cmd->add_option("--w2", w2, "Smoothness kernel weight");
  refine_cmd->add_option("--sigma-alpha", sigma_alpha, "Appearance kernel spatial bandwidth (pixels)");
  refine_cmd->add_option("--sigma-beta", sigma_beta, "Appearance kernel color bandwidth");
  refine_cmd->add_option("--sigma-gamma", sigma_gamma, "Smoothness kernel bandwidth (pixels)");
  refine_cmd->add_option("--iterations", refine.inference.iterations, "Mean-field iterations")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  refine_cmd->add_option("--upsample", refine.upsample, "Bilinear upsampling factor")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  refine_cmd->add_option("--normalize", refine_normalize, "Filter normalization")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "symmetric"}));
  refine_cmd->add_flag("--snapshots", refine.snapshots, "Write Q and log Q after every iteration");
  refine_cmd->add_option("--jobs", refine_jobs, "Parallel entries (default: CRF_REFINE_JOBS or cores)");

  // eval
  EvalOptions eval;
  std::string eval_manifest;
  std::optional<std::string> eval_pred_dir;
  std::string eval_out = "eval";
  auto* eval_cmd = app.add_subcommand("eval", "Mean IOU, pixel accuracy and trimap curves");
  eval_cmd->add_option("manifest,--manifest", eval_manifest, "Manifest file with ground truth")->required();
  eval_cmd->add_option("--pred-dir", eval_pred_dir, "Read predictions from this directory");
  eval_cmd->add_option("--classes", eval.classes, "Number of classes")->required()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--radii", eval.radii, "Trimap radii")->delimiter(',');
  eval_cmd->add_option("--out", eval_out, "Output directory for CSV reports")->capture_default_str();

  // tune
  TuneOptions tune;
  std::string tune_manifest;
  std::string tune_w1 = "5:1:10", tune_alpha = "50:10:100", tune_beta = "3:1:10";
  std::string tune_normalize = "symmetric";
  std::optional<int> tune_jobs;
  std::string tune_out = "tune.json";
  auto* tune_cmd = app.add_subcommand("tune", "Coarse-to-fine grid search of w1, sigma_alpha, sigma_beta");
  tune_cmd->add_option("manifest,--manifest", tune_manifest, "Manifest file with ground truth")->required();
  tune_cmd->add_option("--classes", tune.classes, "Number of classes")->required()->check(CLI::PositiveNumber);
  tune_cmd->add_option("--w1", tune_w1, "w1 grid start:step:stop")->capture_default_str();
  tune_cmd->add_option("--sigma-alpha", tune_alpha, "sigma_alpha grid")->capture_default_str();
  tune_cmd->add_option("--sigma-beta", tune_beta, "sigma_beta grid")->capture_default_str();
  tune_cmd->add_option("--w2", tune.spec.w2, "Fixed smoothness weight")->capture_default_str();
  tune_cmd->add_option("--sigma-gamma", tune.spec.sigma_gamma, "Fixed smoothness bandwidth")->capture_default_str();
  tune_cmd->add_option("--rounds", tune.spec.refine_rounds, "Rounds including the coarse grid")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--subset", tune.spec.subset_size, "Use the first N entries (0 = all)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  tune_cmd->add_option("--iterations", tune.spec.inference.iterations, "Mean-field iterations")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  tune_cmd->add_option("--upsample", tune.upsample, "Bilinear upsampling factor")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--normalize", tune_normalize, "Filter normalization")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "symmetric"}));
  tune_cmd->add_option("--jobs", tune_jobs, "Parallel candidates (default: CRF_REFINE_JOBS or cores)");
  tune_cmd->add_option("--out", tune_out, "Result JSON path")->capture_default_str();

  // rf-calc
  RfCalcOptions rf;
  std::optional<std::string> rf_layers;
  auto* rf_cmd = app.add_subcommand("rf-calc", "Receptive field of a preset or a layer list");
  rf_cmd->add_option("--preset", rf.preset, "Preset name, or 'all'");
  rf_cmd->add_option("--layers", rf_layers, "File with one k,stride,input_stride triple per line");
  rf_cmd->add_option("--canvas", rf.canvas, "Canvas side for the padded field of view")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  // filter-bench
  FilterBenchOptions bench;
  auto* bench_cmd = app.add_subcommand("filter-bench", "Time exact and permutohedral Gaussian filtering");
  bench_cmd->add_option("--n", bench.n, "Points")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--dim", bench.dim, "Feature dimension")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--trials", bench.trials, "Timed repetitions")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--values", bench.values, "Value channels")->capture_default_str()->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "RNG seed")->capture_default_str();

  // make-synthetic
  SyntheticOptions synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("make-synthetic", "Generate a noisy synthetic benchmark");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--size", synth.size, "Image side (pixels)")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--classes", synth.classes, "Number of classes")->capture_default_str()->check(CLI::Range(2, 255));
  synth_cmd->add_option("--noise", synth.noise, "Score-cell flip probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--count", synth.count, "Benchmark samples")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--heldout", synth.heldout, "Held-out tuning samples")->capture_default_str()->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--stride", synth.stride, "Score map output stride")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--logit-scale", synth.logit_scale, "Logit of the scored class")->capture_default_str();
  synth_cmd->add_option("--color-noise", synth.color_noise, "RGB noise std-dev")->capture_default_str()->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*refine_cmd) {
      refine.manifest = refine_manifest;
      if (refine_out_dir) refine.output_dir = *refine_out_dir;
      if (refine_params_file) refine.params = load_params_json(*refine_params_file);
      if (w1) refine.params.w1 = *w1;
      if (w2) refine.params.w2 = *w2;
      if (sigma_alpha) refine.params.sigma_alpha = *sigma_alpha;
      if (sigma_beta) refine.params.sigma_beta = *sigma_beta;
      if (sigma_gamma) refine.params.sigma_gamma = *sigma_gamma;
      refine.inference.normalize = parse_normalize(refine_normalize);
      refine.jobs = resolve_jobs(refine_jobs);
      return cmd_refine(refine, std::cout, std::cerr);
    }
    if (*eval_cmd) {
      eval.manifest = eval_manifest;
      if (eval_pred_dir) eval.pred_dir = *eval_pred_dir;
      eval.out_dir = eval_out;
      return cmd_eval(eval, std::cout, std::cerr);
    }
    if (*tune_cmd) {
      tune.manifest = tune_manifest;
      tune.spec.w1 = parse_axis(tune_w1, "--w1");
      tune.spec.sigma_alpha = parse_axis(tune_alpha, "--sigma-alpha");
      tune.spec.sigma_beta = parse_axis(tune_beta, "--sigma-beta");
      tune.spec.inference.normalize = parse_normalize(tune_normalize);
      tune.spec.jobs = resolve_jobs(tune_jobs);
      tune.out = tune_out;
      return cmd_tune(tune, std::cout, std::cerr);
    }
    if (*rf_cmd) {
      if (rf_layers) rf.layers = *rf_layers;
      return cmd_rf_calc(rf, std::cout, std::cerr);
    }
    if (*bench_cmd) return cmd_filter_bench(bench, std::cout, std::cerr);
    if (*synth_cmd) return cmd_make_synthetic(synth, synth_out, std::cout, std::cerr);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

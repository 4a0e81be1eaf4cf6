#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "crfrefine/atrous.hpp"
#include "crfrefine/eval.hpp"
#include "crfrefine/filtering.hpp"
#include "crfrefine/io.hpp"
#include "manifest.hpp"

namespace crfrefine::cli {

using json = nlohmann::ordered_json;

namespace {

// Runs fn(i) for i in [0, count) on up to `jobs` threads. Returns one message
// per failed index, empty on success.
std::vector<std::string> parallel_for(std::size_t count, int jobs,
                                      const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> failures(count);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (const std::exception& e) {
      failures[i] = e.what();
      if (failures[i].empty()) failures[i] = "unknown error";
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) run(i);
    return failures;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < workers; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) run(i);
    });
  }
  for (auto& thread : threads) thread.join();
  return failures;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

fs::path prediction_path(const ManifestEntry& entry, const std::optional<fs::path>& dir) {
  return dir ? *dir / entry.output.filename() : entry.output;
}

std::string snapshot_name(const fs::path& output, const char* kind, std::size_t t) {
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "_%s_t%02zu.crft", kind, t);
  return output.stem().string() + suffix;
}

json params_json(const KernelParams& p) {
  return json{{"w1", round6(p.w1)},
              {"w2", round6(p.w2)},
              {"sigma_alpha", round6(p.sigma_alpha)},
              {"sigma_beta", round6(p.sigma_beta)},
              {"sigma_gamma", round6(p.sigma_gamma)}};
}

int report_failures(const std::vector<ManifestEntry>& entries,
                    const std::vector<std::string>& failures, std::ostream& err) {
  int failed = 0;
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (failures[i].empty()) continue;
    ++failed;
    err << "entry " << (i + 1) << " (" << entries[i].score.string() << "): " << failures[i] << '\n';
  }
  return failed;
}

}  // namespace

std::string fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

int resolve_jobs(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw std::invalid_argument("--jobs must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("CRF_REFINE_JOBS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) {
      throw std::invalid_argument(std::string("CRF_REFINE_JOBS must be a positive integer, got '") +
                                  env + "'");
    }
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Tensor3 prepare_scores(const Tensor3& coarse, const Image& image, int factor) {
  const Tensor3 up = bilinear_upsample(coarse, factor);
  if (up.height() < image.height() || up.width() < image.width()) {
    throw std::invalid_argument("scores " + std::to_string(coarse.height()) + "x" +
                                std::to_string(coarse.width()) + " upsampled x" +
                                std::to_string(factor) + " do not cover image " +
                                std::to_string(image.height()) + "x" +
                                std::to_string(image.width()));
  }
  if (up.height() == image.height() && up.width() == image.width()) return up;
  Tensor3 cropped(image.height(), image.width(), up.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      auto src = up.pixel(static_cast<std::size_t>(y) * up.width() + x);
      std::copy(src.begin(), src.end(),
                cropped.pixel(static_cast<std::size_t>(y) * image.width() + x).begin());
    }
  }
  return cropped;
}

KernelParams load_params_json(const fs::path& path) {
  const json doc = json::parse(read_file(path));
  const json& best = doc.contains("best") ? doc.at("best") : doc;
  KernelParams p;
  p.w1 = best.at("w1").get<double>();
  p.w2 = best.at("w2").get<double>();
  p.sigma_alpha = best.at("sigma_alpha").get<double>();
  p.sigma_beta = best.at("sigma_beta").get<double>();
  p.sigma_gamma = best.at("sigma_gamma").get<double>();
  p.validate();
  return p;
}

int cmd_refine(const RefineOptions& options, std::ostream& out, std::ostream& err) {
  options.params.validate();
  const auto entries = load_manifest(options.manifest);
  if (options.output_dir) fs::create_directories(*options.output_dir);
  InferenceConfig config = options.inference;
  config.record_trajectory = options.snapshots;

  const auto failures = parallel_for(entries.size(), options.jobs, [&](std::size_t i) {
    const ManifestEntry& entry = entries[i];
    const Image image = load_ppm(entry.image);
    const Tensor3 scores = prepare_scores(load_tensor(entry.score), image, options.upsample);
    const InferenceResult result = inference(scores, image, options.params, config);
    const fs::path target = prediction_path(entry, options.output_dir);
    if (!target.parent_path().empty()) fs::create_directories(target.parent_path());
    save_pgm(target, result.labels);
    for (std::size_t t = 0; t < result.trajectory.size(); ++t) {
      const fs::path dir = target.parent_path();
      save_tensor(dir / snapshot_name(target, "q", t), result.trajectory[t].tensor());
      save_tensor(dir / snapshot_name(target, "logq", t), log_field(result.trajectory[t]));
    }
  });
  const int failed = report_failures(entries, failures, err);
  out << "refined " << (entries.size() - failed) << "/" << entries.size() << " entries\n";
  return failed == 0 ? 0 : 1;
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  if (options.classes < 1) throw std::invalid_argument("--classes must be >= 1");
  for (int r : options.radii) {
    if (r < 1) throw std::invalid_argument("trimap radii must be >= 1");
  }
  const auto entries = load_manifest(options.manifest);
  std::vector<LabelMap> preds(entries.size());
  std::vector<LabelMap> gts(entries.size());
  std::vector<std::string> failures(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      if (!entries[i].gt) throw std::runtime_error("no ground truth in manifest");
      gts[i] = load_pgm(*entries[i].gt, options.classes);
      preds[i] = load_pgm(prediction_path(entries[i], options.pred_dir), options.classes);
      if (!preds[i].same_shape(gts[i])) throw std::runtime_error("prediction and gt sizes differ");
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  const int failed = report_failures(entries, failures, err);
  if (failed > 0) {
    err << failed << " of " << entries.size() << " entries could not be evaluated\n";
    return 1;
  }

  ConfusionMatrix cm(options.classes);
  for (std::size_t i = 0; i < entries.size(); ++i) accumulate(preds[i], gts[i], cm);
  const IouReport iou = mean_iou(cm);

  fs::create_directories(options.out_dir);
  std::string table = "class,iou\n";
  for (int c = 0; c < options.classes; ++c) {
    table += std::to_string(c) + ',' +
             (iou.per_class[c] ? fixed6(*iou.per_class[c]) : std::string("undefined")) + '\n';
  }
  table += "mean," + (iou.mean ? fixed6(*iou.mean) : std::string("undefined")) + '\n';
  write_file_atomic(options.out_dir / "class_iou.csv", table);

  out << "mean_iou," << (iou.mean ? fixed6(*iou.mean) : std::string("undefined")) << '\n';
  out << "pixel_acc," << (cm.total() > 0 ? fixed6(pixel_accuracy(cm)) : std::string("undefined"))
      << '\n';

  if (!options.radii.empty()) {
    const auto rows = trimap_curve(preds, gts, options.radii, options.classes);
    std::string curve = "radius,mean_iou,pixel_acc\n";
    for (const auto& row : rows) {
      curve += std::to_string(row.radius) + ',' +
               (row.mean_iou ? fixed6(*row.mean_iou) : std::string("undefined")) + ',' +
               (row.pixel_accuracy ? fixed6(*row.pixel_accuracy) : std::string("undefined")) +
               '\n';
    }
    write_file_atomic(options.out_dir / "trimap.csv", curve);
  }
  return 0;
}

int cmd_tune(const TuneOptions& options, std::ostream& out, std::ostream& err) {
  if (options.classes < 1) throw std::invalid_argument("--classes must be >= 1");
  const auto entries = load_manifest(options.manifest);
  std::vector<TuneSample> samples(entries.size());
  std::vector<std::string> failures(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    try {
      if (!entries[i].gt) throw std::runtime_error("no ground truth in manifest");
      samples[i].image = load_ppm(entries[i].image);
      samples[i].scores =
          prepare_scores(load_tensor(entries[i].score), samples[i].image, options.upsample);
      samples[i].gt = load_pgm(*entries[i].gt, options.classes);
      if (samples[i].gt.height() != samples[i].image.height() ||
          samples[i].gt.width() != samples[i].image.width()) {
        throw std::runtime_error("gt and image sizes differ");
      }
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  }
  if (report_failures(entries, failures, err) > 0) return 1;

  const TuneResult result = grid_search(samples, options.spec);
  json doc;
  doc["best"] = params_json(result.best);
  doc["score"] = round6(result.score);
  doc["iterations"] = options.spec.inference.iterations;
  doc["rounds"] = options.spec.refine_rounds;
  json trace = json::array();
  for (const auto& entry : result.trace) {
    trace.push_back(json{{"round", entry.round},
                         {"w1", round6(entry.params.w1)},
                         {"sigma_alpha", round6(entry.params.sigma_alpha)},
                         {"sigma_beta", round6(entry.params.sigma_beta)},
                         {"score", round6(entry.score)}});
  }
  doc["trace"] = std::move(trace);
  if (!options.out.parent_path().empty()) fs::create_directories(options.out.parent_path());
  write_file_atomic(options.out, doc.dump(2) + '\n');
  out << "evaluated " << result.trace.size() << " candidates; best w1=" << fixed6(result.best.w1)
      << " sigma_alpha=" << fixed6(result.best.sigma_alpha)
      << " sigma_beta=" << fixed6(result.best.sigma_beta) << " mean_iou=" << fixed6(result.score)
      << '\n';
  return 0;
}

int cmd_rf_calc(const RfCalcOptions& options, std::ostream& out, std::ostream& err) {
  if (options.preset.has_value() == options.layers.has_value()) {
    err << "rf-calc: give exactly one of --preset or --layers\n";
    return 2;
  }
  out << "preset,receptive_field,jump,padded_field_of_view\n";
  auto row = [&out](const std::string& name, const std::vector<LayerSpec>& layers, long long canvas) {
    const ReceptiveField rf = receptive_field(layers);
    out << name << ',' << rf.size << ',' << rf.jump << ',' << padded_field_of_view(layers, canvas)
        << '\n';
  };
  if (options.layers) {
    row(options.layers->filename().string(), parse_layer_list(read_file(*options.layers)),
        options.canvas);
    return 0;
  }
  if (*options.preset == "all") {
    for (const auto& preset : network_presets()) row(preset.name, preset.layers, preset.canvas);
    return 0;
  }
  const auto preset = find_preset(*options.preset);
  if (!preset) {
    err << "rf-calc: unknown preset '" << *options.preset << "'; known:";
    for (const auto& p : network_presets()) err << ' ' << p.name;
    err << '\n';
    return 2;
  }
  row(preset->name, preset->layers, preset->canvas);
  return 0;
}

int cmd_filter_bench(const FilterBenchOptions& options, std::ostream& out, std::ostream& /*err*/) {
  if (options.n < 1 || options.dim < 1 || options.trials < 1 || options.values < 1) {
    throw std::invalid_argument("filter-bench: n, dim, trials and values must be >= 1");
  }
  std::mt19937_64 rng(options.seed);
  // Features span a cube whose diagonal is 20 standard deviations.
  const double side = 20.0 / std::sqrt(static_cast<double>(options.dim));
  std::uniform_real_distribution<float> coord(0.0f, static_cast<float>(side));
  std::uniform_real_distribution<float> value(0.0f, 1.0f);
  FeatureMatrix features(options.n, options.dim);
  for (float& f : features.values()) f = coord(rng);
  ValueMatrix values(options.n, options.values);
  for (float& v : values.values()) v = value(rng);

  using clock = std::chrono::steady_clock;
  auto time_trials = [&](auto&& fn) {
    std::vector<double> ms;
    for (int t = 0; t < options.trials; ++t) {
      const auto start = clock::now();
      fn();
      ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - start).count());
    }
    std::sort(ms.begin(), ms.end());
    auto rank = [&ms](double q) {
      const auto k = static_cast<std::size_t>(std::ceil(q * ms.size()));
      return ms[std::min(ms.size() - 1, k == 0 ? 0 : k - 1)];
    };
    return std::array<double, 3>{rank(0.5), rank(0.9), ms.back()};
  };

  ValueMatrix exact(0, 0);
  ValueMatrix approx(0, 0);
  const auto t_exact = time_trials([&] { exact = gaussian_filter_exact(values, features); });
  const auto t_perm = time_trials([&] { approx = permutohedral_filter(values, features); });

  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < exact.values().size(); ++k) {
    const double d = static_cast<double>(approx.values()[k]) - exact.values()[k];
    num += d * d;
    den += static_cast<double>(exact.values()[k]) * exact.values()[k];
  }
  const double rel = den > 0.0 ? std::sqrt(num / den) : 0.0;

  out << "path,n,dim,trials,p50_ms,p90_ms,max_ms,rel_l2_vs_exact\n";
  auto line = [&](const char* name, const std::array<double, 3>& t, double err_value) {
    out << name << ',' << options.n << ',' << options.dim << ',' << options.trials << ','
        << fixed6(t[0]) << ',' << fixed6(t[1]) << ',' << fixed6(t[2]) << ',' << fixed6(err_value)
        << '\n';
  };
  line("exact", t_exact, 0.0);
  line("permutohedral", t_perm, rel);
  return 0;
}

int cmd_make_synthetic(const SyntheticOptions& options, const fs::path& out_dir, std::ostream& out,
                       std::ostream& /*err*/) {
  write_synthetic_set(options, out_dir);
  out << "wrote " << options.count << " samples to " << (out_dir / "manifest.tsv").string();
  if (options.heldout > 0) {
    out << " and " << options.heldout << " to " << (out_dir / "heldout.tsv").string();
  }
  out << '\n';
  return 0;
}

}  // namespace crfrefine::cli

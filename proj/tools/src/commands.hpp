#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crfrefine/densecrf.hpp"
#include "crfrefine/tune.hpp"
#include "synthetic.hpp"

namespace crfrefine::cli {

namespace fs = std::filesystem;

/// --jobs, else CRF_REFINE_JOBS, else the logical core count.
int resolve_jobs(std::optional<int> flag);

/// Bilinear upsampling by factor, cropped to the image. Throws if the result
/// would not cover the image.
Tensor3 prepare_scores(const Tensor3& coarse, const Image& image, int factor);

/// Reads `best` from a tune result file.
KernelParams load_params_json(const fs::path& path);

struct RefineOptions {
  fs::path manifest;
  std::optional<fs::path> output_dir;  // overrides each entry's directory
  KernelParams params;
  InferenceConfig inference;
  int upsample = 8;
  bool snapshots = false;
  int jobs = 1;
};

struct EvalOptions {
  fs::path manifest;
  std::optional<fs::path> pred_dir;
  int classes = 0;
  std::vector<int> radii;
  fs::path out_dir;
};

struct TuneOptions {
  fs::path manifest;
  int classes = 0;
  int upsample = 8;
  SearchSpec spec;
  fs::path out;
};

struct RfCalcOptions {
  std::optional<std::string> preset;  // "all" lists every preset
  std::optional<fs::path> layers;
  long long canvas = 224;
};

struct FilterBenchOptions {
  int n = 4096;
  int dim = 5;
  int trials = 5;
  int values = 4;
  std::uint64_t seed = 1;
};

int cmd_refine(const RefineOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_tune(const TuneOptions& options, std::ostream& out, std::ostream& err);
int cmd_rf_calc(const RfCalcOptions& options, std::ostream& out, std::ostream& err);
int cmd_filter_bench(const FilterBenchOptions& options, std::ostream& out, std::ostream& err);
int cmd_make_synthetic(const SyntheticOptions& options, const fs::path& out_dir, std::ostream& out,
                       std::ostream& err);

/// Fixed six-decimal formatting used by every report.
std::string fixed6(double value);

}  // namespace crfrefine::cli

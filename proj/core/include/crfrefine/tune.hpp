#pragma once

#include <span>
#include <vector>

#include "crfrefine/densecrf.hpp"
#include "crfrefine/tensor.hpp"

namespace crfrefine {

/// Inclusive start:step:stop grid, MATLAB style.
struct GridAxis {
  double start = 0.0;
  double step = 1.0;
  double stop = 0.0;

  /// Throws std::invalid_argument when step <= 0 or stop < start.
  std::vector<double> values() const;
};

struct SearchSpec {
  GridAxis w1{5.0, 1.0, 10.0};
  GridAxis sigma_alpha{50.0, 10.0, 100.0};
  GridAxis sigma_beta{3.0, 1.0, 10.0};
  double w2 = 3.0;
  double sigma_gamma = 3.0;
  // Total rounds; the first is the coarse grid, each later one halves the steps
  // around the incumbent.
  int refine_rounds = 2;
  // Leading dataset entries to use; 0 means all.
  int subset_size = 0;
  InferenceConfig inference{};
  // Worker threads for candidate evaluation; results do not depend on it.
  int jobs = 1;
};

/// Scores already at image resolution.
struct TuneSample {
  Tensor3 scores;
  Image image;
  LabelMap gt;
};

struct TraceEntry {
  KernelParams params;
  double score = 0.0;
  int round = 1;
};

struct TuneResult {
  KernelParams best;
  double score = 0.0;
  std::vector<TraceEntry> trace;  // grid order, each candidate once
};

/// Mean IOU of the pooled confusion matrix over all samples after inference
/// with the given params. Absent classes are skipped; 0 if nothing counts.
double evaluate_params(std::span<const TuneSample> samples, const KernelParams& params,
                       const InferenceConfig& config);

/// Coarse-to-fine grid search maximizing evaluate_params. Ties go to the
/// lexicographically smallest (w1, sigma_alpha, sigma_beta).
TuneResult grid_search(std::span<const TuneSample> dataset, const SearchSpec& spec);

}  // namespace crfrefine

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "crfrefine/tensor.hpp"

namespace crfrefine::cli {

struct SyntheticOptions {
  std::uint64_t seed = 7;
  int size = 96;
  int classes = 4;
  double noise = 0.3;  // probability of flipping a coarse score cell to another class
  int count = 20;
  int heldout = 5;
  int stride = 8;  // score maps are size/stride on a side
  double logit_scale = 2.0;
  double color_noise = 25.0;  // std-dev of per-pixel RGB noise
};

struct SyntheticSample {
  Tensor3 scores;
  Image image;
  LabelMap gt;
};

/// Sample `index` of the set; depends only on (options, index).
/// Ground truth is a warped Voronoi partition containing every class, the image
/// paints each class a distinct color, and the scores are one-hot logits of the
/// ground truth sampled at coarse cell centers with cells flipped at the noise
/// rate.
SyntheticSample make_synthetic_sample(const SyntheticOptions& options, int index);

/// Writes count benchmark samples listed in manifest.tsv and heldout samples
/// listed in heldout.tsv, under out_dir.
void write_synthetic_set(const SyntheticOptions& options, const std::filesystem::path& out_dir);

}  // namespace crfrefine::cli

#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "crfrefine/io.hpp"
#include "manifest.hpp"

namespace crfrefine::cli {

namespace fs = std::filesystem;

namespace {

std::array<std::uint8_t, 3> class_color(int c, int classes) {
  // Evenly spaced hues; odd classes darker so neighbours in hue still differ.
  const double hue = 6.0 * c / classes;
  const double value = (c % 2 == 0) ? 0.9 : 0.6;
  const double sat = 0.75;
  const int sector = static_cast<int>(std::floor(hue)) % 6;
  const double f = hue - std::floor(hue);
  const double p = value * (1 - sat);
  const double q = value * (1 - sat * f);
  const double t = value * (1 - sat * (1 - f));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = value; g = t; b = p; break;
    case 1: r = q; g = value; b = p; break;
    case 2: r = p; g = value; b = t; break;
    case 3: r = p; g = q; b = value; break;
    case 4: r = t; g = p; b = value; break;
    default: r = value; g = p; b = q; break;
  }
  auto to_byte = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
  return {to_byte(r), to_byte(g), to_byte(b)};
}

LabelMap warped_voronoi(std::mt19937_64& rng, int size, int classes) {
  std::uniform_real_distribution<double> pos(0.0, size);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<int> any_class(0, classes - 1);
  const int sites = classes + 2;
  const double amplitude = size / 16.0;
  const double period = size / 2.0;

  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<double> sx(sites), sy(sites);
    std::vector<int> label(sites);
    for (int k = 0; k < sites; ++k) {
      sx[k] = pos(rng);
      sy[k] = pos(rng);
      label[k] = k < classes ? k : any_class(rng);
    }
    const double phx = phase(rng);
    const double phy = phase(rng);

    LabelMap gt(size, size, classes);
    std::vector<int> seen(classes, 0);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double wx = x + amplitude * std::sin(2.0 * std::numbers::pi * y / period + phx);
        const double wy = y + amplitude * std::sin(2.0 * std::numbers::pi * x / period + phy);
        int best = 0;
        double best_d = INFINITY;
        for (int k = 0; k < sites; ++k) {
          const double d = (wx - sx[k]) * (wx - sx[k]) + (wy - sy[k]) * (wy - sy[k]);
          if (d < best_d) {
            best_d = d;
            best = k;
          }
        }
        gt.set(y, x, static_cast<std::uint16_t>(label[best]));
        ++seen[label[best]];
      }
    }
    // Every class should cover at least a coarse cell's worth of pixels.
    const int min_area = std::max(1, size * size / (16 * classes));
    if (std::all_of(seen.begin(), seen.end(), [&](int n) { return n >= min_area; })) return gt;
  }
  throw std::runtime_error("make-synthetic: could not place every class; try a larger --size");
}

}  // namespace

SyntheticSample make_synthetic_sample(const SyntheticOptions& options, int index) {
  if (options.size < 1 || options.classes < 2 || options.stride < 1) {
    throw std::invalid_argument("make-synthetic: need size >= 1, classes >= 2, stride >= 1");
  }
  if (options.classes > 255) throw std::invalid_argument("make-synthetic: at most 255 classes");
  if (!(options.noise >= 0.0 && options.noise <= 1.0)) {
    throw std::invalid_argument("make-synthetic: noise must lie in [0, 1]");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                    static_cast<std::uint32_t>(options.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);

  const int size = options.size;
  const int classes = options.classes;
  SyntheticSample sample;
  sample.gt = warped_voronoi(rng, size, classes);

  sample.image = Image(size, size);
  std::normal_distribution<double> jitter(0.0, options.color_noise);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const auto color = class_color(sample.gt.at(y, x), classes);
      for (int c = 0; c < 3; ++c) {
        const double v = color[c] + (options.color_noise > 0.0 ? jitter(rng) : 0.0);
        sample.image.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }

  const int coarse = (size + options.stride - 1) / options.stride;
  sample.scores = Tensor3(coarse, coarse, classes);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> other(1, classes - 1);
  for (int cy = 0; cy < coarse; ++cy) {
    for (int cx = 0; cx < coarse; ++cx) {
      const int y = std::min(cy * options.stride + options.stride / 2, size - 1);
      const int x = std::min(cx * options.stride + options.stride / 2, size - 1);
      int label = sample.gt.at(y, x);
      // Draw both variates every cell so the stream does not depend on noise.
      const double u = coin(rng);
      const int shift = other(rng);
      if (u < options.noise) label = (label + shift) % classes;
      sample.scores.at(cy, cx, label) = static_cast<float>(options.logit_scale);
    }
  }
  return sample;
}

void write_synthetic_set(const SyntheticOptions& options, const fs::path& out_dir) {
  if (options.count < 1 || options.heldout < 0) {
    throw std::invalid_argument("make-synthetic: need count >= 1 and heldout >= 0");
  }
  fs::create_directories(out_dir / "scores");
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "gt");

  std::vector<ManifestEntry> bench;
  std::vector<ManifestEntry> held;
  for (int i = 0; i < options.count + options.heldout; ++i) {
    const bool is_bench = i < options.count;
    char name[32];
    std::snprintf(name, sizeof name, "%s_%03d", is_bench ? "img" : "val",
                  is_bench ? i : i - options.count);
    const SyntheticSample sample = make_synthetic_sample(options, i);
    const fs::path score = fs::path("scores") / (std::string(name) + ".crft");
    const fs::path image = fs::path("images") / (std::string(name) + ".ppm");
    const fs::path gt = fs::path("gt") / (std::string(name) + ".pgm");
    save_tensor(out_dir / score, sample.scores);
    save_ppm(out_dir / image, sample.image);
    save_pgm(out_dir / gt, sample.gt);
    ManifestEntry entry{score, image, gt, fs::path("refined") / (std::string(name) + ".pgm")};
    (is_bench ? bench : held).push_back(std::move(entry));
  }
  write_file_atomic(out_dir / "manifest.tsv", format_manifest(bench));
  if (!held.empty()) write_file_atomic(out_dir / "heldout.tsv", format_manifest(held));
}

}  // namespace crfrefine::cli

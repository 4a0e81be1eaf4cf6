#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "crfrefine/tensor.hpp"

namespace crfrefine {

/// Pixel tallies, rows = ground truth, columns = prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return num_classes_; }
  std::uint64_t at(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * num_classes_ + pred];
  }
  std::uint64_t& at(int gt, int pred) {
    return counts_[static_cast<std::size_t>(gt) * num_classes_ + pred];
  }
  std::uint64_t total() const;
  std::uint64_t trace() const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  int num_classes_;
  std::vector<std::uint64_t> counts_;
};

/// Pixels within `radius` of a boundary or void annotation.
struct TrimapMask {
  int height = 0;
  int width = 0;
  int radius = 1;
  std::vector<std::uint8_t> inside_band;

  bool inside(int y, int x) const {
    return inside_band[static_cast<std::size_t>(y) * width + x] != 0;
  }
  std::size_t count() const;
};

/// Adds every pixel whose ground truth is not void (and, with a mask, lies in
/// the band). Throws std::out_of_range for labels >= cm.num_classes() and
/// std::invalid_argument for shape mismatches or void predictions on labeled
/// pixels.
void accumulate(const LabelMap& pred, const LabelMap& gt, ConfusionMatrix& cm,
                const TrimapMask* mask = nullptr);

struct IouReport {
  // nullopt where TP + FP + FN == 0; such classes are left out of the mean.
  std::vector<std::optional<double>> per_class;
  // nullopt when no class has a nonzero denominator.
  std::optional<double> mean;
};

IouReport mean_iou(const ConfusionMatrix& cm);

/// trace / total. Throws std::domain_error on an empty matrix.
double pixel_accuracy(const ConfusionMatrix& cm);

/// Band of Chebyshev radius around the seeds: void pixels when the image has
/// any, otherwise the crack between differently labeled 4-neighbours. Pixels
/// touching the crack sit half a pixel from it and count as distance 1, so a
/// straight boundary yields a band 2*radius columns wide.
TrimapMask trimap_band(const LabelMap& gt, int radius);

struct TrimapRow {
  int radius = 0;
  std::uint64_t pixels = 0;
  std::optional<double> mean_iou;        // nullopt when the band is empty
  std::optional<double> pixel_accuracy;  // nullopt when the band is empty
};

/// One row per radius, pooling all image pairs into a single matrix per radius.
std::vector<TrimapRow> trimap_curve(std::span<const LabelMap> preds, std::span<const LabelMap> gts,
                                    std::span<const int> radii, int num_classes);

std::vector<TrimapRow> trimap_curve(const LabelMap& pred, const LabelMap& gt,
                                    std::span<const int> radii, int num_classes);

}  // namespace crfrefine

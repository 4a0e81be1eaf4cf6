#include "crfrefine/eval.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace crfrefine {

ConfusionMatrix::ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
  if (num_classes < 1) throw std::invalid_argument("ConfusionMatrix: num_classes must be >= 1");
  counts_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t sum = 0;
  for (int c = 0; c < num_classes_; ++c) sum += at(c, c);
  return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) {
    throw std::invalid_argument("ConfusionMatrix: class counts differ");
  }
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  return *this;
}

std::size_t TrimapMask::count() const {
  return static_cast<std::size_t>(std::count(inside_band.begin(), inside_band.end(), 1));
}

void accumulate(const LabelMap& pred, const LabelMap& gt, ConfusionMatrix& cm,
                const TrimapMask* mask) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("accumulate: pred and gt differ in size");
  if (mask != nullptr && (mask->height != gt.height() || mask->width != gt.width())) {
    throw std::invalid_argument("accumulate: mask does not match gt");
  }
  const int classes = cm.num_classes();
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const auto g = gt.at(y, x);
      if (gt.is_void(g)) continue;
      if (mask != nullptr && !mask->inside(y, x)) continue;
      const auto p = pred.at(y, x);
      if (pred.is_void(p)) {
        throw std::invalid_argument("accumulate: void prediction at labeled pixel (" +
                                    std::to_string(y) + ", " + std::to_string(x) + ")");
      }
      if (g >= classes || p >= classes) {
        throw std::out_of_range("accumulate: label " + std::to_string(std::max(g, p)) +
                                " outside " + std::to_string(classes) + " classes");
      }
      ++cm.at(g, p);
    }
  }
}

IouReport mean_iou(const ConfusionMatrix& cm) {
  const int classes = cm.num_classes();
  IouReport report;
  report.per_class.resize(classes);
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < classes; ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (int k = 0; k < classes; ++k) {
      row += cm.at(c, k);
      col += cm.at(k, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t denom = row + col - tp;
    if (denom == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(denom);
    report.per_class[c] = iou;
    sum += iou;
    ++counted;
  }
  if (counted > 0) report.mean = sum / counted;
  return report;
}

double pixel_accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw std::domain_error("pixel_accuracy: no pixels counted");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

TrimapMask trimap_band(const LabelMap& gt, int radius) {
  if (radius < 1) throw std::invalid_argument("trimap_band: radius must be >= 1");
  const int h = gt.height();
  const int w = gt.width();
  TrimapMask mask{h, w, radius, std::vector<std::uint8_t>(gt.pixels(), 0)};
  constexpr int kUnset = std::numeric_limits<int>::max();
  std::vector<int> level(gt.pixels(), kUnset);
  std::deque<int> queue;

  auto idx = [w](int y, int x) { return y * w + x; };
  if (gt.has_void()) {
    for (int i = 0; i < h * w; ++i) {
      if (gt.is_void(gt.labels()[i])) {
        level[i] = 0;
        queue.push_back(i);
      }
    }
  } else {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto label = gt.at(y, x);
        const bool boundary = (x > 0 && gt.at(y, x - 1) != label) ||
                              (x + 1 < w && gt.at(y, x + 1) != label) ||
                              (y > 0 && gt.at(y - 1, x) != label) ||
                              (y + 1 < h && gt.at(y + 1, x) != label);
        if (boundary) {
          level[idx(y, x)] = 1;
          queue.push_back(idx(y, x));
        }
      }
    }
  }

  // All seeds share one level, so plain BFS yields Chebyshev distances.
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    if (level[i] >= radius) continue;
    const int y = i / w;
    const int x = i % w;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int ny = y + dy;
        const int nx = x + dx;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const int j = idx(ny, nx);
        if (level[j] != kUnset) continue;
        level[j] = level[i] + 1;
        queue.push_back(j);
      }
    }
  }
  for (std::size_t i = 0; i < level.size(); ++i) {
    mask.inside_band[i] = level[i] <= radius ? 1 : 0;
  }
  return mask;
}

std::vector<TrimapRow> trimap_curve(std::span<const LabelMap> preds, std::span<const LabelMap> gts,
                                    std::span<const int> radii, int num_classes) {
  if (preds.size() != gts.size()) {
    throw std::invalid_argument("trimap_curve: prediction and ground-truth counts differ");
  }
  std::vector<TrimapRow> rows;
  rows.reserve(radii.size());
  for (int radius : radii) {
    ConfusionMatrix cm(num_classes);
    for (std::size_t k = 0; k < gts.size(); ++k) {
      const TrimapMask mask = trimap_band(gts[k], radius);
      accumulate(preds[k], gts[k], cm, &mask);
    }
    TrimapRow row;
    row.radius = radius;
    row.pixels = cm.total();
    if (row.pixels > 0) {
      row.mean_iou = mean_iou(cm).mean;
      row.pixel_accuracy = pixel_accuracy(cm);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<TrimapRow> trimap_curve(const LabelMap& pred, const LabelMap& gt,
                                    std::span<const int> radii, int num_classes) {
  return trimap_curve(std::span<const LabelMap>(&pred, 1), std::span<const LabelMap>(&gt, 1),
                      radii, num_classes);
}

}  // namespace crfrefine

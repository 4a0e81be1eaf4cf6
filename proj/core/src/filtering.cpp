#include "crfrefine/filtering.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crfrefine {

RowMatrix::RowMatrix(int rows, int cols, float fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("RowMatrix: negative dimension");
  values_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

RowMatrix::RowMatrix(int rows, int cols, std::vector<float> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows < 0 || cols < 0) throw std::invalid_argument("RowMatrix: negative dimension");
  if (values_.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("RowMatrix: value count does not match dimensions");
  }
}

FeatureMatrix bilateral_features(const Image& image, float sigma_alpha, float sigma_beta) {
  if (!(sigma_alpha > 0.0f) || !(sigma_beta > 0.0f)) {
    throw std::invalid_argument("bilateral_features: sigmas must be > 0");
  }
  FeatureMatrix features(static_cast<int>(image.pixels()), 5);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      auto row = features.row(y * image.width() + x);
      row[0] = static_cast<float>(x) / sigma_alpha;
      row[1] = static_cast<float>(y) / sigma_alpha;
      for (int c = 0; c < 3; ++c) row[2 + c] = static_cast<float>(image.at(y, x, c)) / sigma_beta;
    }
  }
  return features;
}

FeatureMatrix spatial_features(int height, int width, float sigma_gamma) {
  if (!(sigma_gamma > 0.0f)) throw std::invalid_argument("spatial_features: sigma must be > 0");
  if (height < 0 || width < 0) throw std::invalid_argument("spatial_features: negative size");
  FeatureMatrix features(height * width, 2);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      auto row = features.row(y * width + x);
      row[0] = static_cast<float>(x) / sigma_gamma;
      row[1] = static_cast<float>(y) / sigma_gamma;
    }
  }
  return features;
}

void GaussianFilter::compute_row_sums() {
  std::vector<float> ones(static_cast<std::size_t>(n_points()), 1.0f);
  row_sums_.assign(ones.size(), 0.0f);
  apply_raw(ones, 1, row_sums_);
}

ValueMatrix GaussianFilter::apply(const ValueMatrix& values, NormalizeMode mode) const {
  if (values.n_points() != n_points()) {
    throw std::invalid_argument("GaussianFilter: " + std::to_string(values.n_points()) +
                                " value rows for " + std::to_string(n_points()) + " points");
  }
  ValueMatrix out(values.n_points(), values.n_values());
  apply_raw(values.values(), values.n_values(), out.values());
  if (mode == NormalizeMode::kSymmetric) {
    for (int i = 0; i < out.n_points(); ++i) {
      const float inv = 1.0f / row_sums_[i];
      for (float& v : out.row(i)) v *= inv;
    }
  }
  return out;
}

ExactGaussianFilter::ExactGaussianFilter(FeatureMatrix features) : features_(std::move(features)) {
  if (features_.dim() < 1) throw std::invalid_argument("ExactGaussianFilter: dim must be >= 1");
  compute_row_sums();
}

void ExactGaussianFilter::apply_raw(std::span<const float> values, int n_values,
                                    std::span<float> out) const {
  const int n = features_.n_points();
  const int d = features_.dim();
  std::vector<double> acc(n_values);
  for (int i = 0; i < n; ++i) {
    auto fi = features_.row(i);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      auto fj = features_.row(j);
      double dist2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double diff = static_cast<double>(fi[k]) - fj[k];
        dist2 += diff * diff;
      }
      const double w = std::exp(-0.5 * dist2);
      const float* vj = values.data() + static_cast<std::size_t>(j) * n_values;
      for (int v = 0; v < n_values; ++v) acc[v] += w * vj[v];
    }
    float* oi = out.data() + static_cast<std::size_t>(i) * n_values;
    for (int v = 0; v < n_values; ++v) oi[v] = static_cast<float>(acc[v]);
  }
}

ValueMatrix gaussian_filter_exact(const ValueMatrix& values, const FeatureMatrix& features) {
  if (values.n_points() != features.n_points()) {
    throw std::invalid_argument("gaussian_filter_exact: values and features differ in size");
  }
  return ExactGaussianFilter(features).apply(values, NormalizeMode::kNone);
}

ValueMatrix permutohedral_filter(const ValueMatrix& values, const FeatureMatrix& features,
                                 NormalizeMode mode, LatticeOptions options) {
  if (values.n_points() != features.n_points()) {
    throw std::invalid_argument("permutohedral_filter: values and features differ in size");
  }
  return PermutohedralLattice(features, options).apply(values, mode);
}

}  // namespace crfrefine

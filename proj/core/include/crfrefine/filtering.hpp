#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "crfrefine/tensor.hpp"

namespace crfrefine {

/// n x k row-major matrix of 32-bit reals.
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(int rows, int cols, float fill = 0.0f);
  RowMatrix(int rows, int cols, std::vector<float> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::span<float> row(int i) { return {values_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const float> row(int i) const {
    return {values_.data() + static_cast<std::size_t>(i) * cols_, static_cast<std::size_t>(cols_)};
  }
  float& at(int i, int k) { return values_[static_cast<std::size_t>(i) * cols_ + k]; }
  float at(int i, int k) const { return values_[static_cast<std::size_t>(i) * cols_ + k]; }
  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> values_;
};

/// One feature row per point, already divided by the kernel bandwidth so the
/// kernel is exp(-|f_i - f_j|^2 / 2).
class FeatureMatrix : public RowMatrix {
 public:
  using RowMatrix::RowMatrix;
  int n_points() const { return rows(); }
  int dim() const { return cols(); }
};

/// Values carried by each point through the filter (e.g. one column per label).
class ValueMatrix : public RowMatrix {
 public:
  using RowMatrix::RowMatrix;
  int n_points() const { return rows(); }
  int n_values() const { return cols(); }
};

enum class NormalizeMode {
  kNone,       // raw kernel sums
  kSymmetric,  // divided per point by the filtered all-ones field
};

/// Row i = (x/sa, y/sa, R/sb, G/sb, B/sb).
FeatureMatrix bilateral_features(const Image& image, float sigma_alpha, float sigma_beta);
/// Row i = (x/sg, y/sg).
FeatureMatrix spatial_features(int height, int width, float sigma_gamma);

/// A linear Gaussian filter over a fixed point set. Implementations own all
/// state built from the features; apply() is const and reentrant.
class GaussianFilter {
 public:
  virtual ~GaussianFilter() = default;

  virtual int n_points() const = 0;

  /// out_i = sum_j k(i, j) * v_j including the self term, with values stored
  /// n_points x n_values row-major.
  virtual void apply_raw(std::span<const float> values, int n_values,
                         std::span<float> out) const = 0;

  /// Filtered all-ones field, i.e. per-point kernel mass including self.
  std::span<const float> row_sums() const { return row_sums_; }

  ValueMatrix apply(const ValueMatrix& values, NormalizeMode mode) const;

 protected:
  void compute_row_sums();

 private:
  std::vector<float> row_sums_;
};

/// Exact O(n^2) evaluation. Used as the reference for the lattice.
class ExactGaussianFilter final : public GaussianFilter {
 public:
  explicit ExactGaussianFilter(FeatureMatrix features);
  int n_points() const override { return features_.n_points(); }
  void apply_raw(std::span<const float> values, int n_values,
                 std::span<float> out) const override;

 private:
  FeatureMatrix features_;
};

struct LatticeOptions {
  // Also materialize every vertex the blur can reach from an occupied one, so
  // mass routed through unoccupied vertices is kept. Much larger lattices for
  // sparse or high-contrast features; only raw (unnormalized) sums benefit.
  bool close_blur_support = false;
};

/// Permutohedral-lattice approximation: splat onto the enclosing simplex
/// vertices, blur with [1 2 1]/4 along each of the d+1 lattice axes, slice
/// back with the same barycentric weights.
class PermutohedralLattice final : public GaussianFilter {
 public:
  explicit PermutohedralLattice(const FeatureMatrix& features, LatticeOptions options = {});

  int n_points() const override { return n_points_; }
  int dim() const { return dim_; }
  std::size_t lattice_points() const { return n_vertices_; }

  void apply_raw(std::span<const float> values, int n_values,
                 std::span<float> out) const override;

  /// Lattice spacing relative to the unit-variance construction. Fitted
  /// against exact filtering of uniform point clouds, d = 1..5.
  static double spacing_scale(int dim) { return 1.0 + 0.01 * dim; }
  /// Lattice mass to Gaussian mass: sqrt(d+1) * (4*pi/3)^(d/2) * scale^d.
  static double gain(int dim);

 private:
  int n_points_ = 0;
  int dim_ = 0;
  std::size_t n_vertices_ = 0;
  float gain_ = 1.0f;
  // (d+1) vertex indices and barycentric weights per point.
  std::vector<std::int32_t> offsets_;
  std::vector<float> weights_;
  // Per axis, per vertex: indices of the two neighbours, -1 when absent.
  std::vector<std::int32_t> blur_neighbors_;
};

/// Raw exact filtering: out_i = sum_j exp(-|f_i - f_j|^2 / 2) v_j.
ValueMatrix gaussian_filter_exact(const ValueMatrix& values, const FeatureMatrix& features);

/// One-shot lattice filtering. Build a PermutohedralLattice to reuse it.
ValueMatrix permutohedral_filter(const ValueMatrix& values, const FeatureMatrix& features,
                                 NormalizeMode mode = NormalizeMode::kNone,
                                 LatticeOptions options = {});

}  // namespace crfrefine

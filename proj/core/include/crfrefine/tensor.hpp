#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace crfrefine {

/// Dense H x W x C tensor of 32-bit reals, row-major with channels innermost:
/// index(y, x, c) = (y * W + x) * C + c.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int height, int width, int channels, float fill = 0.0f);
  Tensor3(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<float> pixel(std::size_t i) {
    return {data_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(std::size_t i) const {
    return {data_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }

  bool all_finite() const;
  bool same_shape(const Tensor3& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// 8-bit RGB image, row-major.
class Image {
 public:
  Image() = default;
  Image(int height, int width);
  Image(int height, int width, std::vector<std::uint8_t> rgb);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }

  std::uint8_t& at(int y, int x, int c) { return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::span<const std::uint8_t> rgb() const { return rgb_; }
  std::span<std::uint8_t> rgb() { return rgb_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> rgb_;
};

inline constexpr std::uint16_t kDefaultVoidLabel = 255;

/// Per-pixel class ids. Every non-void entry is below num_classes.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int height, int width, int num_classes, std::uint16_t void_label = kDefaultVoidLabel);
  LabelMap(int height, int width, int num_classes, std::vector<std::uint16_t> labels,
           std::uint16_t void_label = kDefaultVoidLabel);

  int height() const { return height_; }
  int width() const { return width_; }
  int num_classes() const { return num_classes_; }
  std::uint16_t void_label() const { return void_label_; }
  std::size_t pixels() const { return labels_.size(); }

  std::uint16_t at(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  /// Throws std::out_of_range for a label that is neither void nor < num_classes.
  void set(int y, int x, std::uint16_t label);
  bool is_void(std::uint16_t label) const { return label == void_label_; }
  bool has_void() const;

  std::span<const std::uint16_t> labels() const { return labels_; }
  bool same_shape(const LabelMap& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool operator==(const LabelMap& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int num_classes_ = 0;
  std::uint16_t void_label_ = kDefaultVoidLabel;
  std::vector<std::uint16_t> labels_;
};

/// A Tensor3 whose per-pixel channel vectors lie on the probability simplex.
class ProbField {
 public:
  static constexpr double kSimplexTolerance = 1e-5;

  /// Validates non-negativity and per-pixel sums; throws std::invalid_argument.
  static ProbField from(Tensor3 values);
  /// Skips validation. Only for producers that normalize by construction.
  static ProbField trusted(Tensor3 values) { return ProbField(std::move(values)); }

  const Tensor3& tensor() const { return values_; }
  int height() const { return values_.height(); }
  int width() const { return values_.width(); }
  int channels() const { return values_.channels(); }

 private:
  explicit ProbField(Tensor3 values) : values_(std::move(values)) {}
  Tensor3 values_;
};

/// Checks the simplex constraint without throwing.
bool is_simplex(const Tensor3& field, double tolerance = ProbField::kSimplexTolerance);

/// Per-pixel softmax over channels with max subtraction. Throws on non-finite input.
ProbField softmax_channels(const Tensor3& scores);

/// Per-pixel argmax; ties resolve to the lowest channel index.
LabelMap argmax_channels(const Tensor3& field, std::uint16_t void_label = kDefaultVoidLabel);

inline constexpr float kDefaultProbFloor = 1e-8f;

/// Elementwise -log(max(p, floor)).
Tensor3 neg_log(const ProbField& p, float floor = kDefaultProbFloor);

/// Elementwise log(max(p, floor)); exposes mean-field snapshots on score scale.
Tensor3 log_field(const ProbField& p, float floor = kDefaultProbFloor);

}  // namespace crfrefine

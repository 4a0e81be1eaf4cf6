#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crfrefine/tensor.hpp"

namespace crfrefine {

/// Convolution weights, indexed ((dy * kw + dx) * channels_in + ci) * channels_out + co.
class Kernel2D {
 public:
  Kernel2D(int kh, int kw, int channels_in, int channels_out, float fill = 0.0f);
  Kernel2D(int kh, int kw, int channels_in, int channels_out, std::vector<float> weights);

  int kh() const { return kh_; }
  int kw() const { return kw_; }
  int channels_in() const { return channels_in_; }
  int channels_out() const { return channels_out_; }

  std::size_t index(int dy, int dx, int ci, int co) const {
    return ((static_cast<std::size_t>(dy) * kw_ + dx) * channels_in_ + ci) * channels_out_ + co;
  }
  float& at(int dy, int dx, int ci, int co) { return weights_[index(dy, dx, ci, co)]; }
  float at(int dy, int dx, int ci, int co) const { return weights_[index(dy, dx, ci, co)]; }
  std::span<const float> weights() const { return weights_; }
  std::span<float> weights() { return weights_; }

 private:
  int kh_;
  int kw_;
  int channels_in_;
  int channels_out_;
  std::vector<float> weights_;
};

/// Convolution reading taps input_stride apart (the hole algorithm), evaluated
/// every output_stride pixels. Zero padding is centered on the effective
/// kernel extent (k-1)*input_stride+1; output is ceil(H/s_out) x ceil(W/s_out).
Tensor3 atrous_conv2d(const Tensor3& input, const Kernel2D& kernel, int input_stride,
                      int output_stride = 1);

/// Plain dense convolution with the same padding and sizing conventions.
Tensor3 dense_conv2d(const Tensor3& input, const Kernel2D& kernel, int output_stride = 1);

/// Inserts rate-1 zeros between taps: size (k-1)*rate+1 per axis.
Kernel2D zero_stuff_kernel(const Kernel2D& kernel, int rate);

struct LayerSpec {
  int kernel = 1;
  int stride = 1;
  int input_stride = 1;
  bool operator==(const LayerSpec&) const = default;
};

struct ReceptiveField {
  long long size = 1;  // pixels
  long long jump = 1;  // input pixels between adjacent outputs
  bool operator==(const ReceptiveField&) const = default;
};

/// Folds rf += (k-1)*input_stride*jump, jump *= stride from (1, 1).
ReceptiveField receptive_field(std::span<const LayerSpec> layers);

/// Field of view of the topmost layer on a zero-padded canvas: its taps cover
/// kernel cells input_stride*jump wide, clipped to the canvas side.
long long padded_field_of_view(std::span<const LayerSpec> layers, long long canvas);

struct NetworkPreset {
  std::string name;
  std::string description;
  std::vector<LayerSpec> layers;
  long long canvas = 224;  // training crop the padded field of view is clipped to
};

/// VGG-16 in convolutional mode plus the four hole-modified FC6 variants.
const std::vector<NetworkPreset>& network_presets();
std::optional<NetworkPreset> find_preset(std::string_view name);

/// One "k,stride,input_stride" triple per line; blank lines and '#' comments
/// are skipped. Throws std::invalid_argument naming the offending line.
std::vector<LayerSpec> parse_layer_list(std::string_view text);

/// Half-pixel-centered bilinear resize by an integer factor, clamped at the
/// borders.
Tensor3 bilinear_upsample(const Tensor3& input, int factor);

}  // namespace crfrefine

#include "crfrefine/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crfrefine {

namespace {

std::size_t checked_count(int height, int width, int depth, const char* what) {
  if (height < 0 || width < 0 || depth < 0) {
    throw std::invalid_argument(std::string(what) + ": negative dimension");
  }
  return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
         static_cast<std::size_t>(depth);
}

}  // namespace

Tensor3::Tensor3(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels),
      data_(checked_count(height, width, channels, "Tensor3"), fill) {}

Tensor3::Tensor3(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != checked_count(height, width, channels, "Tensor3")) {
    throw std::invalid_argument("Tensor3: data length " + std::to_string(data_.size()) +
                                " does not match " + std::to_string(height) + "x" +
                                std::to_string(width) + "x" + std::to_string(channels));
  }
}

bool Tensor3::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

Image::Image(int height, int width)
    : height_(height), width_(width), rgb_(checked_count(height, width, 3, "Image"), 0) {}

Image::Image(int height, int width, std::vector<std::uint8_t> rgb)
    : height_(height), width_(width), rgb_(std::move(rgb)) {
  if (rgb_.size() != checked_count(height, width, 3, "Image")) {
    throw std::invalid_argument("Image: rgb length does not match dimensions");
  }
}

LabelMap::LabelMap(int height, int width, int num_classes, std::uint16_t void_label)
    : height_(height), width_(width), num_classes_(num_classes), void_label_(void_label),
      labels_(checked_count(height, width, 1, "LabelMap"), 0) {
  if (num_classes < 1) throw std::invalid_argument("LabelMap: num_classes must be >= 1");
}

LabelMap::LabelMap(int height, int width, int num_classes, std::vector<std::uint16_t> labels,
                   std::uint16_t void_label)
    : height_(height), width_(width), num_classes_(num_classes), void_label_(void_label),
      labels_(std::move(labels)) {
  if (num_classes < 1) throw std::invalid_argument("LabelMap: num_classes must be >= 1");
  if (labels_.size() != checked_count(height, width, 1, "LabelMap")) {
    throw std::invalid_argument("LabelMap: label count does not match dimensions");
  }
  for (auto label : labels_) {
    if (label != void_label_ && label >= num_classes_) {
      throw std::out_of_range("LabelMap: label " + std::to_string(label) +
                              " >= num_classes " + std::to_string(num_classes_));
    }
  }
}

void LabelMap::set(int y, int x, std::uint16_t label) {
  if (label != void_label_ && label >= num_classes_) {
    throw std::out_of_range("LabelMap: label " + std::to_string(label) + " >= num_classes " +
                            std::to_string(num_classes_));
  }
  labels_[static_cast<std::size_t>(y) * width_ + x] = label;
}

bool LabelMap::has_void() const {
  return std::find(labels_.begin(), labels_.end(), void_label_) != labels_.end();
}

bool is_simplex(const Tensor3& field, double tolerance) {
  for (std::size_t i = 0; i < field.pixels(); ++i) {
    double sum = 0.0;
    for (float v : field.pixel(i)) {
      if (!std::isfinite(v) || v < 0.0f) return false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > tolerance) return false;
  }
  return true;
}

ProbField ProbField::from(Tensor3 values) {
  if (values.channels() < 1) throw std::invalid_argument("ProbField: no channels");
  if (!is_simplex(values)) {
    throw std::invalid_argument("ProbField: per-pixel values are not a probability simplex");
  }
  return ProbField(std::move(values));
}

ProbField softmax_channels(const Tensor3& scores) {
  if (scores.channels() < 1) throw std::invalid_argument("softmax_channels: no channels");
  if (!scores.all_finite()) {
    throw std::invalid_argument("softmax_channels: input contains NaN or Inf");
  }
  Tensor3 out(scores.height(), scores.width(), scores.channels());
  std::vector<double> tmp(scores.channels());
  for (std::size_t i = 0; i < scores.pixels(); ++i) {
    auto in = scores.pixel(i);
    auto dst = out.pixel(i);
    const float peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      tmp[c] = std::exp(static_cast<double>(in[c]) - peak);
      total += tmp[c];
    }
    for (std::size_t c = 0; c < in.size(); ++c) dst[c] = static_cast<float>(tmp[c] / total);
  }
  return ProbField::trusted(std::move(out));
}

LabelMap argmax_channels(const Tensor3& field, std::uint16_t void_label) {
  if (field.channels() < 1) throw std::invalid_argument("argmax_channels: no channels");
  std::vector<std::uint16_t> labels(field.pixels());
  for (std::size_t i = 0; i < field.pixels(); ++i) {
    auto v = field.pixel(i);
    // max_element returns the first maximum, which gives the low-index tie-break.
    labels[i] = static_cast<std::uint16_t>(std::max_element(v.begin(), v.end()) - v.begin());
  }
  return LabelMap(field.height(), field.width(), field.channels(), std::move(labels), void_label);
}

Tensor3 neg_log(const ProbField& p, float floor) {
  if (!(floor > 0.0f)) throw std::invalid_argument("neg_log: floor must be > 0");
  const Tensor3& in = p.tensor();
  Tensor3 out(in.height(), in.width(), in.channels());
  auto src = in.data();
  auto dst = out.data();
  for (std::size_t k = 0; k < src.size(); ++k) {
    dst[k] = static_cast<float>(-std::log(static_cast<double>(std::max(src[k], floor))));
  }
  return out;
}

Tensor3 log_field(const ProbField& p, float floor) {
  Tensor3 out = neg_log(p, floor);
  for (float& v : out.data()) v = -v;
  return out;
}

}  // namespace crfrefine

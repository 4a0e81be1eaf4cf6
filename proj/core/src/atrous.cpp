#include "crfrefine/atrous.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace crfrefine {

Kernel2D::Kernel2D(int kh, int kw, int channels_in, int channels_out, float fill)
    : kh_(kh), kw_(kw), channels_in_(channels_in), channels_out_(channels_out) {
  if (kh < 1 || kw < 1 || channels_in < 1 || channels_out < 1) {
    throw std::invalid_argument("Kernel2D: all dimensions must be >= 1");
  }
  weights_.assign(static_cast<std::size_t>(kh) * kw * channels_in * channels_out, fill);
}

Kernel2D::Kernel2D(int kh, int kw, int channels_in, int channels_out, std::vector<float> weights)
    : Kernel2D(kh, kw, channels_in, channels_out) {
  if (weights.size() != weights_.size()) {
    throw std::invalid_argument("Kernel2D: weight count does not match dimensions");
  }
  weights_ = std::move(weights);
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Shared loop: tap (dy, dx) reads input row y*s_out + dy*rate - pad_y.
Tensor3 convolve(const Tensor3& input, const Kernel2D& kernel, int rate, int output_stride,
                 const char* what) {
  if (input.channels() != kernel.channels_in()) {
    throw std::invalid_argument(std::string(what) + ": input has " +
                                std::to_string(input.channels()) + " channels, kernel expects " +
                                std::to_string(kernel.channels_in()));
  }
  if (rate < 1 || output_stride < 1) {
    throw std::invalid_argument(std::string(what) + ": strides must be >= 1");
  }
  const int h = input.height();
  const int w = input.width();
  const int cin = kernel.channels_in();
  const int cout = kernel.channels_out();
  const int pad_y = (kernel.kh() - 1) * rate / 2;
  const int pad_x = (kernel.kw() - 1) * rate / 2;
  Tensor3 out(ceil_div(h, output_stride), ceil_div(w, output_stride), cout);
  std::vector<double> acc(cout);
  for (int oy = 0; oy < out.height(); ++oy) {
    for (int ox = 0; ox < out.width(); ++ox) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int dy = 0; dy < kernel.kh(); ++dy) {
        const int iy = oy * output_stride + dy * rate - pad_y;
        if (iy < 0 || iy >= h) continue;
        for (int dx = 0; dx < kernel.kw(); ++dx) {
          const int ix = ox * output_stride + dx * rate - pad_x;
          if (ix < 0 || ix >= w) continue;
          auto src = input.pixel(static_cast<std::size_t>(iy) * w + ix);
          for (int ci = 0; ci < cin; ++ci) {
            const double v = src[ci];
            if (v == 0.0) continue;
            const float* wrow = kernel.weights().data() + kernel.index(dy, dx, ci, 0);
            for (int co = 0; co < cout; ++co) acc[co] += v * wrow[co];
          }
        }
      }
      auto dst = out.pixel(static_cast<std::size_t>(oy) * out.width() + ox);
      for (int co = 0; co < cout; ++co) dst[co] = static_cast<float>(acc[co]);
    }
  }
  return out;
}

}  // namespace

Tensor3 atrous_conv2d(const Tensor3& input, const Kernel2D& kernel, int input_stride,
                      int output_stride) {
  return convolve(input, kernel, input_stride, output_stride, "atrous_conv2d");
}

Tensor3 dense_conv2d(const Tensor3& input, const Kernel2D& kernel, int output_stride) {
  return convolve(input, kernel, 1, output_stride, "dense_conv2d");
}

Kernel2D zero_stuff_kernel(const Kernel2D& kernel, int rate) {
  if (rate < 1) throw std::invalid_argument("zero_stuff_kernel: rate must be >= 1");
  Kernel2D out((kernel.kh() - 1) * rate + 1, (kernel.kw() - 1) * rate + 1, kernel.channels_in(),
               kernel.channels_out());
  for (int dy = 0; dy < kernel.kh(); ++dy) {
    for (int dx = 0; dx < kernel.kw(); ++dx) {
      for (int ci = 0; ci < kernel.channels_in(); ++ci) {
        for (int co = 0; co < kernel.channels_out(); ++co) {
          out.at(dy * rate, dx * rate, ci, co) = kernel.at(dy, dx, ci, co);
        }
      }
    }
  }
  return out;
}

ReceptiveField receptive_field(std::span<const LayerSpec> layers) {
  ReceptiveField rf;
  for (const auto& layer : layers) {
    if (layer.kernel < 1 || layer.stride < 1 || layer.input_stride < 1) {
      throw std::invalid_argument("receptive_field: layer fields must be >= 1");
    }
    rf.size += static_cast<long long>(layer.kernel - 1) * layer.input_stride * rf.jump;
    rf.jump *= layer.stride;
  }
  return rf;
}

long long padded_field_of_view(std::span<const LayerSpec> layers, long long canvas) {
  if (canvas < 1) throw std::invalid_argument("padded_field_of_view: canvas must be >= 1");
  // Topmost spatial layer; 1x1 layers above it do not widen the view.
  std::size_t top = layers.size();
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (layers[i].kernel > 1) {
      top = i;
      break;
    }
  }
  if (top == layers.size()) return 1;
  const ReceptiveField below = receptive_field(layers.first(top));
  const LayerSpec& layer = layers[top];
  const long long span = static_cast<long long>(layer.kernel) * layer.input_stride * below.jump;
  return std::min(span, canvas);
}

namespace {

std::vector<LayerSpec> vgg16_trunk(bool hole) {
  const LayerSpec conv{3, 1, 1};
  const LayerSpec pool{2, 2, 1};
  std::vector<LayerSpec> layers;
  auto block = [&](int convs, LayerSpec c, LayerSpec p) {
    for (int i = 0; i < convs; ++i) layers.push_back(c);
    layers.push_back(p);
  };
  block(2, conv, pool);
  block(2, conv, pool);
  block(3, conv, pool);
  if (!hole) {
    block(3, conv, pool);
    block(3, conv, pool);
  } else {
    // pool4/pool5 keep resolution; conv5 and pool5 read every second sample.
    block(3, conv, LayerSpec{2, 1, 1});
    block(3, LayerSpec{3, 1, 2}, LayerSpec{2, 1, 2});
  }
  return layers;
}

std::vector<NetworkPreset> build_presets() {
  std::vector<NetworkPreset> presets;
  auto with_fc6 = [](std::vector<LayerSpec> trunk, LayerSpec fc6) {
    trunk.push_back(fc6);
    trunk.push_back(LayerSpec{1, 1, 1});  // fc7
    trunk.push_back(LayerSpec{1, 1, 1});  // fc8
    return trunk;
  };
  presets.push_back({"vgg16", "VGG-16, FC layers as convolutions (FC6 7x7), output stride 32",
                     with_fc6(vgg16_trunk(false), {7, 1, 1}), 224});
  presets.push_back({"deeplab-crf-7x7", "hole VGG-16, FC6 7x7 at input stride 4, output stride 8",
                     with_fc6(vgg16_trunk(true), {7, 1, 4}), 224});
  presets.push_back({"deeplab-crf", "hole VGG-16, FC6 decimated to 4x4 at input stride 4",
                     with_fc6(vgg16_trunk(true), {4, 1, 4}), 224});
  presets.push_back({"deeplab-crf-4x4", "hole VGG-16, FC6 4x4 at input stride 8",
                     with_fc6(vgg16_trunk(true), {4, 1, 8}), 224});
  presets.push_back({"deeplab-crf-largefov", "hole VGG-16, FC6 3x3 at input stride 12",
                     with_fc6(vgg16_trunk(true), {3, 1, 12}), 224});
  return presets;
}

}  // namespace

const std::vector<NetworkPreset>& network_presets() {
  static const std::vector<NetworkPreset> presets = build_presets();
  return presets;
}

std::optional<NetworkPreset> find_preset(std::string_view name) {
  for (const auto& preset : network_presets()) {
    if (preset.name == name) return preset;
  }
  return std::nullopt;
}

std::vector<LayerSpec> parse_layer_list(std::string_view text) {
  std::vector<LayerSpec> layers;
  int line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);

    int fields[3] = {0, 0, 0};
    std::size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      const char* begin = line.data() + pos;
      const char* end = line.data() + line.size();
      auto [ptr, ec] = std::from_chars(begin, end, fields[f]);
      if (ec != std::errc{} || fields[f] < 1) {
        throw std::invalid_argument("layer list line " + std::to_string(line_no) +
                                    ": expected 'k,stride,input_stride' with positive integers");
      }
      pos = static_cast<std::size_t>(ptr - line.data());
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (f < 2) {
        if (pos >= line.size() || line[pos] != ',') {
          throw std::invalid_argument("layer list line " + std::to_string(line_no) +
                                      ": expected 3 comma-separated fields");
        }
        ++pos;
      }
    }
    if (pos != line.size()) {
      throw std::invalid_argument("layer list line " + std::to_string(line_no) +
                                  ": trailing characters");
    }
    layers.push_back({fields[0], fields[1], fields[2]});
  }
  return layers;
}

Tensor3 bilinear_upsample(const Tensor3& input, int factor) {
  if (factor < 1) throw std::invalid_argument("bilinear_upsample: factor must be >= 1");
  const int h = input.height();
  const int w = input.width();
  const int c = input.channels();
  Tensor3 out(h * factor, w * factor, c);
  if (h == 0 || w == 0) return out;

  struct Tap {
    int lo;
    int hi;
    float frac;
  };
  auto taps = [factor](int src, int dst) {
    std::vector<Tap> t(dst);
    for (int o = 0; o < dst; ++o) {
      double s = (o + 0.5) / factor - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const int lo = static_cast<int>(std::floor(s));
      t[o] = {lo, std::min(lo + 1, src - 1), static_cast<float>(s - lo)};
    }
    return t;
  };
  const auto ty = taps(h, out.height());
  const auto tx = taps(w, out.width());

  for (int oy = 0; oy < out.height(); ++oy) {
    const Tap& a = ty[oy];
    for (int ox = 0; ox < out.width(); ++ox) {
      const Tap& b = tx[ox];
      auto p00 = input.pixel(static_cast<std::size_t>(a.lo) * w + b.lo);
      auto p01 = input.pixel(static_cast<std::size_t>(a.lo) * w + b.hi);
      auto p10 = input.pixel(static_cast<std::size_t>(a.hi) * w + b.lo);
      auto p11 = input.pixel(static_cast<std::size_t>(a.hi) * w + b.hi);
      auto dst = out.pixel(static_cast<std::size_t>(oy) * out.width() + ox);
      for (int k = 0; k < c; ++k) {
        const float top = p00[k] + b.frac * (p01[k] - p00[k]);
        const float bottom = p10[k] + b.frac * (p11[k] - p10[k]);
        dst[k] = top + a.frac * (bottom - top);
      }
    }
  }
  return out;
}

}  // namespace crfrefine

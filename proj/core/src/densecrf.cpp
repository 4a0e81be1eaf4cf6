#include "crfrefine/densecrf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace crfrefine {

void KernelParams::validate() const {
  if (!(sigma_alpha > 0.0) || !(sigma_beta > 0.0) || !(sigma_gamma > 0.0)) {
    throw std::invalid_argument("KernelParams: sigmas must be > 0");
  }
  if (!(w1 >= 0.0) || !(w2 >= 0.0)) {
    throw std::invalid_argument("KernelParams: weights must be >= 0");
  }
}

namespace {

std::unique_ptr<GaussianFilter> make_filter(FeatureMatrix features, FilterBackend backend) {
  if (backend == FilterBackend::kExact) {
    return std::make_unique<ExactGaussianFilter>(std::move(features));
  }
  return std::make_unique<PermutohedralLattice>(features);
}

void check_shapes(const Tensor3& field, int height, int width, const char* what) {
  if (field.height() != height || field.width() != width) {
    throw std::invalid_argument(std::string(what) + ": " + std::to_string(field.height()) + "x" +
                                std::to_string(field.width()) + " does not match image " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
}

// Adds the self-excluded, optionally normalized filter response scaled by
// weight into messages (n x L).
void accumulate_messages(const GaussianFilter& filter, double weight, const Tensor3& q,
                         NormalizeMode mode, std::vector<double>& messages) {
  const int labels = q.channels();
  std::vector<float> filtered(q.size());
  filter.apply_raw(q.data(), labels, filtered);
  auto row_sums = filter.row_sums();
  auto qv = q.data();
  for (std::size_t i = 0; i < q.pixels(); ++i) {
    const double scale = mode == NormalizeMode::kSymmetric ? weight / row_sums[i] : weight;
    for (int l = 0; l < labels; ++l) {
      const std::size_t k = i * labels + l;
      messages[k] += scale * (static_cast<double>(filtered[k]) - qv[k]);
    }
  }
}

}  // namespace

PairwiseKernels::PairwiseKernels(const Image& image, const KernelParams& params,
                                 FilterBackend backend)
    : height_(image.height()), width_(image.width()), params_(params) {
  params.validate();
  if (params.w1 > 0.0) {
    bilateral_ = make_filter(bilateral_features(image, static_cast<float>(params.sigma_alpha),
                                                static_cast<float>(params.sigma_beta)),
                             backend);
  }
  if (params.w2 > 0.0) {
    spatial_ = make_filter(
        spatial_features(image.height(), image.width(), static_cast<float>(params.sigma_gamma)),
        backend);
  }
}

UnaryField unary_from_scores(const Tensor3& scores) { return neg_log(softmax_channels(scores)); }

double energy(const LabelMap& labeling, const UnaryField& unary, const Image& image,
              const KernelParams& params) {
  params.validate();
  const int h = image.height();
  const int w = image.width();
  if (labeling.height() != h || labeling.width() != w) {
    throw std::invalid_argument("energy: labeling does not match image");
  }
  check_shapes(unary, h, w, "energy: unary");
  if (labeling.has_void()) throw std::invalid_argument("energy: labeling contains void pixels");
  const int labels = unary.channels();

  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto label = labeling.at(y, x);
      if (label >= labels) throw std::invalid_argument("energy: label exceeds unary channels");
      total += unary.at(y, x, label);
    }
  }

  const double inv_a = 1.0 / (2.0 * params.sigma_alpha * params.sigma_alpha);
  const double inv_b = 1.0 / (2.0 * params.sigma_beta * params.sigma_beta);
  const double inv_g = 1.0 / (2.0 * params.sigma_gamma * params.sigma_gamma);
  const int n = h * w;
  double pairwise = 0.0;
  for (int i = 0; i < n; ++i) {
    const int yi = i / w;
    const int xi = i % w;
    for (int j = i + 1; j < n; ++j) {
      const int yj = j / w;
      const int xj = j % w;
      if (labeling.at(yi, xi) == labeling.at(yj, xj)) continue;
      const double dp = static_cast<double>((xi - xj) * (xi - xj) + (yi - yj) * (yi - yj));
      double dc = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double diff = static_cast<double>(image.at(yi, xi, c)) - image.at(yj, xj, c);
        dc += diff * diff;
      }
      pairwise += params.w1 * std::exp(-dp * inv_a - dc * inv_b) + params.w2 * std::exp(-dp * inv_g);
    }
  }
  // Each unordered pair appears twice in the sum over ordered pairs.
  return total + 2.0 * pairwise;
}

QDistribution mean_field_step(const QDistribution& q, const UnaryField& unary,
                              const PairwiseKernels& kernels, NormalizeMode mode) {
  const Tensor3& qt = q.tensor();
  check_shapes(qt, kernels.height(), kernels.width(), "mean_field_step: Q");
  if (!qt.same_shape(unary)) throw std::invalid_argument("mean_field_step: Q and unary differ");

  const int labels = qt.channels();
  const KernelParams& params = kernels.params();
  std::vector<double> messages(qt.size(), 0.0);
  if (kernels.bilateral() != nullptr) {
    accumulate_messages(*kernels.bilateral(), params.w1, qt, mode, messages);
  }
  if (kernels.spatial() != nullptr) {
    accumulate_messages(*kernels.spatial(), params.w2, qt, mode, messages);
  }

  Tensor3 next(qt.height(), qt.width(), labels);
  auto theta = unary.data();
  auto out = next.data();
  std::vector<double> logits(labels);
  for (std::size_t i = 0; i < qt.pixels(); ++i) {
    const double* m = messages.data() + i * labels;
    double total_message = 0.0;
    for (int l = 0; l < labels; ++l) total_message += m[l];
    // Potts: the penalty for label l collects the messages of every other label.
    double peak = -INFINITY;
    for (int l = 0; l < labels; ++l) {
      logits[l] = -static_cast<double>(theta[i * labels + l]) - (total_message - m[l]);
      peak = std::max(peak, logits[l]);
    }
    double norm = 0.0;
    for (int l = 0; l < labels; ++l) {
      logits[l] = std::exp(logits[l] - peak);
      norm += logits[l];
    }
    for (int l = 0; l < labels; ++l) out[i * labels + l] = static_cast<float>(logits[l] / norm);
  }
  return ProbField::trusted(std::move(next));
}

QDistribution mean_field_step(const QDistribution& q, const UnaryField& unary, const Image& image,
                              const KernelParams& params, NormalizeMode mode,
                              FilterBackend backend) {
  return mean_field_step(q, unary, PairwiseKernels(image, params, backend), mode);
}

InferenceResult inference(const Tensor3& scores, const Image& image, const KernelParams& params,
                          const InferenceConfig& config) {
  if (config.iterations < 0) throw std::invalid_argument("inference: iterations must be >= 0");
  check_shapes(scores, image.height(), image.width(), "inference: scores");
  params.validate();

  const UnaryField unary = unary_from_scores(scores);
  QDistribution q = softmax_channels(scores);
  InferenceResult result{q, LabelMap{}, {}};
  if (config.record_trajectory) result.trajectory.push_back(q);

  if (config.iterations > 0) {
    const PairwiseKernels kernels(image, params, config.backend);
    for (int t = 0; t < config.iterations; ++t) {
      q = mean_field_step(q, unary, kernels, config.normalize);
      if (config.record_trajectory) result.trajectory.push_back(q);
    }
  }
  result.labels = argmax_channels(q.tensor());
  result.q = std::move(q);
  return result;
}

}  // namespace crfrefine

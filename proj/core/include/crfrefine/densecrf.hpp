#pragma once

#include <memory>
#include <vector>

#include "crfrefine/filtering.hpp"
#include "crfrefine/tensor.hpp"

namespace crfrefine {

/// Weights and bandwidths of the appearance (bilateral) and smoothness
/// (spatial) kernels.
struct KernelParams {
  double w1 = 5.0;
  double w2 = 3.0;
  double sigma_alpha = 60.0;
  double sigma_beta = 5.0;
  double sigma_gamma = 3.0;

  /// Throws std::invalid_argument unless every sigma > 0 and both weights >= 0.
  void validate() const;
  bool operator==(const KernelParams&) const = default;
};

/// Per-pixel, per-label negative log-probabilities.
using UnaryField = Tensor3;
/// Fully factorized mean-field marginals.
using QDistribution = ProbField;

enum class FilterBackend { kPermutohedral, kExact };

struct InferenceConfig {
  int iterations = 10;
  NormalizeMode normalize = NormalizeMode::kSymmetric;
  bool record_trajectory = false;
  FilterBackend backend = FilterBackend::kPermutohedral;
};

struct InferenceResult {
  QDistribution q;
  LabelMap labels;
  // trajectory[0] is the softmax initialization, trajectory[t] the state after
  // iteration t. Empty unless requested.
  std::vector<QDistribution> trajectory;
};

/// The two Gaussian filters over an image's pixels. Building them is the
/// expensive part; steps reuse them.
class PairwiseKernels {
 public:
  PairwiseKernels(const Image& image, const KernelParams& params, FilterBackend backend);

  int height() const { return height_; }
  int width() const { return width_; }
  // Null when the matching weight is zero.
  const GaussianFilter* bilateral() const { return bilateral_.get(); }
  const GaussianFilter* spatial() const { return spatial_.get(); }
  const KernelParams& params() const { return params_; }

 private:
  int height_;
  int width_;
  KernelParams params_;
  std::unique_ptr<GaussianFilter> bilateral_;
  std::unique_ptr<GaussianFilter> spatial_;
};

/// theta = -log softmax(scores).
UnaryField unary_from_scores(const Tensor3& scores);

/// Gibbs energy of a labeling under Potts pairwise terms, summed over ordered
/// pairs with the raw Gaussian kernels. O(n^2); for small images.
double energy(const LabelMap& labeling, const UnaryField& unary, const Image& image,
              const KernelParams& params);

/// One parallel mean-field update. Messages exclude each pixel's own
/// contribution.
QDistribution mean_field_step(const QDistribution& q, const UnaryField& unary,
                              const PairwiseKernels& kernels, NormalizeMode mode);

/// Convenience overload that builds the kernels for a single step.
QDistribution mean_field_step(const QDistribution& q, const UnaryField& unary, const Image& image,
                              const KernelParams& params, NormalizeMode mode,
                              FilterBackend backend = FilterBackend::kPermutohedral);

/// Softmax initialization followed by config.iterations mean-field steps;
/// labels are the per-pixel argmax of the final marginals.
InferenceResult inference(const Tensor3& scores, const Image& image, const KernelParams& params,
                          const InferenceConfig& config = {});

}  // namespace crfrefine

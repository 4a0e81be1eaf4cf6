#include "crfrefine/tune.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "crfrefine/eval.hpp"

namespace crfrefine {

namespace {

// Grid values are snapped to 1e-9 so that 0.1 steps compare and print cleanly.
double snap(double v) { return std::round(v * 1e9) / 1e9; }

using Key = std::tuple<double, double, double>;

Key key_of(const KernelParams& p) { return {p.w1, p.sigma_alpha, p.sigma_beta}; }

std::vector<double> refine_axis(double center, double step, bool allow_zero) {
  std::vector<double> out;
  for (int k = -2; k <= 2; ++k) {
    const double v = snap(center + k * step / 2.0);
    if (v > 0.0 || (allow_zero && v == 0.0)) out.push_back(v);
  }
  return out;
}

std::vector<double> evaluate_all(std::span<const TuneSample> samples,
                                 const std::vector<KernelParams>& candidates,
                                 const InferenceConfig& config, int jobs) {
  std::vector<double> scores(candidates.size(), 0.0);
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(candidates.size())));
  if (workers == 1) {
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      scores[k] = evaluate_params(samples, candidates[k], config);
    }
    return scores;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (int t = 0; t < workers; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t k = next++; k < candidates.size(); k = next++) {
          scores[k] = evaluate_params(samples, candidates[k], config);
        }
      } catch (...) {
        errors[t] = std::current_exception();
        next = candidates.size();
      }
    });
  }
  for (auto& thread : threads) thread.join();
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
  return scores;
}

}  // namespace

std::vector<double> GridAxis::values() const {
  if (!(step > 0.0)) throw std::invalid_argument("GridAxis: step must be > 0");
  if (!(stop >= start)) throw std::invalid_argument("GridAxis: stop must be >= start");
  std::vector<double> out;
  const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (long long i = 0; i < count; ++i) out.push_back(snap(start + i * step));
  return out;
}

double evaluate_params(std::span<const TuneSample> samples, const KernelParams& params,
                       const InferenceConfig& config) {
  if (samples.empty()) throw std::invalid_argument("evaluate_params: no samples");
  ConfusionMatrix cm(samples.front().gt.num_classes());
  for (const auto& sample : samples) {
    const InferenceResult result = inference(sample.scores, sample.image, params, config);
    accumulate(result.labels, sample.gt, cm);
  }
  return mean_iou(cm).mean.value_or(0.0);
}

TuneResult grid_search(std::span<const TuneSample> dataset, const SearchSpec& spec) {
  if (dataset.empty()) throw std::invalid_argument("grid_search: empty dataset");
  if (spec.refine_rounds < 1) throw std::invalid_argument("grid_search: refine_rounds must be >= 1");
  if (spec.subset_size < 0) throw std::invalid_argument("grid_search: subset_size must be >= 0");
  const int classes = dataset.front().gt.num_classes();
  for (const auto& sample : dataset) {
    if (sample.gt.num_classes() != classes) {
      throw std::invalid_argument("grid_search: samples disagree on the class count");
    }
  }
  std::span<const TuneSample> samples = dataset;
  if (spec.subset_size > 0 && static_cast<std::size_t>(spec.subset_size) < dataset.size()) {
    samples = dataset.first(static_cast<std::size_t>(spec.subset_size));
  }

  std::vector<double> w1s = spec.w1.values();
  std::vector<double> alphas = spec.sigma_alpha.values();
  std::vector<double> betas = spec.sigma_beta.values();
  double step_w1 = spec.w1.step;
  double step_alpha = spec.sigma_alpha.step;
  double step_beta = spec.sigma_beta.step;

  TuneResult result;
  std::map<Key, double> seen;
  bool have_best = false;

  for (int round = 1; round <= spec.refine_rounds; ++round) {
    std::vector<KernelParams> candidates;
    for (double w1 : w1s) {
      for (double alpha : alphas) {
        for (double beta : betas) {
          KernelParams p{w1, spec.w2, alpha, beta, spec.sigma_gamma};
          p.validate();
          if (seen.count(key_of(p)) != 0) continue;
          seen.emplace(key_of(p), 0.0);
          candidates.push_back(p);
        }
      }
    }
    const std::vector<double> scores = evaluate_all(samples, candidates, spec.inference, spec.jobs);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      seen[key_of(candidates[k])] = scores[k];
      result.trace.push_back({candidates[k], scores[k], round});
      const bool better = !have_best || scores[k] > result.score ||
                          (scores[k] == result.score && key_of(candidates[k]) < key_of(result.best));
      if (better) {
        result.best = candidates[k];
        result.score = scores[k];
        have_best = true;
      }
    }

    w1s = refine_axis(result.best.w1, step_w1, true);
    alphas = refine_axis(result.best.sigma_alpha, step_alpha, false);
    betas = refine_axis(result.best.sigma_beta, step_beta, false);
    step_w1 /= 2.0;
    step_alpha /= 2.0;
    step_beta /= 2.0;
  }
  return result;
}

}  // namespace crfrefine

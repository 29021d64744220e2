// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mvcs/grid.hpp"

namespace mvcs {

/// Pairwise summation in a fixed order; results do not depend on threading.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct LossWeights {
  double lambda_s = 1.0;  // cross-view supervision
  double lambda_p = 0.1;  // bootstrapping prior

  void validate() const {
    require(std::isfinite(lambda_s) && std::isfinite(lambda_p) && lambda_s >= 0 &&
                lambda_p >= 0,
            "loss weights must be finite and non-negative");
  }
};

struct LossResult {
  double value = 0.0;
  RealGrid grad;  // d value / d prediction
};

struct PairLossResult {
  double value = 0.0;
  RealGrid grad_target;       // d value / d P_t
  RealGrid grad_transferred;  // d value / d P^_t
};

inline constexpr double kProbClamp = 1e-7;

/// Binary cross-entropy summed over pixels, probabilities clamped to
/// [kProbClamp, 1 - kProbClamp].
inline LossResult labeled_loss(const ProbMap& pred, const BinaryMask& truth) {
  require_same_shape(pred, truth, "labeled_loss");
  LossResult r{0.0, RealGrid(pred.width(), pred.height(), 0.0)};
  std::vector<double> terms(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred[i];
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    const bool y = truth[i] != 0;
    terms[i] = y ? -std::log(pc) : -std::log(1.0 - pc);
    if (p >= kProbClamp && p <= 1.0 - kProbClamp) r.grad[i] = y ? -1.0 / pc : 1.0 / (1.0 - pc);
  }
  r.value = pairwise_sum(terms);
  return r;
}

/// One-way relative cross-entropy sum((1 - P^_t) P_t). It only penalizes
/// target belief that the transferred upper bound does not support.
inline PairLossResult cross_supervision_loss(const ProbMap& target, const ProbMap& transferred) {
  require_same_shape(target, transferred, "cross_supervision_loss");
  PairLossResult r{0.0, RealGrid(target.width(), target.height(), 0.0),
                   RealGrid(target.width(), target.height(), 0.0)};
  std::vector<double> terms(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    terms[i] = (1.0 - transferred[i]) * target[i];
    r.grad_target[i] = 1.0 - transferred[i];
    r.grad_transferred[i] = -target[i];
  }
  r.value = pairwise_sum(terms);
  return r;
}

/// Bootstrapping prior sum((1 - z^) P) against a pseudo-binary superset mask.
inline LossResult prior_loss(const ProbMap& pred, const BinaryMask& pseudo) {
  require_same_shape(pred, pseudo, "prior_loss");
  LossResult r{0.0, RealGrid(pred.width(), pred.height(), 0.0)};
  std::vector<double> terms(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double w = pseudo[i] ? 0.0 : 1.0;
    terms[i] = w * pred[i];
    r.grad[i] = w;
  }
  r.value = pairwise_sum(terms);
  return r;
}

/// Strict threshold: value > threshold -> 1.
inline BinaryMask binarize(const ProbMap& pred, double threshold = 0.5) {
  require(threshold > 0.0 && threshold < 1.0, "binarize: threshold must lie in (0, 1)");
  BinaryMask out(pred.width(), pred.height(), 0);
  for (std::size_t i = 0; i < pred.size(); ++i) out[i] = pred[i] > threshold ? 1 : 0;
  return out;
}

struct LossParts {
  double labeled = 0.0;
  double cross = 0.0;
  double prior = 0.0;
};

/// L_L + lambda_s L_S + lambda_p L_P; throws on non-finite parts.
inline double total_loss(const LossParts& parts, const LossWeights& weights) {
  weights.validate();
  if (!std::isfinite(parts.labeled) || !std::isfinite(parts.cross) ||
      !std::isfinite(parts.prior))
    throw DegenerateError("non-finite loss component (training diverged)");
  return parts.labeled + weights.lambda_s * parts.cross + weights.lambda_p * parts.prior;
}

}  // namespace mvcs

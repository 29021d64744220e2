// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mvcs/losses.hpp"

namespace mvcs {
namespace {

ProbMap random_map(int w, int h, std::uint64_t seed, double lo = 0.05, double hi = 0.95) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ProbMap m(w, h);
  for (auto& v : m.values()) v = u(rng);
  return m;
}

BinaryMask random_mask(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BinaryMask m(w, h);
  for (auto& v : m.values()) v = static_cast<std::uint8_t>(rng() & 1u);
  return m;
}

// Central differences of f with respect to every entry of m.
template <class F>
void check_gradient(ProbMap m, const RealGrid& grad, F f, double tol) {
  const double h = 1e-6;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = m[i];
    m[i] = v + h;
    const double up = f(m);
    m[i] = v - h;
    const double down = f(m);
    m[i] = v;
    const double fd = (up - down) / (2 * h);
    EXPECT_LE(std::abs(fd - grad[i]), tol * std::max(1.0, std::abs(fd))) << "pixel " << i;
  }
}

TEST(LabeledLoss, PerfectPrediction) {
  const BinaryMask truth = random_mask(8, 8, 1);
  ProbMap pred(8, 8);
  for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = truth[i] ? 1.0 - kProbClamp : kProbClamp;
  const double expected = -64.0 * std::log(1.0 - kProbClamp);
  EXPECT_NEAR(labeled_loss(pred, truth).value, expected, 1e-12);
}

TEST(LabeledLoss, UniformHalf) {
  const BinaryMask truth = random_mask(8, 8, 2);
  EXPECT_NEAR(labeled_loss(ProbMap(8, 8, 0.5), truth).value, 64.0 * std::log(2.0), 1e-12);
}

TEST(LabeledLoss, GradientMatchesFiniteDifferences) {
  const BinaryMask truth = random_mask(8, 8, 3);
  const ProbMap pred = random_map(8, 8, 4);
  const auto r = labeled_loss(pred, truth);
  check_gradient(pred, r.grad, [&](const ProbMap& m) { return labeled_loss(m, truth).value; },
                 1e-6);
}

TEST(LabeledLoss, DimensionMismatch) {
  EXPECT_THROW(labeled_loss(ProbMap(8, 8), BinaryMask(4, 8)), InvalidArgument);
}

TEST(CrossSupervisionLoss, ZeroCases) {
  const ProbMap p = random_map(6, 6, 5);
  EXPECT_EQ(cross_supervision_loss(ProbMap(6, 6, 0.0), p).value, 0.0);
  EXPECT_EQ(cross_supervision_loss(p, ProbMap(6, 6, 1.0)).value, 0.0);
}

TEST(CrossSupervisionLoss, DirectSummation) {
  const auto r = cross_supervision_loss(ProbMap(10, 10, 1.0), ProbMap(10, 10, 0.25));
  EXPECT_DOUBLE_EQ(r.value, 75.0);
}

TEST(CrossSupervisionLoss, GradientsMatchFiniteDifferences) {
  const ProbMap t = random_map(8, 8, 6), hat = random_map(8, 8, 7);
  const auto r = cross_supervision_loss(t, hat);
  check_gradient(t, r.grad_target,
                 [&](const ProbMap& m) { return cross_supervision_loss(m, hat).value; }, 1e-6);
  check_gradient(hat, r.grad_transferred,
                 [&](const ProbMap& m) { return cross_supervision_loss(t, m).value; }, 1e-6);
}

TEST(CrossSupervisionLoss, PenalizesUnsupportedBelief) {
  ProbMap t(4, 4, 0.3), hat(4, 4, 0.6);
  const double before = cross_supervision_loss(t, hat).value;
  t(1, 2) = 0.5;
  EXPECT_GT(cross_supervision_loss(t, hat).value, before);
}

TEST(PriorLoss, DirectSummation) {
  BinaryMask pseudo(10, 10, 0);
  for (int i = 0; i < 30; ++i) pseudo[static_cast<std::size_t>(i) * 3] = 1;
  EXPECT_NEAR(prior_loss(ProbMap(10, 10, 0.4), pseudo).value, 28.0, 1e-12);
  EXPECT_EQ(prior_loss(ProbMap(10, 10, 0.4), BinaryMask(10, 10, 1)).value, 0.0);
  EXPECT_EQ(prior_loss(ProbMap(10, 10, 0.0), pseudo).value, 0.0);
}

TEST(PriorLoss, GradientMatchesFiniteDifferences) {
  const BinaryMask pseudo = random_mask(8, 8, 8);
  const ProbMap pred = random_map(8, 8, 9);
  const auto r = prior_loss(pred, pseudo);
  check_gradient(pred, r.grad, [&](const ProbMap& m) { return prior_loss(m, pseudo).value; },
                 1e-6);
}

TEST(Binarize, StrictThreshold) {
  ProbMap m(2, 1);
  m[0] = 0.5;
  m[1] = 0.6;
  const BinaryMask b = binarize(m);
  EXPECT_EQ(b[0], 0);
  EXPECT_EQ(b[1], 1);
  EXPECT_EQ(binarize(ProbMap(3, 3, 0.6)).count(), 9u);
  EXPECT_EQ(binarize(b.as_probmap()), b);
  EXPECT_THROW(binarize(m, 1.0), InvalidArgument);
}

TEST(TotalLoss, WeightedSum) {
  const LossParts parts{2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(total_loss(parts, {0.0, 0.0}), 2.0);
  EXPECT_DOUBLE_EQ(total_loss(parts, {1.0, 1.0}), 9.0);
  EXPECT_DOUBLE_EQ(total_loss(parts, {2.0, 0.0}) - 2.0, 2.0 * (total_loss(parts, {1.0, 0.0}) - 2.0));
}

TEST(TotalLoss, RejectsNonFinite) {
  EXPECT_THROW(total_loss({std::nan(""), 0.0, 0.0}, {}), DegenerateError);
  EXPECT_THROW(total_loss({1.0, 0.0, 0.0}, {-1.0, 0.0}), InvalidArgument);
}

TEST(PairwiseSum, MatchesNaiveSum) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (i + 1);
  double naive = 0.0;
  for (double x : v) naive += x;
  EXPECT_NEAR(pairwise_sum(v), naive, 1e-12);
}

}  // namespace
}  // namespace mvcs

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "mvcs/eval.hpp"

namespace mvcs {
namespace {

BinaryMask rect_mask(int x0, int y0, int x1, int y1, int size = 10) {
  BinaryMask m(size, size, 0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m(x, y) = 1;
  return m;
}

TEST(Iou, BasicCases) {
  const BinaryMask a = rect_mask(2, 2, 6, 6);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, rect_mask(6, 6, 9, 9)), 0.0);
  EXPECT_DOUBLE_EQ(iou(BinaryMask(10, 10, 0), BinaryMask(10, 10, 0)), 1.0);
  EXPECT_THROW(iou(a, BinaryMask(5, 5)), InvalidArgument);
}

TEST(Iou, DoubledAreaGivesHalf) {
  const BinaryMask truth = rect_mask(0, 0, 4, 4);  // 16 px
  const BinaryMask pred = rect_mask(0, 0, 8, 4);   // 32 px, contains truth
  EXPECT_DOUBLE_EQ(iou(pred, truth), 0.5);
  EXPECT_DOUBLE_EQ(iou(truth, pred), iou(pred, truth));
}

TEST(PixelAccuracy, Counting) {
  const BinaryMask a = rect_mask(0, 0, 5, 5);
  EXPECT_DOUBLE_EQ(pixel_accuracy(a, a), 1.0);
  BinaryMask inv(10, 10);
  for (std::size_t i = 0; i < a.size(); ++i) inv[i] = 1 - a[i];
  EXPECT_DOUBLE_EQ(pixel_accuracy(inv, a), 0.0);
  // 25 disagreeing pixels out of 100.
  EXPECT_DOUBLE_EQ(pixel_accuracy(rect_mask(0, 0, 10, 5), rect_mask(0, 0, 5, 5)), 0.75);
}

TEST(BoundGap, Statistics) {
  const ProbMap half(4, 4, 0.5);
  const auto same = bound_gap_stats({half, half});
  EXPECT_EQ(same.mean, 0.0);
  EXPECT_EQ(same.max, 0.0);
  const auto full = bound_gap_stats({ProbMap(4, 4, 1.0), ProbMap(4, 4, 0.0)});
  EXPECT_EQ(full.mean, 1.0);
  EXPECT_EQ(full.max, 1.0);
  BoundPair bad{ProbMap(4, 4, 0.2), ProbMap(4, 4, 0.6)};
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(MetricReport, AveragesAndCsv) {
  const auto r = MetricReport::from_views({{3, 0.5, 0.9}, {7, 1.0, 0.7}});
  EXPECT_DOUBLE_EQ(r.mean_iou, 0.75);
  EXPECT_DOUBLE_EQ(r.pixel_accuracy, 0.8);
  EXPECT_EQ(r.csv_rows("cross"),
            "cross,3,0.500000,0.900000\ncross,7,1.000000,0.700000\ncross,mean,0.750000,0.800000\n");
  EXPECT_NE(r.summary("x").find("mean IoU"), std::string::npos);
  const auto empty = MetricReport::from_views({});
  EXPECT_EQ(empty.mean_iou, 0.0);
}

}  // namespace
}  // namespace mvcs

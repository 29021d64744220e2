// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "mvcs/grid.hpp"
#include "mvcs/losses.hpp"

namespace mvcs {

/// |pred & truth| / |pred | truth|; two empty masks agree perfectly (1.0).
inline double iou(const BinaryMask& pred, const BinaryMask& truth) {
  require_same_shape(pred, truth, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] && truth[i];
    uni += pred[i] || truth[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double pixel_accuracy(const BinaryMask& pred, const BinaryMask& truth) {
  require_same_shape(pred, truth, "pixel_accuracy");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) agree += pred[i] == truth[i];
  return static_cast<double>(agree) / static_cast<double>(pred.size());
}

struct BoundPair {
  ProbMap upper;
  ProbMap lower;

  void validate() const {
    require_same_shape(upper, lower, "bound pair");
    for (std::size_t i = 0; i < upper.size(); ++i)
      if (lower[i] > upper[i] + 1e-9) throw InvalidArgument("bound pair: lower exceeds upper");
  }
};

struct GapStats {
  double mean = 0.0;
  double max = 0.0;
};

inline GapStats bound_gap_stats(const BoundPair& bounds) {
  require_same_shape(bounds.upper, bounds.lower, "bound_gap_stats");
  std::vector<double> gap(bounds.upper.size());
  GapStats s;
  for (std::size_t i = 0; i < gap.size(); ++i) {
    gap[i] = bounds.upper[i] - bounds.lower[i];
    s.max = std::max(s.max, gap[i]);
  }
  s.mean = pairwise_sum(gap) / static_cast<double>(gap.size());
  return s;
}

struct ViewMetric {
  int view = 0;
  double iou = 0.0;
  double pixel_accuracy = 0.0;
};

struct MetricReport {
  double mean_iou = 0.0;
  double pixel_accuracy = 0.0;
  std::vector<ViewMetric> per_view;
  double bound_gap_mean = 0.0;

  static MetricReport from_views(std::vector<ViewMetric> views) {
    MetricReport r;
    r.per_view = std::move(views);
    if (r.per_view.empty()) return r;
    for (const auto& v : r.per_view) {
      r.mean_iou += v.iou;
      r.pixel_accuracy += v.pixel_accuracy;
    }
    r.mean_iou /= r.per_view.size();
    r.pixel_accuracy /= r.per_view.size();
    return r;
  }

  std::string csv_rows(const std::string& tag) const {
    std::ostringstream os;
    char buf[160];
    for (const auto& v : per_view) {
      std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f\n", tag.c_str(), v.view, v.iou,
                    v.pixel_accuracy);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%s,mean,%.6f,%.6f\n", tag.c_str(), mean_iou, pixel_accuracy);
    os << buf;
    return os.str();
  }

  std::string summary(const std::string& title) const {
    std::ostringstream os;
    char buf[160];
    os << "== " << title << " ==\n";
    std::snprintf(buf, sizeof buf, "  views evaluated : %zu\n  mean IoU        : %.4f\n"
                  "  pixel accuracy  : %.4f\n  bound gap mean  : %.4f\n",
                  per_view.size(), mean_iou, pixel_accuracy, bound_gap_mean);
    os << buf;
    return os.str();
  }
};

}  // namespace mvcs

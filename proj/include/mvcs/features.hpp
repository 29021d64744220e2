// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mvcs/error.hpp"

namespace mvcs {

/// Per-pixel feature vectors, pixel-major: value(x, y, c).
class FeatureImage {
 public:
  static constexpr int kDefaultChannels = 5;

  FeatureImage() = default;
  FeatureImage(int width, int height, int channels = kDefaultChannels)
      : width_(width), height_(height), channels_(channels) {
    require(width > 0 && height > 0 && channels > 0, "feature image dimensions must be positive");
    values_.assign(static_cast<std::size_t>(width) * height * channels, 0.0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixels() const { return static_cast<std::size_t>(width_) * height_; }

  double& operator()(int x, int y, int c) {
    return values_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double operator()(int x, int y, int c) const {
    return values_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::span<const double> pixel(std::size_t i) const {
    return {values_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void validate() const {
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidArgument("feature image has non-finite values");
  }

  friend bool operator==(const FeatureImage&, const FeatureImage&) = default;

 private:
  int width_ = 0, height_ = 0, channels_ = 0;
  std::vector<double> values_;
};

}  // namespace mvcs

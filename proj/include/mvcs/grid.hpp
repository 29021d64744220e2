// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvcs/error.hpp"

namespace mvcs {

// Row-major W x H grid. Pixel centers sit at integer coordinates, origin at
// the top-left; the covered domain is [-0.5, W-0.5] x [-0.5, H-0.5].
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    require(width > 0 && height > 0, "grid dimensions must be positive");
    values_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(int x, int y) { return values_[index(x, y)]; }
  const T& operator()(int x, int y) const { return values_[index(x, y)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

using RealGrid = Grid<double>;

/// Per-pixel foreground probability; values stay finite and inside [0, 1].
class ProbMap : public Grid<double> {
 public:
  ProbMap() = default;
  ProbMap(int width, int height, double fill = 0.0)
      : Grid<double>(width, height, fill) {}
  explicit ProbMap(Grid<double> grid) : Grid<double>(std::move(grid)) {
    validate();
  }

  void validate() const {
    for (double v : values())
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw InvalidArgument("probability map value outside [0,1]");
  }
};

/// Strictly binary per-pixel labels.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, std::uint8_t fill = 0)
      : Grid<std::uint8_t>(width, height, fill) {
    validate();
  }

  void validate() const {
    for (auto v : values())
      if (v > 1) throw InvalidArgument("mask value is not binary");
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : values()) n += v;
    return n;
  }

  ProbMap as_probmap() const {
    ProbMap p(width(), height());
    for (std::size_t i = 0; i < size(); ++i) p[i] = (*this)[i];
    return p;
  }
};

inline void require_same_shape(const auto& a, const auto& b,
                               const std::string& what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw InvalidArgument(what + ": dimension mismatch (" +
                          std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " +
                          std::to_string(b.width()) + "x" +
                          std::to_string(b.height()) + ")");
}

inline bool in_domain(int width, int height, double x, double y) noexcept {
  return x >= -0.5 && y >= -0.5 && x <= width - 0.5 && y <= height - 0.5;
}

// Up to four taps of a bilinear lookup with edge clamping. An out-of-domain
// location yields zero taps (the sample reads as background).
struct BilinearTaps {
  std::size_t index[4] = {0, 0, 0, 0};
  double weight[4] = {0, 0, 0, 0};
  int count = 0;
};

inline BilinearTaps bilinear_taps(int width, int height, double x, double y) {
  BilinearTaps taps;
  if (!in_domain(width, height, x, y)) return taps;
  const double fx = std::floor(x), fy = std::floor(y);
  const double tx = x - fx, ty = y - fy;
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const int xs[2] = {std::clamp(x0, 0, width - 1), std::clamp(x0 + 1, 0, width - 1)};
  const int ys[2] = {std::clamp(y0, 0, height - 1), std::clamp(y0 + 1, 0, height - 1)};
  const double wx[2] = {1.0 - tx, tx};
  const double wy[2] = {1.0 - ty, ty};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      taps.index[taps.count] = static_cast<std::size_t>(ys[j]) * width + xs[i];
      taps.weight[taps.count] = w;
      ++taps.count;
    }
  return taps;
}

/// Bilinear lookup; zero outside the pixel domain.
template <class T>
double sample_bilinear(const Grid<T>& g, double x, double y) {
  const auto taps = bilinear_taps(g.width(), g.height(), x, y);
  double v = 0.0;
  for (int k = 0; k < taps.count; ++k)
    v += taps.weight[k] * static_cast<double>(g[taps.index[k]]);
  return v;
}

/// Scatter `value` into `g` with the adjoint of sample_bilinear.
inline void scatter_bilinear(Grid<double>& g, double x, double y,
                             double value) {
  const auto taps = bilinear_taps(g.width(), g.height(), x, y);
  for (int k = 0; k < taps.count; ++k) g[taps.index[k]] += taps.weight[k] * value;
}

/// Nearest-pixel lookup; zero outside the pixel domain.
template <class T>
T sample_nearest(const Grid<T>& g, double x, double y) {
  const double rx = std::floor(x + 0.5), ry = std::floor(y + 0.5);
  if (rx < 0 || ry < 0 || rx > g.width() - 1 || ry > g.height() - 1) return T{};
  return g(static_cast<int>(rx), static_cast<int>(ry));
}

// How a binary mask is read at a non-integer location.
//   nearest:      value of the nearest pixel center.
//   conservative: 1 if any pixel in the bilinear support is 1, i.e. the
//                 bilinear interpolant of the mask is positive.
enum class MaskLookup { nearest, conservative };

inline bool mask_at(const BinaryMask& m, double x, double y, MaskLookup mode) {
  if (mode == MaskLookup::nearest) return sample_nearest(m, x, y) != 0;
  const auto taps = bilinear_taps(m.width(), m.height(), x, y);
  for (int k = 0; k < taps.count; ++k)
    if (m[taps.index[k]]) return true;
  return false;
}

}  // namespace mvcs

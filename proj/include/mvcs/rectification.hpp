// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvcs/geometry.hpp"
#include "mvcs/grid.hpp"

namespace mvcs {

/// Invertible planar projective map.
class Homography {
 public:
  Homography() = default;
  explicit Homography(const Mat3& m) : m_(m) {
    if (!m.allFinite() || std::abs(m.determinant()) <= 1e-12)
      throw DegenerateError("homography is not invertible");
  }

  static Homography identity() { return Homography(); }

  const Mat3& matrix() const { return m_; }
  Homography inverse() const { return Homography(m_.inverse()); }

  /// Dehomogenized image of p; nullopt when p maps to (or behind) infinity.
  std::optional<Vec2> apply(const Vec2& p) const {
    const Vec3 h = m_ * Vec3(p.x(), p.y(), 1.0);
    if (!(h.z() > 0.0)) return std::nullopt;
    return Vec2(h.x() / h.z(), h.y() / h.z());
  }

  Homography operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

 private:
  Mat3 m_ = Mat3::Identity();
};

/// Full image -> cropped and resized heatmap coordinates.
inline Homography crop_transform(const CropBox& crop) {
  require(crop.width > 0 && crop.height > 0 && crop.out_size > 0,
          "crop_transform: invalid crop box");
  const double sx = crop.scale_x(), sy = crop.scale_y();
  Mat3 m;
  m << sx, 0, -sx * crop.left, 0, sy, -sy * crop.top, 0, 0, 1;
  return Homography(m);
}

/// Calibrated rectification of an ordered (target, source) pair. Both views
/// are re-rendered by a shared rotation and shared intrinsics so that
/// epipolar lines become image rows.
struct StereoRectification {
  Mat3 rotation;    // rows: rectified camera axes in world coordinates
  Mat3 intrinsics;  // shared rectified K
  Homography target;  // target full image -> rectified full image
  Homography source;  // source full image -> rectified full image
};

namespace detail {

inline bool epipole_inside(const CameraView& cam, const Vec3& other_center) {
  const Vec3 e = cam.intrinsics() * (cam.rotation() * other_center + cam.translation());
  if (std::abs(e.z()) <= 1e-12 * e.norm()) return false;
  const double x = e.x() / e.z(), y = e.y() / e.z();
  return x >= 0 && y >= 0 && x <= cam.image_width() && y <= cam.image_height();
}

inline Homography rectifying_homography(const CameraView& cam, const Mat3& Q,
                                        const Mat3& K_rect) {
  return Homography(K_rect * Q * cam.rotation().transpose() * cam.intrinsics().inverse());
}

}  // namespace detail

/// Rectifying rotation: x axis along the baseline (oriented with the mean
/// camera x axis), y axis orthogonal to the baseline and the mean optical axis.
inline StereoRectification rectify_pair(const CameraView& target,
                                        const CameraView& source) {
  if (coincident_centers(target, source))
    throw DegenerateError("rectification degenerate: coincident camera centers");
  if (detail::epipole_inside(target, source.center()) ||
      detail::epipole_inside(source, target.center()))
    throw DegenerateError("rectification degenerate: epipole inside the image");

  Vec3 ex = (source.center() - target.center()).normalized();
  const Vec3 mean_x = target.rotation().row(0).transpose() + source.rotation().row(0).transpose();
  if (ex.dot(mean_x) < 0) ex = -ex;
  const Vec3 mean_z = target.optical_axis() + source.optical_axis();
  Vec3 ey = mean_z.cross(ex);
  if (ey.norm() < 1e-9 * std::max(1.0, mean_z.norm()))
    throw DegenerateError("rectification degenerate: baseline parallel to viewing direction");
  ey.normalize();
  const Vec3 ez = ex.cross(ey);
  Mat3 Q;
  Q.row(0) = ex.transpose();
  Q.row(1) = ey.transpose();
  Q.row(2) = ez.transpose();

  Mat3 K = 0.5 * (target.intrinsics() + source.intrinsics());
  K(0, 1) = 0.0;
  return {Q, K, detail::rectifying_homography(target, Q, K),
          detail::rectifying_homography(source, Q, K)};
}

/// Bounding box of a view's crop after rectification. Returns nullopt when a
/// corner falls behind the rectified camera.
inline std::optional<std::array<double, 4>> warped_crop_bounds(const CameraView& cam,
                                                               const Homography& rect) {
  const CropBox& c = cam.crop();
  const Vec2 corners[4] = {{c.left, c.top},
                           {c.left + c.width, c.top},
                           {c.left, c.top + c.height},
                           {c.left + c.width, c.top + c.height}};
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
  double x1 = -x0, y1 = -x0;
  for (const auto& p : corners) {
    const auto q = rect.apply(p);
    if (!q) return std::nullopt;
    x0 = std::min(x0, q->x());
    x1 = std::max(x1, q->x());
    y0 = std::min(y0, q->y());
    y1 = std::max(y1, q->y());
  }
  return std::array<double, 4>{x0, y0, x1, y1};
}

/// Rectified crop boxes for the pair. Each view keeps the horizontal extent
/// of its own warped crop; the vertical extent is the union of both so that
/// a heatmap row indexes the same epipolar line in both rectified heatmaps.
inline std::pair<CropBox, CropBox> rectified_crops(const CameraView& target,
                                                   const CameraView& source,
                                                   const StereoRectification& rect,
                                                   int out_size) {
  require(out_size > 0, "rectified_crops: out_size must be positive");
  const auto bt = warped_crop_bounds(target, rect.target);
  const auto bs = warped_crop_bounds(source, rect.source);
  if (!bt || !bs)
    throw DegenerateError("rectification degenerate: crop corner behind rectified camera");
  const double top = std::min((*bt)[1], (*bs)[1]);
  const double bottom = std::max((*bt)[3], (*bs)[3]);
  const double max_extent = 1e6;
  if (bottom - top > max_extent || (*bt)[2] - (*bt)[0] > max_extent ||
      (*bs)[2] - (*bs)[0] > max_extent)
    throw DegenerateError("rectification degenerate: rectified crop is unbounded");
  auto box = [&](const std::array<double, 4>& b) {
    return CropBox{b[0], top, b[2] - b[0], bottom - top, out_size};
  };
  return {box(*bt), box(*bs)};
}

/// Network heatmap -> rectified heatmap: crop(rect) * H_r * crop(view)^-1.
inline Homography heatmap_warp(const CropBox& view_crop, const Homography& rectify,
                               const CropBox& rectified_crop) {
  return crop_transform(rectified_crop) * rectify * crop_transform(view_crop).inverse();
}

/// out(y) = bilinear(map, M y), where M maps output to input coordinates.
/// Samples that land outside the input (or at/behind infinity) read as 0.
inline RealGrid resample(const RealGrid& map, const Mat3& M, int out_width, int out_height) {
  RealGrid out(out_width, out_height, 0.0);
  for (int y = 0; y < out_height; ++y)
    for (int x = 0; x < out_width; ++x) {
      const Vec3 h = M * Vec3(x, y, 1.0);
      if (!(h.z() > 0.0)) continue;
      out(x, y) = sample_bilinear(map, h.x() / h.z(), h.y() / h.z());
    }
  return out;
}

/// Adjoint of resample: scatters an output-space gradient into input space.
inline RealGrid resample_adjoint(const RealGrid& grad_out, const Mat3& M, int in_width,
                                 int in_height) {
  RealGrid grad_in(in_width, in_height, 0.0);
  for (int y = 0; y < grad_out.height(); ++y)
    for (int x = 0; x < grad_out.width(); ++x) {
      const double g = grad_out(x, y);
      if (g == 0.0) continue;
      const Vec3 h = M * Vec3(x, y, 1.0);
      if (!(h.z() > 0.0)) continue;
      scatter_bilinear(grad_in, h.x() / h.z(), h.y() / h.z(), g);
    }
  return grad_in;
}

/// Warps a probability map forward through H (input -> output coordinates)
/// by inverse-mapped bilinear resampling; out-of-bounds reads as background.
inline ProbMap warp_probmap(const ProbMap& map, const Homography& H, int out_width,
                            int out_height) {
  if (H.matrix() == Mat3::Identity() && out_width == map.width() &&
      out_height == map.height())
    return map;
  RealGrid g = resample(map, H.inverse().matrix(), out_width, out_height);
  ProbMap out(out_width, out_height);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = std::clamp(g[i], 0.0, 1.0);
  return out;
}

inline RealGrid warp_probmap_adjoint(const RealGrid& grad_out, const Homography& H,
                                     int in_width, int in_height) {
  return resample_adjoint(grad_out, H.inverse().matrix(), in_width, in_height);
}

/// Per-source column reparametrization over the rectified target grid.
///
/// The grid is the target heatmap rectified against the scan source (the
/// first source whose center differs from the target's). For rectified target
/// pixel p and scan column u (a column of the scan source's rectified heatmap
/// at row p.y), the same 3D point sits at column a*u + b, row v of source i's
/// rectified heatmap. Sources sharing the target's center see the whole ray
/// at one location; for those `fixed` holds that location in the source's
/// own heatmap.
struct SourceCoeffs {
  bool coincident = false;
  Homography warp;  // source heatmap -> its rectified heatmap (identity if coincident)
  CropBox rectified_crop;
  RealGrid a, b, v;       // per rectified target pixel
  RealGrid fixed_x, fixed_y;  // coincident sources only
};

struct RectifiedPairing {
  CameraView target;
  std::vector<CameraView> sources;
  int scan_source = -1;  // -1: every source shares the target center
  int rect_size = 0;
  Homography target_warp;  // target heatmap -> rectified target heatmap
  std::vector<SourceCoeffs> coeffs;
  // Scan columns u with column_lo < u < column_hi correspond to points in
  // front of the target and every source.
  RealGrid column_lo, column_hi;
  Grid<std::uint8_t> valid;
  double column_error = 0.0;  // max self-check deviation, px

  int grid_width() const { return valid.width(); }
  int grid_height() const { return valid.height(); }
  int rect_width(std::size_t i) const {
    return coeffs[i].coincident ? sources[i].heatmap_size() : rect_size;
  }
};

namespace detail {

// Linear-in-inverse-depth column model of a rectified source heatmap along a
// fixed target ray: column(rho) = alpha + beta * rho, row constant.
struct ColumnModel {
  double alpha, beta, row;
};

inline ColumnModel column_model(const StereoRectification& rect, const CropBox& src_crop,
                                const Vec3& dir, const Vec3& target_center,
                                const Vec3& source_center) {
  const Vec3 q = rect.intrinsics * rect.rotation * dir;
  const Vec3 k = rect.intrinsics * rect.rotation * (target_center - source_center);
  const double sx = src_crop.scale_x(), sy = src_crop.scale_y();
  return {sx * (q.x() / q.z() - src_crop.left), sx * k.x() / q.z(),
          sy * (q.y() / q.z() - src_crop.top)};
}

}  // namespace detail

/// Rectified grid side for rect_size = 0: the largest rectified crop side in
/// heatmap pixels, oversampled by kRectOversample and clamped to
/// [heatmap_size, kMaxRectScale * heatmap_size].
inline constexpr double kRectOversample = 1.25;
inline constexpr int kMaxRectScale = 6;

inline int auto_rect_size(int heatmap_size, double extent) {
  const double want = std::ceil(kRectOversample * extent);
  return static_cast<int>(std::clamp(want, static_cast<double>(heatmap_size),
                                     static_cast<double>(kMaxRectScale * heatmap_size)));
}

/// Builds the rectified pairing of `target` with `sources` (order matters:
/// the first non-coincident source provides the scan columns).
inline RectifiedPairing reparam_coeffs(const CameraView& target,
                                       const std::vector<CameraView>& sources,
                                       int rect_size = 0) {
  require(!sources.empty(), "reparam_coeffs: at least one source is required");
  require(rect_size >= 0, "reparam_coeffs: rect_size must be non-negative");
  RectifiedPairing P;
  P.target = target;
  P.sources = sources;
  const std::size_t n = sources.size();

  std::vector<std::optional<StereoRectification>> rects(n);
  P.coeffs.resize(n);
  double extent = 0.0;  // largest rectified crop side, in heatmap pixels
  for (std::size_t i = 0; i < n; ++i) {
    if (coincident_centers(target, sources[i])) {
      P.coeffs[i].coincident = true;
      continue;
    }
    if (P.scan_source < 0) P.scan_source = static_cast<int>(i);
    try {
      rects[i] = rectify_pair(target, sources[i]);
      const auto [tc, sc] = rectified_crops(target, sources[i], *rects[i], 1);
      const double t_scale = target.heatmap_size() / target.crop().width;
      const double s_scale = sources[i].heatmap_size() / sources[i].crop().width;
      extent = std::max({extent, t_scale * tc.width, t_scale * tc.height, s_scale * sc.width,
                         s_scale * sc.height});
    } catch (const DegenerateError& e) {
      throw DegenerateError("source " + std::to_string(i) + ": " + e.what());
    }
  }
  P.rect_size = rect_size > 0 ? rect_size : auto_rect_size(target.heatmap_size(), extent);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rects[i]) continue;
    const auto sc = rectified_crops(target, sources[i], *rects[i], P.rect_size).second;
    P.coeffs[i].rectified_crop = sc;
    P.coeffs[i].warp = heatmap_warp(sources[i].crop(), rects[i]->source, sc);
  }

  // Target crop in the scan frame.
  CropBox scan_target_crop;
  Mat3 to_world_dir = Mat3::Identity();  // rectified target heatmap pixel -> world direction
  int gw, gh;
  if (P.scan_source >= 0) {
    const auto& r = *rects[P.scan_source];
    scan_target_crop =
        rectified_crops(target, sources[P.scan_source], r, P.rect_size).first;
    P.target_warp = heatmap_warp(target.crop(), r.target, scan_target_crop);
    to_world_dir = r.rotation.transpose() * r.intrinsics.inverse() *
                   crop_transform(scan_target_crop).inverse().matrix();
    gw = gh = P.rect_size;
  } else {
    P.target_warp = Homography::identity();
    to_world_dir = target.rotation().transpose() * target.intrinsics().inverse() *
                   crop_transform(target.crop()).inverse().matrix();
    gw = gh = target.heatmap_size();
  }

  for (auto& c : P.coeffs) {
    c.a = RealGrid(gw, gh, 0.0);
    c.b = RealGrid(gw, gh, 0.0);
    c.v = RealGrid(gw, gh, 0.0);
    if (c.coincident) {
      c.fixed_x = RealGrid(gw, gh, 0.0);
      c.fixed_y = RealGrid(gw, gh, 0.0);
    }
  }
  P.column_lo = RealGrid(gw, gh, 0.0);
  P.column_hi = RealGrid(gw, gh, 0.0);
  P.valid = Grid<std::uint8_t>(gw, gh, 0);

  const Vec3 ct = target.center();
  std::vector<Vec3> centers(n), axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    centers[i] = sources[i].center();
    axes[i] = sources[i].optical_axis();
  }
  const double inf = std::numeric_limits<double>::infinity();

  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) {
      const Vec3 dir = to_world_dir * Vec3(x, y, 1.0);
      if (!(target.optical_axis().dot(dir) > 0.0)) continue;

      // Feasible inverse depths: rho > 0 and in front of every source.
      double rho_lo = 0.0, rho_hi = inf;
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        const double g = axes[i].dot(dir);
        const double e = axes[i].dot(ct - centers[i]);
        if (e == 0.0 || P.coeffs[i].coincident) {
          ok = g > 0.0;
        } else if (e > 0.0) {
          rho_lo = std::max(rho_lo, -g / e);
        } else {
          rho_hi = std::min(rho_hi, -g / e);
        }
      }
      if (!ok || !(rho_lo < rho_hi)) continue;

      if (P.scan_source < 0) {
        for (std::size_t i = 0; i < n; ++i) {
          const Vec3 h = sources[i].intrinsics() * (sources[i].rotation() * dir);
          const Vec2 hp = sources[i].to_heatmap(Vec2(h.x() / h.z(), h.y() / h.z()));
          P.coeffs[i].fixed_x(x, y) = hp.x();
          P.coeffs[i].fixed_y(x, y) = hp.y();
        }
        P.column_lo(x, y) = -1.0;
        P.column_hi(x, y) = 1.0;
        P.valid(x, y) = 1;
        continue;
      }

      const auto scan = detail::column_model(*rects[P.scan_source],
                                             P.coeffs[P.scan_source].rectified_crop, dir, ct,
                                             centers[P.scan_source]);
      if (scan.beta == 0.0) continue;
      for (std::size_t i = 0; i < n; ++i) {
        auto& c = P.coeffs[i];
        if (c.coincident) {
          const Vec3 h = sources[i].intrinsics() * (sources[i].rotation() * dir);
          const Vec2 hp = sources[i].to_heatmap(Vec2(h.x() / h.z(), h.y() / h.z()));
          c.fixed_x(x, y) = hp.x();
          c.fixed_y(x, y) = hp.y();
          continue;
        }
        const auto m = detail::column_model(*rects[i], c.rectified_crop, dir, ct, centers[i]);
        const double a = m.beta / scan.beta;
        c.a(x, y) = a;
        c.b(x, y) = m.alpha - a * scan.alpha;
        c.v(x, y) = m.row;
      }
      const double u0 = scan.alpha + scan.beta * rho_lo;
      const double u1 = rho_hi == inf ? (scan.beta > 0 ? inf : -inf)
                                      : scan.alpha + scan.beta * rho_hi;
      P.column_lo(x, y) = std::min(u0, u1);
      P.column_hi(x, y) = std::max(u0, u1);
      P.valid(x, y) = 1;
    }

  // Self-check against direct projection through the original cameras.
  if (P.scan_source >= 0) {
    const auto scan_idx = static_cast<std::size_t>(P.scan_source);
    const Homography to_scan_rect = crop_transform(P.coeffs[scan_idx].rectified_crop) *
                                    rects[scan_idx]->source;
    const int step = std::max(1, gw / 8);
    for (int y = step / 2; y < gh; y += step)
      for (int x = step / 2; x < gw; x += step) {
        if (!P.valid(x, y)) continue;
        const Vec3 dir = (to_world_dir * Vec3(x, y, 1.0)).normalized();
        for (double lambda_scale : {0.5, 1.0, 2.0}) {
          const double lambda = lambda_scale * (centers[scan_idx] - ct).norm();
          const Vec3 X = ct + lambda * dir;
          const auto ps = project(sources[scan_idx], X);
          if (!ps.in_front()) continue;
          const auto us = to_scan_rect.apply(ps.pixel);
          if (!us) continue;
          for (std::size_t i = 0; i < n; ++i) {
            if (P.coeffs[i].coincident || i == scan_idx) continue;
            const auto pi = project(sources[i], X);
            if (!pi.in_front()) continue;
            const auto ui = (crop_transform(P.coeffs[i].rectified_crop) * rects[i]->source)
                                .apply(pi.pixel);
            if (!ui) continue;
            const double pred = P.coeffs[i].a(x, y) * us->x() + P.coeffs[i].b(x, y);
            P.column_error = std::max(P.column_error, std::abs(pred - ui->x()));
            P.column_error = std::max(P.column_error, std::abs(P.coeffs[i].v(x, y) - ui->y()));
          }
        }
      }
  }
  return P;
}

}  // namespace mvcs

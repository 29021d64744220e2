// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "mvcs/geometry.hpp"
#include "mvcs/grid.hpp"
#include "mvcs/rectification.hpp"

namespace mvcs {

/// A probability map together with the camera that produced it.
struct ProbView {
  const ProbMap& map;
  const CameraView& camera;
};

/// A binary mask together with the camera that produced it.
struct MaskView {
  const BinaryMask& mask;
  const CameraView& camera;
};

enum class DepthSpacing { uniform_disparity, log_depth };

/// Samples of the ray distance lambda for the brute-force sweeps.
struct DepthSampling {
  double lambda_min = 1.0;
  double lambda_max = 10.0;
  int count = 256;
  DepthSpacing spacing = DepthSpacing::uniform_disparity;

  void validate() const {
    require(lambda_min > 0 && lambda_min < lambda_max, "depth sampling: need 0 < min < max");
    require(count >= 2, "depth sampling: need at least two samples");
  }

  std::vector<double> depths() const {
    validate();
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      const double s = static_cast<double>(k) / (count - 1);
      if (spacing == DepthSpacing::uniform_disparity) {
        const double inv = 1.0 / lambda_max + s * (1.0 / lambda_min - 1.0 / lambda_max);
        out[k] = 1.0 / inv;
      } else {
        out[k] = lambda_min * std::pow(lambda_max / lambda_min, s);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

enum class Interpolation { bilinear, nearest };

namespace detail {

// Heatmap projection of the ray C + lambda d as A + lambda B (homogeneous,
// third coordinate = depth in that camera).
struct RayProjector {
  Vec3 A, B;

  bool at(double lambda, Vec2& out) const {
    const Vec3 h = A + lambda * B;
    if (!(h.z() > 0.0)) return false;
    out = {h.x() / h.z(), h.y() / h.z()};
    return true;
  }
};

inline Mat3 heatmap_projection(const CameraView& cam) {
  return crop_transform(cam.crop()).matrix() * cam.intrinsics();
}

inline RayProjector ray_projector(const CameraView& cam, const Ray& ray) {
  const Mat3 M = heatmap_projection(cam);
  return {M * (cam.rotation() * ray.origin + cam.translation()),
          M * (cam.rotation() * ray.direction)};
}

// Bilinear lookups along one row of a grid, bit-identical to sample_bilinear
// but with the row taps computed once.
class RowSampler {
 public:
  RowSampler(const RealGrid& g, double y) : g_(&g) {
    const int h = g.height();
    row_ok_ = y >= -0.5 && y <= h - 0.5;
    if (!row_ok_) return;
    const double fy = std::floor(y);
    const double ty = y - fy;
    const int y0 = static_cast<int>(fy);
    r0_ = static_cast<std::size_t>(std::clamp(y0, 0, h - 1)) * g.width();
    r1_ = static_cast<std::size_t>(std::clamp(y0 + 1, 0, h - 1)) * g.width();
    wy0_ = 1.0 - ty;
    wy1_ = ty;
  }

  double operator()(double x) const {
    const int w = g_->width();
    if (!row_ok_ || !(x >= -0.5 && x <= w - 0.5)) return 0.0;
    const double fx = std::floor(x);
    const double tx = x - fx;
    const int x0 = static_cast<int>(fx);
    const std::size_t c0 = static_cast<std::size_t>(std::clamp(x0, 0, w - 1));
    const std::size_t c1 = static_cast<std::size_t>(std::clamp(x0 + 1, 0, w - 1));
    const double wx0 = 1.0 - tx, wx1 = tx;
    const auto& v = *g_;
    double s = 0.0;
    s += wx0 * wy0_ * v[r0_ + c0];
    s += wx1 * wy0_ * v[r0_ + c1];
    s += wx0 * wy1_ * v[r1_ + c0];
    s += wx1 * wy1_ * v[r1_ + c1];
    return s;
  }

 private:
  const RealGrid* g_;
  bool row_ok_ = false;
  std::size_t r0_ = 0, r1_ = 0;
  double wy0_ = 0.0, wy1_ = 0.0;
};

}  // namespace detail

/// Binary shape-from-silhouette transfer onto the target heatmap: a pixel is
/// foreground iff some sampled depth on its ray is foreground in every source.
/// Samples behind a source camera or outside its heatmap count as background.
inline BinaryMask silhouette_transfer(std::span<const MaskView> sources,
                                      const CameraView& target,
                                      const DepthSampling& sampling,
                                      MaskLookup lookup = MaskLookup::nearest) {
  require(!sources.empty(), "silhouette_transfer: at least one source is required");
  for (const auto& s : sources)
    require(s.mask.width() == s.camera.heatmap_size() &&
                s.mask.height() == s.camera.heatmap_size(),
            "silhouette_transfer: mask does not match its camera heatmap");
  const auto depths = sampling.depths();
  const int size = target.heatmap_size();
  BinaryMask out(size, size, 0);
  std::vector<detail::RayProjector> proj(sources.size());
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Ray ray = ray_from_heatmap(target, Vec2(x, y));
      for (std::size_t i = 0; i < sources.size(); ++i)
        proj[i] = detail::ray_projector(sources[i].camera, ray);
      for (double lambda : depths) {
        bool all = true;
        for (std::size_t i = 0; i < sources.size() && all; ++i) {
          Vec2 p;
          all = proj[i].at(lambda, p) && mask_at(sources[i].mask, p.x(), p.y(), lookup);
        }
        if (all) {
          out(x, y) = 1;
          break;
        }
      }
    }
  return out;
}

/// Brute-force belief transfer at one target heatmap pixel: the maximum over
/// sampled depths of the product of source probabilities along the ray.
inline double belief_transfer_ray(std::span<const ProbView> sources, const CameraView& target,
                                  const Vec2& heatmap_pixel, const DepthSampling& sampling,
                                  Interpolation interp = Interpolation::bilinear) {
  require(!sources.empty(), "belief_transfer_ray: at least one source is required");
  const Ray ray = ray_from_heatmap(target, heatmap_pixel);
  std::vector<detail::RayProjector> proj;
  proj.reserve(sources.size());
  for (const auto& s : sources) proj.push_back(detail::ray_projector(s.camera, ray));
  double best = 0.0;
  for (double lambda : sampling.depths()) {
    double prod = 1.0;
    for (std::size_t i = 0; i < sources.size() && prod > 0.0; ++i) {
      Vec2 p;
      if (!proj[i].at(lambda, p)) {
        prod = 0.0;
        break;
      }
      prod *= interp == Interpolation::bilinear ? sample_bilinear(sources[i].map, p.x(), p.y())
                                                : sample_nearest(sources[i].map, p.x(), p.y());
    }
    best = std::max(best, prod);
  }
  return best;
}

/// belief_transfer_ray evaluated at every target heatmap pixel.
inline ProbMap belief_transfer_dense(std::span<const ProbView> sources, const CameraView& target,
                                     const DepthSampling& sampling,
                                     Interpolation interp = Interpolation::bilinear) {
  require(!sources.empty(), "belief_transfer_dense: at least one source is required");
  const auto depths = sampling.depths();
  const int size = target.heatmap_size();
  ProbMap out(size, size, 0.0);
  std::vector<detail::RayProjector> proj(sources.size());
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Ray ray = ray_from_heatmap(target, Vec2(x, y));
      for (std::size_t i = 0; i < sources.size(); ++i)
        proj[i] = detail::ray_projector(sources[i].camera, ray);
      double best = 0.0;
      for (double lambda : depths) {
        double prod = 1.0;
        for (std::size_t i = 0; i < sources.size() && prod > 0.0; ++i) {
          Vec2 p;
          if (!proj[i].at(lambda, p)) {
            prod = 0.0;
            break;
          }
          prod *= interp == Interpolation::bilinear
                      ? sample_bilinear(sources[i].map, p.x(), p.y())
                      : sample_nearest(sources[i].map, p.x(), p.y());
        }
        best = std::max(best, prod);
      }
      out(x, y) = std::min(best, 1.0);
    }
  return out;
}

/// Everything transfer_backward needs to route gradients of one rectified
/// transfer. In-memory only.
struct ArgmaxRecord {
  int grid_width = 0, grid_height = 0;
  int out_width = 0, out_height = 0;
  Mat3 target_warp = Mat3::Identity();  // target heatmap -> grid
  struct Source {
    bool coincident = false;
    Mat3 warp = Mat3::Identity();  // source heatmap -> rectified source heatmap
    int rect_width = 0, rect_height = 0;
    int map_width = 0, map_height = 0;
  };
  std::vector<Source> sources;
  Grid<int> winner;  // winning scan column per grid pixel, -1 if none
  // Per grid pixel and source: sample location (rectified source heatmap, or
  // the source's own heatmap when coincident) and the sampled factor.
  std::vector<Vec2> sample;
  std::vector<double> factor;

  std::size_t slot(std::size_t pixel, std::size_t source) const {
    return pixel * sources.size() + source;
  }
};

/// Shape-belief transfer by row-wise max-pooling over rectified maps.
/// Computed on the rectified target grid, then resampled back onto the target
/// heatmap through the inverse target warp.
inline std::pair<ProbMap, ArgmaxRecord> belief_transfer_rectified(
    std::span<const ProbView> sources, const CameraView& target,
    const RectifiedPairing& pairing) {
  require(!sources.empty(), "belief_transfer_rectified: at least one source is required");
  require(sources.size() == pairing.sources.size() && target == pairing.target,
          "belief_transfer_rectified: pairing was built for different cameras");
  for (std::size_t i = 0; i < sources.size(); ++i) {
    require(sources[i].camera == pairing.sources[i],
            "belief_transfer_rectified: pairing was built for different cameras");
    require(sources[i].map.width() == sources[i].camera.heatmap_size() &&
                sources[i].map.height() == sources[i].camera.heatmap_size(),
            "belief_transfer_rectified: map does not match its camera heatmap");
  }
  const std::size_t n = sources.size();
  const int gw = pairing.grid_width(), gh = pairing.grid_height();

  ArgmaxRecord rec;
  rec.grid_width = gw;
  rec.grid_height = gh;
  rec.out_width = rec.out_height = target.heatmap_size();
  rec.target_warp = pairing.target_warp.matrix();
  rec.sources.resize(n);
  rec.winner = Grid<int>(gw, gh, -1);
  rec.sample.assign(static_cast<std::size_t>(gw) * gh * n, Vec2::Zero());
  rec.factor.assign(static_cast<std::size_t>(gw) * gh * n, 0.0);

  std::vector<ProbMap> rectified(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = rec.sources[i];
    s.coincident = pairing.coeffs[i].coincident;
    s.map_width = sources[i].map.width();
    s.map_height = sources[i].map.height();
    if (s.coincident) continue;
    s.warp = pairing.coeffs[i].warp.matrix();
    s.rect_width = s.rect_height = pairing.rect_size;
    rectified[i] = warp_probmap(sources[i].map, pairing.coeffs[i].warp, pairing.rect_size,
                                pairing.rect_size);
  }

  RealGrid best_grid(gw, gh, 0.0);
  struct ScanRow {
    detail::RowSampler sampler;
    double a, b;
  };
  std::vector<ScanRow> rows;
  rows.reserve(n);
  for (int y = 0; y < gh; ++y)
    for (int x = 0; x < gw; ++x) {
      if (!pairing.valid(x, y)) continue;
      const std::size_t pix = static_cast<std::size_t>(y) * gw + x;
      double fixed = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = pairing.coeffs[i];
        if (!c.coincident) continue;
        const Vec2 p(c.fixed_x(x, y), c.fixed_y(x, y));
        rec.sample[rec.slot(pix, i)] = p;
        rec.factor[rec.slot(pix, i)] = sample_bilinear(sources[i].map, p.x(), p.y());
        fixed *= rec.factor[rec.slot(pix, i)];
      }
      if (pairing.scan_source < 0) {
        rec.winner(x, y) = 0;
        best_grid(x, y) = fixed;
        continue;
      }
      const double lo = pairing.column_lo(x, y), hi = pairing.column_hi(x, y);
      const int u_begin = static_cast<int>(std::max(0.0, std::floor(lo) + 1.0));
      const int u_end = static_cast<int>(
          std::min(static_cast<double>(pairing.rect_size - 1), std::ceil(hi) - 1.0));
      rows.clear();
      for (std::size_t i = 0; i < n; ++i) {
        const auto& c = pairing.coeffs[i];
        if (!c.coincident) rows.push_back({detail::RowSampler(rectified[i], c.v(x, y)),
                                           c.a(x, y), c.b(x, y)});
      }
      int best_u = -1;
      double best = 0.0;
      for (int u = u_begin; u <= u_end; ++u) {
        double prod = fixed;
        for (std::size_t r = 0; r < rows.size() && prod > 0.0; ++r)
          prod *= rows[r].sampler(rows[r].a * u + rows[r].b);
        if (best_u < 0 || prod > best) {
          best = prod;
          best_u = u;
        }
      }
      if (best_u < 0) continue;
      rec.winner(x, y) = best_u;
      best_grid(x, y) = best;
      for (std::size_t i = 0, r = 0; i < n; ++i) {
        const auto& c = pairing.coeffs[i];
        if (c.coincident) continue;
        const Vec2 p(rows[r].a * best_u + rows[r].b, c.v(x, y));
        rec.sample[rec.slot(pix, i)] = p;
        rec.factor[rec.slot(pix, i)] = rows[r].sampler(p.x());
        ++r;
      }
    }

  const int size = target.heatmap_size();
  ProbMap out(size, size, 0.0);
  if (pairing.scan_source < 0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(best_grid[i], 0.0, 1.0);
  } else {
    const RealGrid g = resample(best_grid, rec.target_warp, size, size);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(g[i], 0.0, 1.0);
  }
  return {std::move(out), std::move(rec)};
}

/// Gradients of a scalar loss with respect to each source map, given its
/// gradient with respect to the transferred map. Each pixel's gradient flows
/// only through its winning scan column.
inline std::vector<RealGrid> transfer_backward(const ArgmaxRecord& rec,
                                               const RealGrid& upstream) {
  if (upstream.width() != rec.out_width || upstream.height() != rec.out_height)
    throw InvalidArgument("transfer_backward: stale record (dimension mismatch)");
  const std::size_t n = rec.sources.size();
  const bool direct = rec.grid_width == rec.out_width && rec.grid_height == rec.out_height &&
                      rec.target_warp == Mat3::Identity();
  const RealGrid g_grid = direct ? upstream
                                 : resample_adjoint(upstream, rec.target_warp, rec.grid_width,
                                                    rec.grid_height);

  std::vector<RealGrid> g_src(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = rec.sources[i];
    g_src[i] = s.coincident ? RealGrid(s.map_width, s.map_height, 0.0)
                            : RealGrid(s.rect_width, s.rect_height, 0.0);
  }
  for (int y = 0; y < rec.grid_height; ++y)
    for (int x = 0; x < rec.grid_width; ++x) {
      const double g = g_grid(x, y);
      if (g == 0.0 || rec.winner(x, y) < 0) continue;
      const std::size_t pix = static_cast<std::size_t>(y) * rec.grid_width + x;
      for (std::size_t i = 0; i < n; ++i) {
        double others = 1.0;
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) others *= rec.factor[rec.slot(pix, j)];
        if (others == 0.0) continue;
        const Vec2& p = rec.sample[rec.slot(pix, i)];
        scatter_bilinear(g_src[i], p.x(), p.y(), g * others);
      }
    }

  std::vector<RealGrid> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = rec.sources[i];
    out[i] = s.coincident ? std::move(g_src[i])
                          : resample_adjoint(g_src[i], Homography(s.warp).inverse().matrix(),
                                             s.map_width, s.map_height);
  }
  return out;
}

/// Upper bound of an unlabeled view's probability: the rectified transfer
/// with the labeled views as sources.
inline ProbMap upper_bound(std::span<const ProbView> labeled, const CameraView& unlabeled,
                           const RectifiedPairing& pairing) {
  return belief_transfer_rectified(labeled, unlabeled, pairing).first;
}

/// Upper bound that falls back to the brute-force ray sweep when the pairing
/// is degenerate or its column model misses by more than a pixel.
inline ProbMap upper_bound_auto(std::span<const ProbView> labeled, const CameraView& unlabeled,
                                const DepthSampling& fallback, int rect_size = 0,
                                bool* used_fallback = nullptr) {
  std::vector<CameraView> cams;
  for (const auto& v : labeled) cams.push_back(v.camera);
  try {
    const auto pairing = reparam_coeffs(unlabeled, cams, rect_size);
    if (pairing.column_error <= 1.0) {
      if (used_fallback) *used_fallback = false;
      return upper_bound(labeled, unlabeled, pairing);
    }
  } catch (const DegenerateError&) {
  }
  if (used_fallback) *used_fallback = true;
  return belief_transfer_dense(labeled, unlabeled, fallback);
}

/// Axis-aligned voxel lattice; voxel centers sample the box.
struct VoxelGrid {
  Vec3 min_corner = Vec3::Constant(-1.0);
  Vec3 max_corner = Vec3::Constant(1.0);
  int resolution = 64;

  Vec3 voxel_size() const { return (max_corner - min_corner) / resolution; }
  Vec3 center(int i, int j, int k) const {
    const Vec3 s = voxel_size();
    return min_corner + Vec3((i + 0.5) * s.x(), (j + 0.5) * s.y(), (k + 0.5) * s.z());
  }
  std::size_t count() const {
    return static_cast<std::size_t>(resolution) * resolution * resolution;
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * resolution + j) * resolution + i;
  }

  /// Parametric interval of the ray inside the box, if any.
  bool clip(const Ray& ray, double& t0, double& t1) const {
    t0 = 0.0;
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      const double d = ray.direction[a], o = ray.origin[a];
      if (std::abs(d) < 1e-15) {
        if (o < min_corner[a] || o > max_corner[a]) return false;
        continue;
      }
      double ta = (min_corner[a] - o) / d, tb = (max_corner[a] - o) / d;
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
    return t0 < t1;
  }
};

struct VoxelHull {
  VoxelGrid grid;
  std::vector<std::uint8_t> occupancy;
  std::vector<BinaryMask> reprojections;

  std::size_t occupied() const {
    std::size_t n = 0;
    for (auto v : occupancy) n += v;
    return n;
  }
};

/// Classic space carving: a voxel is kept iff its center projects to
/// foreground in every mask. Each requested view receives the reprojection
/// of the kept voxel centers.
inline VoxelHull voxel_hull_oracle(std::span<const MaskView> masks, const VoxelGrid& grid,
                                   std::span<const CameraView> reproject_into = {},
                                   MaskLookup lookup = MaskLookup::nearest) {
  VoxelHull hull;
  hull.grid = grid;
  hull.occupancy.assign(grid.count(), 0);
  std::vector<Mat3> M;
  for (const auto& m : masks) M.push_back(detail::heatmap_projection(m.camera));
  for (int k = 0; k < grid.resolution; ++k)
    for (int j = 0; j < grid.resolution; ++j)
      for (int i = 0; i < grid.resolution; ++i) {
        const Vec3 X = grid.center(i, j, k);
        bool inside = true;
        for (std::size_t v = 0; v < masks.size() && inside; ++v) {
          const auto& cam = masks[v].camera;
          const Vec3 h = M[v] * (cam.rotation() * X + cam.translation());
          inside = h.z() > 0.0 &&
                   mask_at(masks[v].mask, h.x() / h.z(), h.y() / h.z(), lookup);
        }
        hull.occupancy[grid.index(i, j, k)] = inside ? 1 : 0;
      }
  for (const auto& cam : reproject_into) {
    const int size = cam.heatmap_size();
    BinaryMask out(size, size, 0);
    const Mat3 P = detail::heatmap_projection(cam);
    for (int k = 0; k < grid.resolution; ++k)
      for (int j = 0; j < grid.resolution; ++j)
        for (int i = 0; i < grid.resolution; ++i) {
          if (!hull.occupancy[grid.index(i, j, k)]) continue;
          const Vec3 h = P * (cam.rotation() * grid.center(i, j, k) + cam.translation());
          if (!(h.z() > 0.0)) continue;
          const double rx = std::floor(h.x() / h.z() + 0.5), ry = std::floor(h.y() / h.z() + 0.5);
          if (rx < 0 || ry < 0 || rx > size - 1 || ry > size - 1) continue;
          out(static_cast<int>(rx), static_cast<int>(ry)) = 1;
        }
    hull.reprojections.push_back(std::move(out));
  }
  return hull;
}

/// Constructive lower bound for an unlabeled view. Pixel x is marked iff some
/// labeled foreground pixel's ray, clipped to the grid and intersected with
/// the visual hull of the other labeled views, is non-empty and projects
/// entirely within `radius` pixels of x. The surface point seen by that
/// labeled pixel lies on the segment, so x is forced to be foreground up to
/// the pixel-center discretization of the silhouette; the default radius keeps
/// the segment inside the pixel's inscribed disc.
inline BinaryMask lower_bound(std::span<const MaskView> labeled, const CameraView& unlabeled,
                              const VoxelGrid& grid, double radius = 0.5,
                              MaskLookup hull_lookup = MaskLookup::conservative) {
  if (labeled.size() < 2) throw InvalidArgument("lower_bound: need at least two labeled views");
  const int size = unlabeled.heatmap_size();
  BinaryMask out(size, size, 0);
  const double step = grid.voxel_size().minCoeff() * 0.5;
  std::vector<Vec2> pts;
  for (std::size_t j = 0; j < labeled.size(); ++j) {
    const auto& lab = labeled[j];
    std::vector<detail::RayProjector> proj(labeled.size());
    for (int py = 0; py < lab.mask.height(); ++py)
      for (int px = 0; px < lab.mask.width(); ++px) {
        if (!lab.mask(px, py)) continue;
        const Ray ray = ray_from_heatmap(lab.camera, Vec2(px, py));
        double t0, t1;
        if (!grid.clip(ray, t0, t1)) continue;
        for (std::size_t o = 0; o < labeled.size(); ++o)
          if (o != j) proj[o] = detail::ray_projector(labeled[o].camera, ray);
        const auto target = detail::ray_projector(unlabeled, ray);
        pts.clear();
        bool escaped = false;
        for (double t = t0 + 0.5 * step; t < t1 && !escaped; t += step) {
          bool inside = true;
          for (std::size_t o = 0; o < labeled.size() && inside; ++o) {
            if (o == j) continue;
            Vec2 p;
            inside = proj[o].at(t, p) && mask_at(labeled[o].mask, p.x(), p.y(), hull_lookup);
          }
          if (!inside) continue;
          Vec2 q;
          if (!target.at(t, q) || !in_domain(size, size, q.x(), q.y())) {
            escaped = true;
            break;
          }
          pts.push_back(q);
        }
        if (escaped || pts.empty()) continue;
        Vec2 lo = pts.front(), hi = pts.front();
        for (const auto& q : pts) {
          lo = lo.cwiseMin(q);
          hi = hi.cwiseMax(q);
        }
        if ((hi - lo).maxCoeff() > 2.0 * radius) continue;
        const int x0 = static_cast<int>(std::ceil(hi.x() - radius));
        const int x1 = static_cast<int>(std::floor(lo.x() + radius));
        const int y0 = static_cast<int>(std::ceil(hi.y() - radius));
        const int y1 = static_cast<int>(std::floor(lo.y() + radius));
        for (int y = std::max(0, y0); y <= std::min(size - 1, y1); ++y)
          for (int x = std::max(0, x0); x <= std::min(size - 1, x1); ++x) {
            bool within = true;
            for (const auto& q : pts)
              if ((q - Vec2(x, y)).squaredNorm() > radius * radius) {
                within = false;
                break;
              }
            if (within) out(x, y) = 1;
          }
      }
  }
  return out;
}

}  // namespace mvcs

namespace mvcs {

/// Depth range of a rig's working volume: the least-squares point closest to
/// every optical axis is taken as the focus, and the sweep runs from half the
/// nearest camera distance to twice the farthest.
inline DepthSampling rig_depth_sampling(std::span<const CameraView> cams, int count = 256) {
  require(!cams.empty(), "rig_depth_sampling: no cameras");
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const auto& c : cams) {
    const Vec3 z = c.optical_axis();
    const Mat3 P = Mat3::Identity() - z * z.transpose();
    A += P;
    b += P * c.center();
  }
  Vec3 focus = Vec3::Zero();
  if (cams.size() >= 2 && std::abs(A.determinant()) > 1e-9) focus = A.ldlt().solve(b);
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
  for (const auto& c : cams) {
    const double d = (c.center() - focus).norm();
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }
  if (!(dmin > 0.0)) dmin = dmax = 1.0;
  return DepthSampling{0.5 * dmin, 2.0 * dmax, count, DepthSpacing::uniform_disparity};
}

}  // namespace mvcs

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mvcs/features.hpp"
#include "mvcs/geometry.hpp"
#include "mvcs/grid.hpp"

namespace mvcs {

/// Ellipsoid body; a sphere has equal semi-axes. `orientation` columns are
/// the body axes in world coordinates.
struct Body {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();
  Mat3 orientation = Mat3::Identity();
  Vec3 albedo = Vec3(0.85, 0.35, 0.25);

  static Body sphere(const Vec3& c, double r) {
    Body b;
    b.center = c;
    b.semi_axes = Vec3::Constant(r);
    return b;
  }

  Vec3 to_unit(const Vec3& p) const {
    return (orientation.transpose() * (p - center)).cwiseQuotient(semi_axes);
  }
  Vec3 dir_to_unit(const Vec3& d) const {
    return (orientation.transpose() * d).cwiseQuotient(semi_axes);
  }
  bool contains(const Vec3& p) const { return to_unit(p).squaredNorm() <= 1.0; }

  /// Entry distance of the ray, if the ray (t > 0) meets the body.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir) const {
    const Vec3 o = to_unit(origin), d = dir_to_unit(dir);
    const double a = d.squaredNorm(), b = 2.0 * o.dot(d), c = o.squaredNorm() - 1.0;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double t_far = (-b + sq) / (2.0 * a);
    if (t_far <= 0.0) return std::nullopt;
    return std::max(0.0, (-b - sq) / (2.0 * a));
  }

  Vec3 normal_at(const Vec3& p) const {
    const Vec3 u = to_unit(p).cwiseQuotient(semi_axes);
    return (orientation * u).normalized();
  }
};

struct Scene {
  std::vector<Body> bodies;
  std::uint64_t background_seed = 7;
  Vec3 light = Vec3(0.6, 0.2, 0.77).normalized();

  void validate() const {
    for (const auto& b : bodies)
      require((b.semi_axes.array() > 0).all(), "scene: semi-axes must be positive");
  }

  /// Bounding sphere (center, radius) of all bodies.
  std::pair<Vec3, double> bounds() const {
    if (bodies.empty()) return {Vec3::Zero(), 1.0};
    Vec3 c = Vec3::Zero();
    for (const auto& b : bodies) c += b.center;
    c /= static_cast<double>(bodies.size());
    double r = 0.0;
    for (const auto& b : bodies) r = std::max(r, (b.center - c).norm() + b.semi_axes.maxCoeff());
    return {c, r};
  }

  bool inside_any(const Vec3& p) const {
    for (const auto& b : bodies)
      if (b.contains(p)) return true;
    return false;
  }
};

/// Sphere plus an elongated ellipsoid "limb" that protrudes from it.
inline Scene default_scene(std::uint64_t background_seed = 7) {
  Scene s;
  s.background_seed = background_seed;
  s.bodies.push_back(Body::sphere(Vec3(0.0, 0.0, 0.0), 1.0));
  Body limb;
  limb.center = Vec3(0.95, 0.35, 0.25);
  limb.semi_axes = Vec3(0.85, 0.22, 0.22);
  limb.orientation = Eigen::AngleAxisd(0.5, Vec3::UnitZ()).toRotationMatrix() *
                     Eigen::AngleAxisd(-0.35, Vec3::UnitY()).toRotationMatrix();
  limb.albedo = Vec3(0.8, 0.45, 0.3);
  s.bodies.push_back(limb);
  return s;
}

enum class RigKind { ring, dome, two_layer };

struct RigSpec {
  RigKind kind = RigKind::ring;
  int camera_count = 16;
  double radius = 10.0;
  double elevation_deg = 30.0;  // ring height; dome/two-layer lower layer
  double upper_elevation_deg = 55.0;  // dome/two-layer upper layer
  double arc_deg = 360.0;  // azimuth span covered by the cameras
  Vec3 look_at = Vec3::Zero();
  double focal = 400.0;
  int image_width = 256;
  int image_height = 256;
  int heatmap_size = 64;
  double crop_margin = 1.15;

  void validate() const {
    require(camera_count >= 2, "rig: camera_count must be at least 2");
    require(radius > 0 && focal > 0 && heatmap_size > 0 && crop_margin >= 1.0,
            "rig: radius, focal, heatmap size and margin must be positive");
    require(arc_deg > 0 && arc_deg <= 360, "rig: arc must be in (0, 360]");
  }
};

namespace detail {

inline std::vector<Vec3> rig_positions(const RigSpec& spec) {
  std::vector<Vec3> out;
  const double deg = std::numbers::pi / 180.0;
  const int n = spec.camera_count;
  const double span = spec.arc_deg * deg;
  const double step = spec.arc_deg >= 360.0 ? span / n : span / std::max(1, n - 1);
  auto at = [&](double azimuth, double elevation) -> Vec3 {
    return spec.look_at + spec.radius * Vec3(std::cos(elevation) * std::cos(azimuth),
                                             std::cos(elevation) * std::sin(azimuth),
                                             std::sin(elevation));
  };
  for (int k = 0; k < n; ++k) {
    double elev = spec.elevation_deg * deg;
    double az = k * step;
    if (spec.kind == RigKind::two_layer && k % 2 == 1) elev = spec.upper_elevation_deg * deg;
    if (spec.kind == RigKind::dome) {
      // Golden-angle spiral over the cap between the two elevations.
      const double s = n > 1 ? static_cast<double>(k) / (n - 1) : 0.0;
      elev = (spec.elevation_deg + s * (spec.upper_elevation_deg - spec.elevation_deg)) * deg;
      az = k * std::numbers::pi * (3.0 - std::sqrt(5.0));
    }
    out.push_back(at(az, elev));
  }
  return out;
}

}  // namespace detail

/// Cameras looking at spec.look_at. Each crop is the square box around the
/// projected scene bounding sphere, enlarged by crop_margin.
inline std::vector<CameraView> make_rig(const RigSpec& spec, const Scene& scene) {
  spec.validate();
  const auto [bc, br] = scene.bounds();
  Mat3 K;
  K << spec.focal, 0, 0.5 * spec.image_width, 0, spec.focal, 0.5 * spec.image_height, 0, 0, 1;
  std::vector<CameraView> cams;
  const auto positions = detail::rig_positions(spec);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const Vec3& eye = positions[k];
    if (scene.inside_any(eye) || (eye - bc).norm() <= br)
      throw InvalidArgument("rig: camera " + std::to_string(k) + " is inside the scene");
    const Mat3 R = look_at_rotation(eye, spec.look_at, Vec3::UnitZ());
    const Vec3 t = -R * eye;
    const CameraView probe(K, R, t, spec.image_width, spec.image_height,
                           CameraView::full_crop(spec.image_width, spec.image_height));
    // Bounding box of the projected bounding sphere.
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    const int rings = 24, segs = 48;
    for (int i = 0; i <= rings; ++i)
      for (int j = 0; j < segs; ++j) {
        const double th = std::numbers::pi * i / rings, ph = 2 * std::numbers::pi * j / segs;
        const Vec3 X = bc + br * Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                                      std::cos(th));
        const auto p = project(probe, X);
        if (!p.in_front())
          throw InvalidArgument("rig: scene not in front of camera " + std::to_string(k));
        x0 = std::min(x0, p.pixel.x());
        x1 = std::max(x1, p.pixel.x());
        y0 = std::min(y0, p.pixel.y());
        y1 = std::max(y1, p.pixel.y());
      }
    const double side = spec.crop_margin * std::max(x1 - x0, y1 - y0);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const CropBox crop{cx - 0.5 * side, cy - 0.5 * side, side, side, spec.heatmap_size};
    if (crop.left < 0 || crop.top < 0 || crop.left + side > spec.image_width ||
        crop.top + side > spec.image_height)
      throw InvalidArgument("rig: scene bounding sphere leaves the image of camera " +
                            std::to_string(k));
    cams.emplace_back(K, R, t, spec.image_width, spec.image_height, crop);
  }
  return cams;
}

/// First body hit by the ray and its entry distance.
inline std::optional<std::pair<const Body*, double>> first_hit(const Scene& scene,
                                                                const Ray& ray) {
  std::optional<std::pair<const Body*, double>> best;
  for (const auto& b : scene.bodies) {
    const auto t = b.intersect(ray.origin, ray.direction);
    if (t && (!best || *t < best->second)) best = std::make_pair(&b, *t);
  }
  return best;
}

/// Ground-truth silhouette on the camera heatmap: 1 iff the ray through the
/// pixel center meets any body.
inline BinaryMask render_silhouette(const Scene& scene, const CameraView& cam) {
  const int size = cam.heatmap_size();
  BinaryMask out(size, size, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Ray ray = ray_from_heatmap(cam, Vec2(x, y));
      for (const auto& b : scene.bodies)
        if (b.intersect(ray.origin, ray.direction)) {
          out(x, y) = 1;
          break;
        }
    }
  return out;
}

/// Soft ground-truth probability. Pixel-center silhouettes fix the boundary
/// only to within a pixel, so the map is 1 up to `plateau_px` from the mask
/// and falls off as a Gaussian of the remaining distance beyond it.
inline ProbMap soft_probability(const BinaryMask& mask, double falloff_px = 1.5,
                                double plateau_px = 1.0) {
  require(falloff_px > 0 && plateau_px >= 0, "soft_probability: invalid falloff or plateau");
  ProbMap out(mask.width(), mask.height(), 0.0);
  const int reach = static_cast<int>(std::ceil(plateau_px + 4.0 * falloff_px));
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y)) {
        out(x, y) = 1.0;
        continue;
      }
      int best = reach * reach + 1;
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          const int d2 = dx * dx + dy * dy;
          if (d2 < best && mask.contains(x + dx, y + dy) && mask(x + dx, y + dy)) best = d2;
        }
      if (best > reach * reach) continue;
      const double excess = std::max(0.0, std::sqrt(static_cast<double>(best)) - plateau_px);
      out(x, y) = std::exp(-excess * excess / (2.0 * falloff_px * falloff_px));
    }
  return out;
}

struct FeatureStyle {
  double ambient = 0.2;
  int background_blobs = 14;
  double blob_sigma_min = 3.0, blob_sigma_max = 10.0;  // heatmap px
  Vec3 background_base = Vec3(0.3, 0.35, 0.4);
  // Minimum color distance between any noise-free background pixel and the
  // set of foreground colors {albedo * s : s in [ambient, 1]}.
  double separability_margin = 0.15;
  // Per-camera color gain, drawn uniformly from [1 - spread, 1 + spread] per
  // channel, as between unmatched cameras of one rig.
  double camera_gain_spread = 0.3;
};

/// Color distance to the nearest noise-free foreground color, and the
/// direction pointing away from it.
inline double foreground_color_distance(const Scene& scene, const FeatureStyle& style,
                                        const Vec3& color, Vec3* away = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : scene.bodies) {
    const double n2 = b.albedo.squaredNorm();
    const double s = n2 > 0 ? std::clamp(color.dot(b.albedo) / n2, style.ambient, 1.0) : 0.0;
    const Vec3 d = color - s * b.albedo;
    if (d.norm() < best) {
      best = d.norm();
      if (away) *away = d;
    }
  }
  return best;
}

/// Pushes a background color radially out of the margin around the
/// foreground color set.
inline Vec3 enforce_margin(const Scene& scene, const FeatureStyle& style, const Vec3& color) {
  if (style.separability_margin <= 0) return color;
  Vec3 away;
  const double d = foreground_color_distance(scene, style, color, &away);
  if (d >= style.separability_margin) return color;
  if (d < 1e-12) away = (style.background_base - color).normalized() * 1e-12;
  return color + away.normalized() * (style.separability_margin - d);
}

/// Lambertian-shaded foreground over a seeded blob texture, plus additive
/// Gaussian noise on the color channels and two normalized pixel-coordinate
/// channels in [-1, 1].
inline FeatureImage render_features(const Scene& scene, const CameraView& cam,
                                    double noise_level, std::uint64_t view_index = 0,
                                    const FeatureStyle& style = {}) {
  require(noise_level >= 0, "render_features: noise level must be non-negative");
  const int size = cam.heatmap_size();
  FeatureImage img(size, size, FeatureImage::kDefaultChannels);

  std::seed_seq seq{static_cast<std::uint32_t>(scene.background_seed),
                    static_cast<std::uint32_t>(scene.background_seed >> 32),
                    static_cast<std::uint32_t>(view_index), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  struct Blob {
    double x, y, s;
    Vec3 color;
  };
  std::vector<Blob> blobs;
  for (int k = 0; k < style.background_blobs; ++k) {
    Blob b;
    b.x = uni(rng) * size;
    b.y = uni(rng) * size;
    b.s = style.blob_sigma_min + uni(rng) * (style.blob_sigma_max - style.blob_sigma_min);
    b.color = Vec3(uni(rng), uni(rng), uni(rng));
    blobs.push_back(b);
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 gain = Vec3::Ones();
  for (int c = 0; c < 3; ++c)
    gain[c] = 1.0 + style.camera_gain_spread * (2.0 * uni(rng) - 1.0);

  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const Ray ray = ray_from_heatmap(cam, Vec2(x, y));
      Vec3 color;
      if (const auto hit = first_hit(scene, ray)) {
        const Vec3 p = ray.at(hit->second);
        const double lambert = std::max(0.0, hit->first->normal_at(p).dot(scene.light));
        color = hit->first->albedo * (style.ambient + (1.0 - style.ambient) * lambert);
      } else {
        color = style.background_base;
        double wsum = 1.0;
        for (const auto& b : blobs) {
          const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
          const double w = 3.0 * std::exp(-d2 / (2 * b.s * b.s));
          color += w * b.color;
          wsum += w;
        }
        color = enforce_margin(scene, style, color / wsum);
      }
      for (int c = 0; c < 3; ++c) img(x, y, c) = gain[c] * color[c] + noise_level * gauss(rng);
      img(x, y, 3) = size > 1 ? 2.0 * x / (size - 1) - 1.0 : 0.0;
      img(x, y, 4) = size > 1 ? 2.0 * y / (size - 1) - 1.0 : 0.0;
    }
  return img;
}

/// One view of a dataset. `label` is present only for labeled views.
struct DataView {
  FeatureImage features;
  CameraView camera;
  std::optional<BinaryMask> label;
};

struct Dataset {
  std::vector<DataView> views;
  std::vector<BinaryMask> truth;  // evaluation only, every view
  std::vector<int> labeled;
  std::vector<int> unlabeled;
};

/// Number of labeled views for a labeled fraction eta of n views.
inline int labeled_count(int n, double eta) {
  require(eta > 0.0 && eta < 1.0, "labeled fraction must lie in (0, 1)");
  const int k = static_cast<int>(std::lround(eta * n));
  if (k < 2)
    throw InvalidArgument("labeled fraction " + std::to_string(eta) + " of " +
                          std::to_string(n) + " views yields fewer than 2 labeled views");
  if (k >= n) throw InvalidArgument("labeled fraction leaves no unlabeled view");
  return k;
}

/// Seeded permutation of view indices; the first k are the labeled views, so
/// splits of one seed are nested across labeled counts.
inline std::vector<int> split_order(int n, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

inline Dataset make_dataset(const Scene& scene, const std::vector<CameraView>& cams,
                            double eta, std::uint64_t seed, double noise_level = 0.03,
                            const FeatureStyle& style = {}) {
  scene.validate();
  const int n = static_cast<int>(cams.size());
  const int k = labeled_count(n, eta);
  const auto order = split_order(n, seed);
  std::vector<std::uint8_t> is_labeled(cams.size(), 0);
  for (int i = 0; i < k; ++i) is_labeled[order[i]] = 1;

  Dataset ds;
  for (int v = 0; v < n; ++v) {
    DataView dv{render_features(scene, cams[v], noise_level, static_cast<std::uint64_t>(v), style),
                cams[v], std::nullopt};
    BinaryMask truth = render_silhouette(scene, cams[v]);
    if (is_labeled[v]) {
      dv.label = truth;
      ds.labeled.push_back(v);
    } else {
      ds.unlabeled.push_back(v);
    }
    ds.truth.push_back(std::move(truth));
    ds.views.push_back(std::move(dv));
  }
  return ds;
}

}  // namespace mvcs

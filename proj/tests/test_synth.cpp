// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mvcs/io.hpp"
#include "mvcs/synth.hpp"

namespace mvcs {
namespace {

Scene sphere_scene(const Vec3& c = Vec3::Zero(), double r = 1.0) {
  Scene s;
  s.bodies.push_back(Body::sphere(c, r));
  return s;
}

// Ray meets the unit-sphere image of the body: closest approach of the ray
// to the center, in body-normalized coordinates.
bool ray_hits(const Body& b, const Ray& ray) {
  const Vec3 o = b.to_unit(ray.origin), d = b.dir_to_unit(ray.direction);
  const double t = std::max(0.0, -o.dot(d) / d.squaredNorm());
  return (o + t * d).squaredNorm() <= 1.0;
}

Vec2 centroid(const BinaryMask& m) {
  Vec2 c = Vec2::Zero();
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(x, y)) c += Vec2(x, y);
  return c / static_cast<double>(m.count());
}

TEST(MakeRig, RingAxesEvenlySpaced) {
  RigSpec spec;
  spec.camera_count = 4;
  spec.elevation_deg = 0.0;
  const auto cams = make_rig(spec, default_scene());
  ASSERT_EQ(cams.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    const double c = cams[k].optical_axis().dot(cams[(k + 1) % 4].optical_axis());
    EXPECT_NEAR(c, 0.0, 1e-12);
    EXPECT_NEAR(cams[k].center().norm(), 10.0, 1e-12);
  }
}

TEST(MakeRig, EverySilhouetteNonEmpty) {
  const Scene scene = default_scene();
  for (RigKind kind : {RigKind::ring, RigKind::dome, RigKind::two_layer}) {
    RigSpec spec;
    spec.kind = kind;
    for (const auto& cam : make_rig(spec, scene))
      EXPECT_GT(render_silhouette(scene, cam).count(), 0u);
  }
}

TEST(MakeRig, SerializationRoundTrip) {
  const auto cams = make_rig(RigSpec{}, default_scene());
  std::istringstream is(format_rig(cams));
  const auto back = parse_rig(parse_config(is));
  ASSERT_EQ(back.size(), cams.size());
  for (std::size_t k = 0; k < cams.size(); ++k) EXPECT_TRUE(back[k] == cams[k]);
}

TEST(MakeRig, CameraInsideSceneThrows) {
  RigSpec spec;
  spec.radius = 0.5;
  EXPECT_THROW(make_rig(spec, default_scene()), InvalidArgument);
  spec = RigSpec{};
  spec.camera_count = 1;
  EXPECT_THROW(make_rig(spec, default_scene()), InvalidArgument);
}

TEST(RenderSilhouette, DiscAreaMatchesProjectedRadius) {
  const Scene scene = sphere_scene();
  RigSpec spec;
  spec.heatmap_size = 128;
  const auto cams = make_rig(spec, scene);
  const auto& cam = cams[0];
  const double d = cam.center().norm();
  const double r_px = spec.focal / std::sqrt(d * d - 1.0) * cam.crop().scale_x();
  // The rig aims at the sphere center, so the silhouette is a disc.
  const double area = std::numbers::pi * r_px * r_px;
  EXPECT_NEAR(render_silhouette(scene, cam).count(), area, 0.02 * area);
}

TEST(RenderSilhouette, EmptySceneIsEmpty) {
  const auto cams = make_rig(RigSpec{}, default_scene());
  EXPECT_EQ(render_silhouette(Scene{}, cams[0]).count(), 0u);
}

TEST(RenderSilhouette, TranslationShiftsCentroid) {
  const auto cams = make_rig(RigSpec{}, sphere_scene(Vec3::Zero(), 1.4));
  const auto& cam = cams[2];
  const Vec3 shift(0.3, 0.0, 0.0);
  const auto a = render_silhouette(sphere_scene(), cam);
  const auto b = render_silhouette(sphere_scene(shift), cam);
  const Vec2 expected = cam.to_heatmap(project(cam, shift).pixel) -
                        cam.to_heatmap(project(cam, Vec3::Zero()).pixel);
  EXPECT_LT((centroid(b) - centroid(a) - expected).norm(), 0.5);
}

TEST(RenderSilhouette, AgreesWithClosestApproachTest) {
  const Scene scene = default_scene();
  const auto cams = make_rig(RigSpec{}, scene);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 63.5);
  for (int v : {0, 5, 11}) {
    const auto& cam = cams[v];
    const auto mask = render_silhouette(scene, cam);
    std::size_t disagree = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const Ray ray = ray_from_heatmap(cam, Vec2(x, y));
        bool hit = false;
        for (const auto& b : scene.bodies) hit = hit || ray_hits(b, ray);
        disagree += hit != (mask(x, y) != 0);
      }
    for (int k = 0; k < 10000; ++k) {
      const Ray ray = ray_from_heatmap(cam, Vec2(u(rng), u(rng)));
      bool hit = false, first = false;
      for (const auto& b : scene.bodies) hit = hit || ray_hits(b, ray);
      first = first_hit(scene, ray).has_value();
      disagree += hit != first;
    }
    EXPECT_EQ(disagree, 0u) << "view " << v;
  }
}

TEST(SoftProbability, PlateauAndFalloff) {
  BinaryMask m(9, 1, 0);
  m(4, 0) = 1;
  const ProbMap p = soft_probability(m, 1.5, 1.0);
  EXPECT_EQ(p(4, 0), 1.0);
  EXPECT_EQ(p(3, 0), 1.0);
  EXPECT_NEAR(p(2, 0), std::exp(-1.0 / (2 * 2.25)), 1e-12);
  EXPECT_LT(p(0, 0), p(1, 0));
}

TEST(RenderFeatures, EmptySceneIsBackgroundTexture) {
  const auto cams = make_rig(RigSpec{}, default_scene());
  Scene empty;
  FeatureStyle style;
  style.camera_gain_spread = 0.0;
  const auto f = render_features(empty, cams[0], 0.0, 0, style);
  // The blob texture varies across the image.
  double lo = 1e9, hi = -1e9;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      lo = std::min(lo, f(x, y, 0));
      hi = std::max(hi, f(x, y, 0));
    }
  EXPECT_GT(hi - lo, 0.05);
  EXPECT_DOUBLE_EQ(f(0, 0, 3), -1.0);
  EXPECT_DOUBLE_EQ(f(63, 63, 4), 1.0);
}

TEST(RenderFeatures, BackgroundKeepsSeparabilityMargin) {
  const Scene scene = default_scene();
  const auto cams = make_rig(RigSpec{}, scene);
  FeatureStyle style;
  style.camera_gain_spread = 0.0;
  for (int v : {0, 7, 12}) {
    const auto f = render_features(scene, cams[v], 0.0, v, style);
    const auto mask = render_silhouette(scene, cams[v]);
    Vec3 fg = Vec3::Zero(), bg = Vec3::Zero();
    std::size_t nf = 0, nb = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) {
        const Vec3 c(f(x, y, 0), f(x, y, 1), f(x, y, 2));
        if (mask(x, y)) {
          fg += c;
          ++nf;
        } else {
          bg += c;
          ++nb;
          EXPECT_GE(foreground_color_distance(scene, style, c), style.separability_margin - 1e-9);
        }
      }
    EXPECT_GE((fg / nf - bg / nb).norm(), style.separability_margin);
  }
}

TEST(RenderFeatures, Deterministic) {
  const Scene scene = default_scene();
  const auto cams = make_rig(RigSpec{}, scene);
  EXPECT_EQ(render_features(scene, cams[3], 0.03, 3), render_features(scene, cams[3], 0.03, 3));
  EXPECT_FALSE(render_features(scene, cams[3], 0.03, 3) ==
               render_features(scene, cams[3], 0.03, 4));
}

TEST(MakeDataset, SplitSizesAndDeterminism) {
  const Scene scene = default_scene();
  const auto cams = make_rig(RigSpec{}, scene);
  const auto a = make_dataset(scene, cams, 0.125, 9);
  EXPECT_EQ(a.labeled.size(), 2u);
  EXPECT_EQ(a.unlabeled.size(), 14u);
  for (int v : a.labeled) EXPECT_TRUE(a.views[v].label.has_value());
  for (int v : a.unlabeled) EXPECT_FALSE(a.views[v].label.has_value());
  EXPECT_EQ(a.truth.size(), 16u);
  EXPECT_EQ(make_dataset(scene, cams, 0.5, 9).labeled.size(), 8u);
  const auto b = make_dataset(scene, cams, 0.125, 9);
  EXPECT_EQ(a.labeled, b.labeled);
  EXPECT_EQ(a.views[5].features, b.views[5].features);
  EXPECT_THROW(make_dataset(scene, cams, 0.01, 9), InvalidArgument);
}

TEST(MakeDataset, SplitsAreNested) {
  const auto order = split_order(16, 4);
  for (int k : {2, 5, 8}) {
    const int n = labeled_count(16, k / 16.0);
    EXPECT_EQ(n, k);
    std::vector<int> first(order.begin(), order.begin() + n);
    std::sort(first.begin(), first.end());
    const Scene scene = default_scene();
    const auto ds = make_dataset(scene, make_rig(RigSpec{}, scene), k / 16.0, 4);
    EXPECT_EQ(ds.labeled, first);
  }
}

}  // namespace
}  // namespace mvcs

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "mvcs/geometry.hpp"
#include "mvcs/synth.hpp"

namespace mvcs {
namespace {

CameraView make_camera(const Mat3& K, const Mat3& R, const Vec3& t, int w = 100, int h = 100) {
  return CameraView(K, R, t, w, h, CameraView::full_crop(w, h));
}

// Camera at distance 4..6 from the origin looking roughly at it.
CameraView random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3 eye(u(rng), u(rng), u(rng));
  eye = eye.normalized() * (5.0 + u(rng));
  const Vec3 aim(0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
  Vec3 up(0, 0, 1);
  if (std::abs((aim - eye).normalized().dot(up)) > 0.95) up = Vec3(0, 1, 0);
  const Mat3 R = look_at_rotation(eye, aim, up);
  Mat3 K;
  K << 300 + 50 * u(rng), 0.5 * u(rng), 160 + 5 * u(rng), 0, 310 + 50 * u(rng),
      120 + 5 * u(rng), 0, 0, 1;
  return make_camera(K, R, -R * eye, 320, 240);
}

TEST(Projection, IdentityCamera) {
  const auto cam = make_camera(Mat3::Identity(), Mat3::Identity(), Vec3::Zero());
  const auto p = project(cam, Vec3(0, 0, 1));
  EXPECT_EQ(p.pixel, Vec2(0, 0));
  EXPECT_EQ(p.depth, 1.0);
}

TEST(Projection, PrincipalPointOffset) {
  Mat3 K;
  K << 100, 0, 50, 0, 100, 50, 0, 0, 1;
  const auto cam = make_camera(K, Mat3::Identity(), Vec3::Zero());
  const auto p = project(cam, Vec3(0.5, 0, 1));
  EXPECT_DOUBLE_EQ(p.pixel.x(), 100.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 50.0);
  EXPECT_DOUBLE_EQ(p.depth, 1.0);
}

TEST(Projection, PointOnAxisIsInFront) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto cam = random_camera(rng);
    EXPECT_TRUE(project(cam, cam.center() + cam.optical_axis()).in_front());
    EXPECT_FALSE(project(cam, cam.center() - cam.optical_axis()).in_front());
  }
}

TEST(Projection, RejectsInvalidCameras) {
  Mat3 K = Mat3::Identity();
  K(2, 2) = 2.0;
  EXPECT_THROW(make_camera(K, Mat3::Identity(), Vec3::Zero()), InvalidArgument);
  Mat3 R = Mat3::Identity();
  R(0, 0) = -1.0;  // reflection
  EXPECT_THROW(make_camera(Mat3::Identity(), R, Vec3::Zero()), InvalidArgument);
  EXPECT_THROW(CameraView(Mat3::Identity(), Mat3::Identity(), Vec3::Zero(), 10, 10,
                          CropBox{5, 5, 10, 10, 8}),
               InvalidArgument);
}

TEST(RayFromPixel, IdentityCameraAxis) {
  const auto cam = make_camera(Mat3::Identity(), Mat3::Identity(), Vec3::Zero());
  const Ray r = ray_from_pixel(cam, Vec2(0, 0));
  EXPECT_NEAR((r.direction - Vec3(0, 0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(r.origin.norm(), 0.0, 1e-15);
}

TEST(RayFromPixel, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.0, 320.0), uy(0.0, 240.0);
  double worst = 0.0;
  for (int c = 0; c < 10; ++c) {
    const auto cam = random_camera(rng);
    for (int k = 0; k < 100; ++k) {
      const Vec2 x(ux(rng), uy(rng));
      const Ray ray = ray_from_pixel(cam, x);
      for (double lambda : {0.5, 1.0, 10.0}) {
        const auto p = project(cam, ray.at(lambda));
        ASSERT_TRUE(p.in_front());
        worst = std::max(worst, (p.pixel - x).norm());
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(RayFromPixel, HeatmapRoundTrip) {
  const CameraView cam(Mat3::Identity() * 1.0, Mat3::Identity(), Vec3::Zero(), 200, 100,
                       CropBox{10, 20, 100, 50, 64});
  const Vec2 h(12.25, 40.5);
  EXPECT_NEAR((cam.to_heatmap(cam.from_heatmap(h)) - h).norm(), 0.0, 1e-12);
}

TEST(FundamentalMatrix, EpipolarConstraint) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int pair = 0; pair < 10; ++pair) {
    const auto a = random_camera(rng);
    const auto b = random_camera(rng);
    const Mat3 F = fundamental_matrix(a, b);
    EXPECT_NEAR(F.norm(), 1.0, 1e-12);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vec3 X(u(rng), u(rng), u(rng));
      const Vec2 xa = project(a, X).pixel, xb = project(b, X).pixel;
      const Vec3 ha(xa.x(), xa.y(), 1.0), hb(xb.x(), xb.y(), 1.0);
      worst = std::max(worst, std::abs(hb.dot(F * ha)) / (ha.norm() * hb.norm()));
    }
    EXPECT_LT(worst, 1e-8);
  }
}

TEST(FundamentalMatrix, CanonicalTranslation) {
  const auto a = make_camera(Mat3::Identity(), Mat3::Identity(), Vec3::Zero());
  const auto b = make_camera(Mat3::Identity(), Mat3::Identity(), Vec3(-1, 0, 0));
  const Mat3 F = fundamental_matrix(a, b);
  Mat3 expected;
  expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  expected /= expected.norm();
  const double same = (F - expected).norm(), flipped = (F + expected).norm();
  EXPECT_LT(std::min(same, flipped), 1e-12);
}

TEST(FundamentalMatrix, RankTwo) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const Mat3 F = fundamental_matrix(random_camera(rng), random_camera(rng));
    const Eigen::JacobiSVD<Mat3> svd(F);
    const Vec3 s = svd.singularValues();
    EXPECT_GT(s(1), 1e-6);
    EXPECT_LT(s(2), 1e-12 * s(0));
  }
}

TEST(FundamentalMatrix, SwappedPairIsTranspose) {
  std::mt19937_64 rng(8);
  const auto a = random_camera(rng), b = random_camera(rng);
  const Mat3 ab = fundamental_matrix(a, b), ba = fundamental_matrix(b, a);
  const double d = std::min((ab.transpose() - ba).norm(), (ab.transpose() + ba).norm());
  EXPECT_LT(d, 1e-12);
}

TEST(FundamentalMatrix, CoincidentCentersThrow) {
  const auto a = make_camera(Mat3::Identity(), Mat3::Identity(), Vec3::Zero());
  const Mat3 R = Eigen::AngleAxisd(0.3, Vec3::UnitY()).toRotationMatrix();
  const auto b = make_camera(Mat3::Identity(), R, Vec3::Zero());
  EXPECT_THROW(fundamental_matrix(a, b), DegenerateError);
}

TEST(EpipolarPoint, LiesOnEpipolarLine) {
  std::mt19937_64 rng(17);
  const auto t = random_camera(rng), s = random_camera(rng);
  const Mat3 F = fundamental_matrix(t, s);
  const Vec2 x(150.0, 100.0);
  const Vec3 l = F * Vec3(x.x(), x.y(), 1.0);
  for (int k = 0; k < 20; ++k) {
    const double lambda = 0.1 * std::pow(1000.0, k / 19.0);
    const auto p = epipolar_point(t, s, x, lambda);
    const Vec3 h(p.pixel.x(), p.pixel.y(), 1.0);
    EXPECT_LT(std::abs(h.dot(l)) / (l.head<2>().norm()), 1e-6) << "lambda " << lambda;
  }
}

TEST(EpipolarPoint, MatchesKnownPoint) {
  std::mt19937_64 rng(29);
  const auto t = random_camera(rng), s = random_camera(rng);
  const Vec3 X(0.2, -0.1, 0.3);
  const auto pt = project(t, X);
  const double lambda = (X - t.center()).norm();
  const auto p = epipolar_point(t, s, pt.pixel, lambda);
  EXPECT_LT((p.pixel - project(s, X).pixel).norm(), 1e-6);
}

TEST(EpipolarPoint, SphereCenterLandsInsideSilhouette) {
  const Scene scene = default_scene();
  RigSpec spec;
  spec.camera_count = 8;
  const auto cams = make_rig(spec, scene);
  const Body& sphere = scene.bodies.front();
  const auto t = cams[0], s = cams[3];
  const Vec2 center_px = project(t, sphere.center).pixel;
  const double lambda = (sphere.center - t.center()).norm();
  const auto p = epipolar_point(t, s, center_px, lambda);
  const Vec2 h = s.to_heatmap(p.pixel);
  const BinaryMask mask = render_silhouette(scene, s);
  EXPECT_TRUE(sample_nearest(mask, h.x(), h.y()));
}

TEST(LookAt, AxesConvention) {
  const Mat3 R = look_at_rotation(Vec3(0, -5, 0), Vec3::Zero(), Vec3(0, 0, 1));
  EXPECT_NEAR((R.row(2).transpose() - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
  // Image y points down, opposite to world up.
  EXPECT_NEAR((R.row(1).transpose() - Vec3(0, 0, -1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
  EXPECT_THROW(look_at_rotation(Vec3(0, 0, 5), Vec3::Zero(), Vec3(0, 0, 1)), DegenerateError);
}

}  // namespace
}  // namespace mvcs

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "mvcs/error.hpp"

namespace mvcs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-aligned crop of the full image, resized to an out_size x out_size
/// heatmap (the network input/output resolution).
struct CropBox {
  double left = 0.0;    // u_x
  double top = 0.0;     // u_y
  double width = 1.0;   // h_bx
  double height = 1.0;  // h_by
  int out_size = 1;     // h_c

  double scale_x() const { return out_size / width; }
  double scale_y() const { return out_size / height; }

  friend bool operator==(const CropBox&, const CropBox&) = default;
};

/// Calibrated pinhole camera: x ~ K (R X + t). Poses are absolute; relative
/// poses are derived per pair so that any view can act as the target.
class CameraView {
 public:
  CameraView() = default;

  CameraView(Mat3 intrinsics, Mat3 rotation, Vec3 translation, int image_width,
             int image_height, CropBox crop)
      : K_(std::move(intrinsics)),
        R_(std::move(rotation)),
        t_(std::move(translation)),
        width_(image_width),
        height_(image_height),
        crop_(crop) {
    validate();
  }

  /// Crop covering the full image at native resolution (requires a square
  /// image when used as a heatmap).
  static CropBox full_crop(int image_width, int image_height) {
    return CropBox{0.0, 0.0, static_cast<double>(image_width),
                   static_cast<double>(image_height), image_width};
  }

  const Mat3& intrinsics() const { return K_; }
  const Mat3& rotation() const { return R_; }
  const Vec3& translation() const { return t_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }
  const CropBox& crop() const { return crop_; }

  int heatmap_size() const { return crop_.out_size; }

  Vec3 center() const { return -R_.transpose() * t_; }
  Vec3 optical_axis() const { return R_.row(2).transpose(); }

  /// Full-image pixel -> heatmap coordinates (the crop homography).
  Vec2 to_heatmap(const Vec2& pixel) const {
    return {crop_.scale_x() * (pixel.x() - crop_.left),
            crop_.scale_y() * (pixel.y() - crop_.top)};
  }
  Vec2 from_heatmap(const Vec2& h) const {
    return {h.x() / crop_.scale_x() + crop_.left,
            h.y() / crop_.scale_y() + crop_.top};
  }

  bool operator==(const CameraView& o) const {
    return K_ == o.K_ && R_ == o.R_ && t_ == o.t_ && width_ == o.width_ &&
           height_ == o.height_ && crop_ == o.crop_;
  }

 private:
  void validate() const {
    require(width_ > 0 && height_ > 0, "camera image size must be positive");
    require(K_.allFinite() && R_.allFinite() && t_.allFinite(),
            "camera parameters must be finite");
    require(K_(1, 0) == 0.0 && K_(2, 0) == 0.0 && K_(2, 1) == 0.0 &&
                K_(2, 2) == 1.0,
            "intrinsics must be upper-triangular with K(2,2) = 1");
    require(K_(0, 0) > 0.0 && K_(1, 1) > 0.0,
            "intrinsics must have positive focal lengths");
    const double ortho = (R_ * R_.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    require(ortho <= 1e-9 && std::abs(R_.determinant() - 1.0) <= 1e-9,
            "rotation must be orthonormal with determinant +1");
    require(crop_.out_size > 0 && crop_.width > 0 && crop_.height > 0,
            "crop box must have positive size");
    require(crop_.left >= 0 && crop_.top >= 0 &&
                crop_.left + crop_.width <= width_ + 1e-9 &&
                crop_.top + crop_.height <= height_ + 1e-9,
            "crop box must lie within the image frame");
  }

  Mat3 K_ = Mat3::Identity();
  Mat3 R_ = Mat3::Identity();
  Vec3 t_ = Vec3::Zero();
  int width_ = 1;
  int height_ = 1;
  CropBox crop_{};
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  Vec3 at(double lambda) const { return origin + lambda * direction; }
};

struct Projection {
  Vec2 pixel;
  double depth = 0.0;

  bool in_front() const { return depth > 0.0; }
};

/// Full-image pixel of a world point and its depth along the optical axis.
/// A non-positive depth means the point is behind the camera; the pixel is
/// still the dehomogenized value and the caller decides what to do with it.
inline Projection project(const CameraView& cam, const Vec3& point) {
  const Vec3 h = cam.intrinsics() * (cam.rotation() * point + cam.translation());
  return {Vec2(h.x() / h.z(), h.y() / h.z()), h.z()};
}

inline Ray ray_from_pixel(const CameraView& cam, const Vec2& pixel) {
  const Vec3 local = cam.intrinsics().triangularView<Eigen::Upper>().solve(
      Vec3(pixel.x(), pixel.y(), 1.0));
  return {cam.center(), (cam.rotation().transpose() * local).normalized()};
}

inline Ray ray_from_heatmap(const CameraView& cam, const Vec2& heatmap_pixel) {
  return ray_from_pixel(cam, cam.from_heatmap(heatmap_pixel));
}

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

inline bool coincident_centers(const CameraView& a, const CameraView& b,
                               double tol = 1e-9) {
  const Vec3 ca = a.center(), cb = b.center();
  return (ca - cb).norm() <= tol * std::max(1.0, std::max(ca.norm(), cb.norm()));
}

/// F with x_s^T F x_t = 0 for full-image pixels of target and source.
/// Normalized to unit Frobenius norm, with the largest-magnitude entry
/// (first in row-major order on ties) positive.
inline Mat3 fundamental_matrix(const CameraView& target, const CameraView& source) {
  if (coincident_centers(target, source))
    throw DegenerateError("fundamental matrix: coincident camera centers");
  const Mat3 R_rel = source.rotation() * target.rotation().transpose();
  const Vec3 t_rel = source.translation() - R_rel * target.translation();
  const Mat3 E = skew(t_rel) * R_rel;
  const Mat3 Ks_inv = source.intrinsics().inverse();
  const Mat3 Kt_inv = target.intrinsics().inverse();
  Mat3 F = Ks_inv.transpose() * E * Kt_inv;
  F /= F.norm();
  int best = 0;
  for (int i = 1; i < 9; ++i)
    if (std::abs(F(i / 3, i % 3)) > std::abs(F(best / 3, best % 3)) * (1 + 1e-12))
      best = i;
  if (F(best / 3, best % 3) < 0) F = -F;
  return F;
}

/// Projection into `source` of the point at distance `lambda` along the ray
/// of full-image `pixel` in `target`. Check in_front() on the result.
inline Projection epipolar_point(const CameraView& target, const CameraView& source,
                                 const Vec2& pixel, double lambda) {
  require(lambda > 0.0, "epipolar_point: lambda must be positive");
  return project(source, ray_from_pixel(target, pixel).at(lambda));
}

/// Camera at `eye` looking at `target`, image y axis aligned with -up.
inline Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = (-up).cross(z);
  if (x.norm() < 1e-12) throw DegenerateError("look_at: view direction parallel to up");
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return R;
}

}  // namespace mvcs

#pragma once

#include <array>
#include <cmath>

#include "reflectdepth/errors.hpp"

namespace reflectdepth {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
  }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
};

struct Mat3 {
  // Row-major.
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return Mat3{}; }

  double operator()(int r, int c) const { return m[3 * r + c]; }
  double& operator()(int r, int c) { return m[3 * r + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }
  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }
  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  // Rotation about an axis, angle in radians.
  static Mat3 rotation(const Vec3& axis, double angle) {
    Vec3 a = axis.normalized();
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 r;
    r.m = {t * a.x * a.x + c,       t * a.x * a.y - s * a.z,
           t * a.x * a.z + s * a.y, t * a.x * a.y + s * a.z,
           t * a.y * a.y + c,       t * a.y * a.z - s * a.x,
           t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x,
           t * a.z * a.z + c};
    return r;
  }
};

// Rigid transform y = R x + t.
struct RigidTransform {
  Mat3 rotation;
  Vec3 translation;

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    Mat3 rt = rotation.transposed();
    return {rt, -(rt * translation)};
  }

  // this ∘ other: applies other first.
  RigidTransform compose(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  bool is_rigid(double tol = 1e-9) const {
    Mat3 rtr = rotation.transposed() * rotation;
    double dev = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        dev = std::max(dev, std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)));
    return dev <= tol && std::abs(rotation.det() - 1.0) <= tol;
  }
};

// Zero-skew pinhole intrinsics.
struct Intrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
      throw InvalidArgument("intrinsics: fx and fy must be positive");
  }
};

// Pose is world-from-camera.
struct Camera {
  Intrinsics intrinsics;
  RigidTransform pose = RigidTransform::identity();

  void validate(double tol = 1e-9) const {
    intrinsics.validate();
    if (!pose.is_rigid(tol))
      throw InvalidArgument("camera: pose rotation is not a proper rotation");
  }
};

// Reference-to-source camera transform: pose_s^-1 ∘ pose_r.
inline RigidTransform relative_transform(const Camera& reference,
                                         const Camera& source) {
  return source.pose.inverse().compose(reference.pose);
}

}  // namespace reflectdepth

#include "stab360/sphere.hpp"

#include <algorithm>
#include <cmath>

#include "stab360/error.hpp"

namespace stab360 {

Bearing::Bearing(const Vec3& direction) {
  const double n = direction.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kDegenerateGeometry, "bearing from zero or non-finite vector");
  }
  v_ = direction / n;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Vec3 rotate_rodrigues(const Vec3& axis, double angle, const Vec3& p) {
  if (std::abs(axis.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "rotation axis must be unit-norm");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return p * c + axis.cross(p) * s + axis * (axis.dot(p) * (1.0 - c));
}

Rotation exp_rotation(const Vec3& w) {
  const double theta = w.norm();
  if (theta < 1e-12) {
    Rotation q(1.0, 0.5 * w.x(), 0.5 * w.y(), 0.5 * w.z());
    return q.normalized();
  }
  const double half = 0.5 * theta;
  const Vec3 v = w * (std::sin(half) / theta);
  return Rotation(std::cos(half), v.x(), v.y(), v.z());
}

Vec3 log_rotation(const Rotation& q_in) {
  Rotation q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double s = q.vec().norm();
  if (s < 1e-12) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(s, q.w());
  return q.vec() * (angle / s);
}

double rotation_angle(const Rotation& q) {
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Rotation axis_angle(const Vec3& axis, double angle) {
  return Rotation(Eigen::AngleAxisd(angle, axis.normalized()));
}

Rotation from_yaw_pitch_roll(double yaw, double pitch, double roll) {
  return Rotation(Eigen::AngleAxisd(yaw, Vec3::UnitY())) *
         Rotation(Eigen::AngleAxisd(pitch, Vec3::UnitX())) *
         Rotation(Eigen::AngleAxisd(roll, Vec3::UnitZ()));
}

Vec3 to_yaw_pitch_roll(const Rotation& q) {
  const Mat3 r = q.toRotationMatrix();
  const double pitch = std::asin(std::clamp(-r(1, 2), -1.0, 1.0));
  const double yaw = std::atan2(r(0, 2), r(2, 2));
  const double roll = std::atan2(r(1, 0), r(1, 1));
  return Vec3(yaw, pitch, roll);
}

Vec3 bearing_from_lonlat(double lon, double lat) {
  const double cl = std::cos(lat);
  return Vec3(cl * std::sin(lon), -std::sin(lat), cl * std::cos(lon));
}

Vec2 lonlat_from_vec(const Vec3& v) {
  const double horiz = std::hypot(v.x(), v.z());
  return Vec2(std::atan2(v.x(), v.z()), std::atan2(-v.y(), horiz));
}

Vec3 er_continuous_to_bearing(const ErGeometry& g, double x, double y) {
  const double lon = x / g.width * 2.0 * kPi - kPi;
  const double lat = 0.5 * kPi - y / g.height * kPi;
  return bearing_from_lonlat(lon, lat);
}

Vec2 er_continuous_from_bearing(const ErGeometry& g, const Vec3& v) {
  const Vec2 ll = lonlat_from_vec(v);
  double x = 0.0;
  if (std::hypot(v.x(), v.z()) > 1e-12 * v.norm()) {
    x = (ll.x() + kPi) / (2.0 * kPi) * g.width;
    if (x >= g.width) x -= g.width;
    if (x < 0.0) x += g.width;
  }
  const double y = (0.5 * kPi - ll.y()) / kPi * g.height;
  return Vec2(x, y);
}

Bearing er_to_bearing(const ErGeometry& g, const Vec2& pixel) {
  if (!(pixel.x() >= 0.0 && pixel.x() < g.width && pixel.y() >= 0.0 && pixel.y() < g.height)) {
    throw Error(ErrorCode::kInvalidArgument, "ER pixel out of range");
  }
  return Bearing(er_continuous_to_bearing(g, pixel.x(), pixel.y()));
}

Vec2 er_to_pixel(const ErGeometry& g, const Vec3& bearing) {
  return er_continuous_from_bearing(g, bearing);
}

double signed_angle_in_plane(const Vec3& ref, const Vec3& target, const Vec3& normal) {
  if (std::abs(ref.dot(normal)) > 1e-6) {
    throw Error(ErrorCode::kInvalidArgument, "reference is not in the plane");
  }
  Vec3 proj = target - target.dot(normal) * normal;
  const double n = proj.norm();
  if (n < 1e-9) {
    throw Error(ErrorCode::kDegenerateGeometry, "target projects onto the plane normal");
  }
  proj /= n;
  return std::atan2(ref.cross(proj).dot(normal), ref.dot(proj));
}

Rotation align_hemisphere(const Rotation& ref, const Rotation& q) {
  if (ref.coeffs().dot(q.coeffs()) < 0.0) {
    return Rotation(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

double quat_path_difference(const Rotation& qa, const Rotation& qb, int p) {
  const Eigen::Vector4d d = qa.coeffs() - align_hemisphere(qa, qb).coeffs();
  switch (p) {
    case 1: return d.cwiseAbs().sum();
    case 2: return d.norm();
    default: throw Error(ErrorCode::kInvalidArgument, "norm must be 1 or 2");
  }
}

}  // namespace stab360

#pragma once

// Spherical geometry primitives shared by every module.
//
// Conventions, fixed project-wide:
//   * Camera coordinates are right-handed: +x right, +y down, +z forward.
//     The front ("true north") vector is (0,0,1), the back vector (0,0,-1).
//   * Rotations are Hamilton unit quaternions. Files store them in
//     (w, x, y, z) order.
//   * Equirectangular (ER) frames: column x in [0, width) maps linearly to
//     longitude [-pi, pi), row y in [0, height) maps to latitude
//     [pi/2, -pi/2]. Longitude 0 / latitude 0 is the front vector, so the
//     image center is the front direction.

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace stab360 {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rotation = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline Vec3 front_vector() { return Vec3(0.0, 0.0, 1.0); }
inline Vec3 back_vector() { return Vec3(0.0, 0.0, -1.0); }

/// A point on the unit viewing sphere.
///
/// Construction normalizes the input; a zero vector is rejected with
/// degenerate-geometry.
class Bearing {
 public:
  Bearing() : v_(0.0, 0.0, 1.0) {}
  explicit Bearing(const Vec3& direction);
  Bearing(double x, double y, double z) : Bearing(Vec3(x, y, z)) {}

  const Vec3& vec() const { return v_; }
  operator const Vec3&() const { return v_; }  // NOLINT(google-explicit-constructor)

  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

 private:
  Vec3 v_;
};

/// Equirectangular frame size in pixels.
struct ErGeometry {
  int width = 1920;
  int height = 960;
};

Mat3 skew(const Vec3& v);

/// Angle in [0, pi] between two (not necessarily unit) vectors.
double angle_between(const Vec3& a, const Vec3& b);

/// Rotates p about a unit axis by angle (Rodrigues' formula).
/// Throws invalid-argument when |axis| deviates from 1 by more than 1e-6.
Vec3 rotate_rodrigues(const Vec3& axis, double angle, const Vec3& p);

/// Rotation by the rotation vector w (axis * angle).
Rotation exp_rotation(const Vec3& w);

/// Rotation vector (axis * angle) of q, angle in [0, pi].
Vec3 log_rotation(const Rotation& q);

/// Rotation angle of q in radians, in [0, pi].
double rotation_angle(const Rotation& q);

Rotation axis_angle(const Vec3& axis, double angle);

// Yaw about +y, pitch about +x, roll about +z: R = Ry(yaw) * Rx(pitch) * Rz(roll).
Rotation from_yaw_pitch_roll(double yaw, double pitch, double roll);
Vec3 to_yaw_pitch_roll(const Rotation& q);

// Continuous ER helpers without range checks. Longitude/latitude in radians.
Vec3 bearing_from_lonlat(double lon, double lat);
Vec2 lonlat_from_vec(const Vec3& v);
Vec3 er_continuous_to_bearing(const ErGeometry& g, double x, double y);
Vec2 er_continuous_from_bearing(const ErGeometry& g, const Vec3& v);

/// Pixel -> bearing. Throws invalid-argument outside [0,width) x [0,height).
Bearing er_to_bearing(const ErGeometry& g, const Vec2& pixel);

/// Bearing -> pixel. At the exact poles the column is 0 by convention.
Vec2 er_to_pixel(const ErGeometry& g, const Vec3& bearing);

/// Projects target onto the plane with the given unit normal and returns the
/// signed angle from ref to that projection (right-hand rule about normal).
/// Throws invalid-argument when ref is not perpendicular to normal (1e-6) and
/// degenerate-geometry when the projection vanishes.
double signed_angle_in_plane(const Vec3& ref, const Vec3& target, const Vec3& normal);

/// L_p norm (p = 1 or 2) of the 4-vector difference qa - qb after flipping
/// qb into qa's hemisphere.
double quat_path_difference(const Rotation& qa, const Rotation& qb, int p);

/// Flips q (if needed) so that it lies in the same hemisphere as ref.
Rotation align_hemisphere(const Rotation& ref, const Rotation& q);

}  // namespace stab360

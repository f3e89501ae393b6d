#pragma once

// Synthetic two-view scenes and multi-frame sequences with ground truth.

#include <cstdint>
#include <vector>

#include "stab360/motion.hpp"
#include "stab360/rng.hpp"
#include "stab360/tracks.hpp"

namespace stab360 {

struct SceneParams {
  double tau = 2.0;         // max camera separation
  double kappa_deg = 30.0;  // max |Euler angle|
  double gamma = 8.0;       // max point distance from the origin
  int n_points = 500;
  double outlier_fraction = 0.0;
  double noise_deg = 0.0;  // RMS angular offset of the second bearing
  double fov_deg = 360.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Scene {
  RelativeMotion truth;  // q ~ R p with the second camera displaced along t
  Vec3 camera2_position = Vec3::Zero();
  std::vector<Correspondence> correspondences;
  std::vector<bool> outlier;
};

/// Camera 1 at the origin, camera 2 uniform in the tau-ball with uniform
/// Euler angles in [-kappa, kappa]; points uniform in the gamma-ball at
/// least 0.1 from both centers. With fov < 360 both bearings must lie in the
/// cone around +z. Throws generation-failure after 10^6 rejected attempts.
Scene generate_scene(const SceneParams& params);

struct PoseError {
  double rotation_deg = 0.0;
  double translation_deg = 0.0;  // sign tolerant
};

PoseError pose_error(const RelativeMotion& estimate, const RelativeMotion& truth);

/// Bearing rotated by an isotropic Gaussian tangent-plane offset whose RMS angle is sigma.
Vec3 perturb_bearing(const Vec3& b, double sigma_rad, Rng& rng);

struct SequenceParams {
  int frames = 100;
  int points = 200;             // tracks alive per frame
  double speed = 0.05;          // distance per frame
  double yaw_rate_deg = 0.0;    // heading change per frame
  double rotation_jitter_deg = 0.0;  // per-axis std, independent per frame
  double translation_jitter = 0.0;   // per-axis std of the position, independent per frame
  double sway_deg = 0.0;        // smooth sinusoidal yaw/pitch/roll amplitude
  double sway_period = 60.0;    // frames
  double near = 2.0;            // point shell radii around the path
  double far = 12.0;
  double dropout = 0.0;         // per-frame track loss probability (lost tracks are replaced)
  double noise_deg = 0.0;       // RMS bearing noise
  std::uint64_t seed = 1;
};

struct Sequence {
  TrackSet tracks;
  std::vector<Rotation> camera_to_world;
  std::vector<Vec3> positions;
  std::vector<Rotation> global_rotations;  // first-frame coordinates -> frame j
  std::vector<Vec3> headings;              // unit direction of travel in frame j's coordinates
};

/// Camera moving forward along +z (turning about +y at yaw_rate) through a
/// static point cloud, observed as raw-direction tracks.
Sequence generate_sequence(const SequenceParams& params);

}  // namespace stab360

#pragma once

// Virtual camera path: per-frame rotation q^W applied to the input bearings
// and (translation-aware mode) a displacement t^W of the virtual camera in
// the input frame's coordinates. The composed camera rotation of frame i is
// q^W_i * q_i where q_i is the estimated global rotation.

#include <span>
#include <vector>

#include "stab360/constraints.hpp"
#include "stab360/motion.hpp"
#include "stab360/sphere.hpp"
#include "stab360/tracks.hpp"

namespace stab360 {

struct PathOptions {
  int norm = 2;  // 1: sum of L1 norms (IRLS), 2: sum of squared L2 norms
  double alpha1 = 10.0;
  double alpha2 = 100.0;
  bool roll_locked = true;
  double direction_weight = 1.0;  // scales every constraint weight
  double negative_alpha = kNegativeAlpha;
  double negative_beta = kNegativeBeta;
  int max_iterations = 200;
  double tolerance = 1e-12;
  double norm_epsilon = 1e-6;
  int keyframe_stride = 10;  // staged initialization; <= 1 disables it
  double translation_regularizer = 1e-3;
  int min_live_tracks = 4;
};

struct PathTransform {
  std::vector<Rotation> rotations;  // q^W
  std::vector<Vec3> translations;   // t^W, zero in rotation-only mode
  std::vector<bool> translation_frozen;

  static PathTransform identity(int frames);
  int size() const { return static_cast<int>(rotations.size()); }
};

struct PathSolution {
  PathTransform transform;
  double initial_energy = 0.0;
  double final_energy = 0.0;
  std::vector<double> energy_trace;
  int iterations = 0;
  bool converged = false;
};

struct SmoothnessTerms {
  double first_order = 0.0;   // alpha1-weighted
  double second_order = 0.0;  // alpha2-weighted
  double total() const { return first_order + second_order; }
};

/// Rotation smoothness of the composed path q^W_i * q_i. With norm 2 each
/// difference contributes its squared L2 norm, with norm 1 its L1 norm.
/// Throws invalid-argument for fewer than two frames or mismatched sizes.
SmoothnessTerms smoothness_terms(std::span<const Rotation> path, std::span<const Rotation> input,
                                 const PathOptions& options);
double smoothness_energy(std::span<const Rotation> path, std::span<const Rotation> input,
                         const PathOptions& options);

/// Smoothness plus direction_weight times the directional energy.
double rotation_path_energy(std::span<const Rotation> path, std::span<const Rotation> input,
                            std::span<const DirectionalConstraint> constraints,
                            const PathOptions& options);

/// Joint direction and smoothness solve over per-frame rotations.
/// `initial` seeds the solve; otherwise the staged keyframe initialization is used.
PathSolution solve_rotation_only_path(std::span<const Rotation> input,
                                      std::span<const DirectionalConstraint> constraints,
                                      const PathOptions& options,
                                      const PathTransform* initial = nullptr);

/// Stabilize without constraints, then rotate the stabilized path by a
/// spherically interpolated correction through the positive constraints.
PathSolution solve_two_stage(std::span<const Rotation> input,
                             std::span<const DirectionalConstraint> constraints,
                             const PathOptions& options);

/// Projection of an input bearing into a virtual camera [Rw, tw]:
///   Rw^T (sin(phi) p - sin(omega) tw) / |sin(phi) p - sin(omega) tw|
/// Throws degenerate-geometry when the numerator vanishes.
Vec3 project_point(const Vec3& p, double phi, double omega, const Rotation& rw, const Vec3& tw);

/// Depth parametrization of one observation: the point lies at distance
/// sin(phi) / sin(omega) in units of the baseline to its reference keyframe.
struct PointGeometry {
  double phi = kPi / 2;
  double omega = 0.0;
};

/// Per-observation (phi, omega) against the nearest keyframe inside each
/// trajectory's span, from the estimated per-frame motions.
std::vector<std::vector<PointGeometry>> compute_point_geometry(
    const TrackSet& tracks, std::span<const FrameMotion> motions, std::span<const int> keyframes);

/// Trajectory smoothness plus directional energy over per-frame rotation and
/// translation. Constraints act on rotated targets only. Frames with fewer
/// than min_live_tracks observations keep t^W = 0. Starts from `initial`
/// (rotations, zero translation) or from the rotation-only solution.
PathSolution solve_translation_aware_path(const TrackSet& tracks,
                                          std::span<const FrameMotion> motions,
                                          std::span<const int> keyframes,
                                          std::span<const DirectionalConstraint> constraints,
                                          const PathOptions& options,
                                          const PathTransform* initial = nullptr);

/// Trajectories as seen from the virtual camera.
std::vector<std::vector<Vec3>> transform_trajectories(
    const TrackSet& tracks, const std::vector<std::vector<PointGeometry>>& geometry,
    const PathTransform& path);

/// Sum of alpha-weighted trajectory smoothness (unsquared norms) over all trajectories.
SmoothnessTerms trajectory_smoothness(std::span<const std::vector<Vec3>> trajectories,
                                      double alpha1, double alpha2);

}  // namespace stab360

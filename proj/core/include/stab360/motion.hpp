#pragma once

// Direct spherical two-view motion estimation.
//
// A correspondence (p, q) is explained by a rotation R followed by a
// translation direction t when q lies on the great circle through Rp and t.
// The residual is the signed angular distance of q from that plane:
//
//   e(R, t) = asin( q . n / |n| ),   n = t x (R p)
//
// which does not depend on the length of t. The translation is therefore
// kept as a free 3-vector during refinement and normalized at the end.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stab360/sphere.hpp"
#include "stab360/tracks.hpp"

namespace stab360 {

struct Correspondence {
  Bearing p;  // reference frame
  Bearing q;  // second frame
};

struct RansacOptions {
  double threshold_rad = deg_to_rad(0.5);
  double confidence = 0.999;
  int max_iterations = 2000;
  double min_inlier_ratio = 0.5;
  std::uint64_t seed = 1;
};

struct LmOptions {
  int max_iterations = 10;
  double initial_lambda = 1e-3;
  double lambda_factor = 10.0;
  double step_tolerance = 1e-10;
  int max_retries = 12;
  int restarts = 3;
  std::uint64_t seed = 1;
};

struct MotionOptions {
  RansacOptions ransac;
  LmOptions lm;
  bool use_ransac = true;
  int min_correspondences = 8;
};

enum class SolveStatus { kConverged, kMaxIterations, kNoConvergence };

struct RelativeMotion {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::UnitZ();  // unit after estimation
  std::vector<int> inliers;
  double mean_residual = 0.0;        // mean |e| over inliers, radians
  bool degenerate_translation = false;  // parallax indistinguishable from noise
  SolveStatus status = SolveStatus::kConverged;
  int iterations = 0;
  std::vector<double> energy_trace;  // accepted-step energies of the final LM run
};

using Jacobian16 = Eigen::Matrix<double, 1, 6>;

/// Signed angular distance of q from the plane spanned by R p and t.
/// Throws degenerate-geometry when |t x Rp| <= 1e-12.
double residual_em(const Rotation& rotation, const Vec3& t, const Correspondence& c);

/// Derivative of residual_em with respect to [w, t], where w is a rotation
/// vector increment applied on the left: R <- exp(w) R.
Jacobian16 residual_em_jacobian(const Rotation& rotation, const Vec3& t, const Correspondence& c);

/// Sum of squared residuals over the given indices (all when empty).
/// Degenerate correspondences contribute zero.
double motion_energy(const Rotation& rotation, const Vec3& t,
                     std::span<const Correspondence> correspondences,
                     std::span<const int> indices = {});

/// Levenberg-Marquardt refinement over the given inliers, started from the
/// identity rotation and random unit translations (lm.restarts of them).
/// The sign of t is fixed so that the median in-plane angle is non-negative.
RelativeMotion refine_relative_motion(std::span<const Correspondence> correspondences,
                                      std::span<const int> inliers, const LmOptions& lm);

/// RANSAC prefilter followed by refine_relative_motion.
/// Throws insufficient-data below min_correspondences, robust-fit-failure
/// when RANSAC cannot find a majority model.
RelativeMotion estimate_relative_motion(std::span<const Correspondence> correspondences,
                                        const MotionOptions& options);

/// Real roots of a x^3 + b x^2 + c x + d (closed form; lower degree when the
/// leading coefficients vanish). Complex roots with |Im| >= 1e-9 are dropped.
std::vector<double> solve_cubic_real(double a, double b, double c, double d);

/// Fundamental-matrix candidates through exactly seven correspondences.
std::vector<Mat3> seven_point_candidates(std::span<const Correspondence> seven);

/// |asin(q . Fp / |Fp|)|
double epipolar_angle(const Mat3& f, const Correspondence& c);

/// Seeded 7-point RANSAC. Returns the inlier mask of the largest consensus.
std::vector<bool> ransac_inliers_7pt(std::span<const Correspondence> correspondences,
                                     const RansacOptions& options);

struct ThetaResult {
  double omega = 0.0;  // signed in-plane angle from Rp to the projection of q
  Vec3 axis;           // (t x Rp) / |t x Rp|
};

ThetaResult recover_theta(const Rotation& rotation, const Vec3& t, const Correspondence& c);

/// global[0] = identity, global[i] = relative[i-1] * ... * relative[0].
std::vector<Rotation> chain_global_rotations(std::span<const Rotation> relative);

/// Orthogonal Procrustes fit of q ~ R p.
Rotation estimate_rotation_only(std::span<const Correspondence> correspondences);

/// Motion of one frame of a clip.
struct FrameMotion {
  int frame = 0;
  Rotation global_rotation = Rotation::Identity();  // first-frame coords -> this frame
  Vec3 translation = Vec3::Zero();  // unit direction of camera travel in this frame's
                                    // coordinates; zero when unreliable
  double mean_residual = 0.0;
  bool keyframe = false;
  bool degenerate = false;  // translation unreliable
  bool fallback = false;    // only one keyframe reference could be used
};

std::vector<Correspondence> correspondences_between(const TrackSet& tracks, int frame_a,
                                                    int frame_b);

/// Motions of the frames strictly between two keyframes, averaged from the
/// estimates against both keyframes with weights by temporal proximity.
std::vector<FrameMotion> estimate_inner_frames(const TrackSet& tracks, int kf_prev, int kf_next,
                                               const Rotation& global_prev,
                                               const Rotation& global_next,
                                               const MotionOptions& options);

struct MotionPipelineOptions {
  MotionOptions motion;
  double survival_ratio = 0.6;
  int threads = 1;
  std::uint64_t seed = 1;
};

struct MotionTrack {
  std::vector<int> keyframes;
  std::vector<FrameMotion> frames;  // one per clip frame

  std::vector<Rotation> global_rotations() const;
};

/// Keyframes, keyframe-pair motion, rotation chaining and inner frames.
MotionTrack estimate_motion(const TrackSet& tracks, const MotionPipelineOptions& options);

}  // namespace stab360

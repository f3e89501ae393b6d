#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "stab360/motion.hpp"
#include "stab360/sphere.hpp"

namespace stab360 {

enum class ConstraintSign { kPositive, kNegative };

enum class Provenance { kManual, kGuided, kSaliency, kForwardMotion, kSeam };

std::string_view to_string(Provenance p);

/// A look-at target on one frame, in that frame's input coordinates.
/// Positive targets are pulled toward the front vector, negative ones pushed
/// toward the back.
struct DirectionalConstraint {
  int frame = 0;
  Bearing target;
  ConstraintSign sign = ConstraintSign::kPositive;
  double weight = 1.0;
  Provenance provenance = Provenance::kManual;
};

using ConstraintSet = std::vector<DirectionalConstraint>;

/// Constraint file:
///   constraints v1 projection=<er|dir> [width=<W> height=<H>]
///   <+|-> <frame> <a> <b> [<c>] [w=<weight>] [tag=<provenance>]
/// Pixel targets use the header geometry when present, otherwise `geometry`.
/// A frame outside [0, frame_count) is a validation-error; frame_count < 0
/// disables the range check. An empty stream is an empty set.
ConstraintSet parse_constraints(std::istream& in, const ErGeometry& geometry,
                                int frame_count = -1);
ConstraintSet load_constraints(const std::filesystem::path& path, const ErGeometry& geometry,
                               int frame_count = -1);
void write_constraints(std::ostream& out, const ConstraintSet& constraints);
void save_constraints(const std::filesystem::path& path, const ConstraintSet& constraints);

/// Positive constraints at the direction of travel, every `stride` frames
/// starting at frame 0. Degenerate frames are skipped.
ConstraintSet forward_motion_constraints(std::span<const FrameMotion> motions, int stride);

inline constexpr double kNegativeAlpha = 3200.0;
inline constexpr double kNegativeBeta = 26.73;

/// rho(x) = alpha * exp(-beta / x), rho(0) = 0. Throws invalid-argument for x < 0.
double negative_loss(double x, double alpha = kNegativeAlpha, double beta = kNegativeBeta);

/// Sum of w |q p - f|^2 over positive and w rho(|q n - b|^2) over negative
/// constraints, with q = path_rotations[frame] acting on input bearings.
/// Throws invalid-argument when a constrained frame has no rotation.
double directional_energy(std::span<const Rotation> path_rotations,
                          std::span<const DirectionalConstraint> constraints,
                          double alpha = kNegativeAlpha, double beta = kNegativeBeta);

}  // namespace stab360

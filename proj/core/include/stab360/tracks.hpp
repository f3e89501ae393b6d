#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stab360/sphere.hpp"

namespace stab360 {

/// One feature tracked over consecutive frames [start_frame, end_frame()].
struct FeatureTrajectory {
  int id = 0;
  int start_frame = 0;
  std::vector<Bearing> points;

  int end_frame() const { return start_frame + static_cast<int>(points.size()) - 1; }
  bool covers(int frame) const { return frame >= start_frame && frame <= end_frame(); }
  const Bearing& at(int frame) const { return points[static_cast<std::size_t>(frame - start_frame)]; }
};

enum class Projection { kEquirectangular, kWideAngle };

/// How pixel observations map onto the sphere.
struct CameraModel {
  Projection projection = Projection::kEquirectangular;
  ErGeometry geometry;
  double hfov_deg = 120.0;  // wide-angle only

  Bearing pixel_to_bearing(const Vec2& pixel) const;
};

struct TrackSet {
  std::vector<FeatureTrajectory> trajectories;
  int frame_count = 0;
  CameraModel camera;

  /// Throws validation-error when any invariant is violated.
  void validate() const;
};

/// Parses the line-oriented track format:
///   tracks v1 projection=<er|wideangle> width=<W> height=<H> frames=<N> [hfov_deg=<F>]
///   <track_id> <frame> <a> <b> [<c>]
/// Two values are pixel coordinates, three a raw direction vector.
TrackSet parse_tracks(std::istream& in);
TrackSet load_tracks(const std::filesystem::path& path);

/// Writes every observation as a raw direction (17 significant digits).
void write_tracks(std::ostream& out, const TrackSet& tracks);
void save_tracks(const std::filesystem::path& path, const TrackSet& tracks);

/// Keyframe selection: starting at frame 0, a new keyframe is emitted at the
/// first frame where fewer than survival_ratio of the tracks alive at the
/// previous keyframe are still tracked continuously from it. Frame 0 and the
/// last frame are always keyframes.
std::vector<int> select_keyframes(const TrackSet& tracks, double survival_ratio = 0.6);

/// Pairs of trajectory ids closer than min_separation_deg at a keyframe.
/// Informational only; ingestion does not reject them.
std::vector<std::pair<int, int>> find_close_features(const TrackSet& tracks, int frame,
                                                     double min_separation_deg = 2.0);

/// Per-trajectory first-order sum ||w_j - w_{j+1}|| and second-order sum
/// ||w_{j+2} - 2 w_{j+1} + w_j||, unweighted.
struct TrajectoryCost {
  double first_order = 0.0;
  double second_order = 0.0;
};
TrajectoryCost trajectory_cost(std::span<const Vec3> points);

struct SmoothnessCdf {
  std::vector<double> first_order_costs;   // sorted, weighted by alpha1
  std::vector<double> second_order_costs;  // sorted, weighted by alpha2
  // (value, cumulative fraction) at evenly spaced quantiles
  std::vector<std::pair<double, double>> first_order;
  std::vector<std::pair<double, double>> second_order;

  double pooled_first() const;
  double pooled_second() const;
};

/// Empirical CDFs of the per-trajectory smoothness costs. Trajectories shorter
/// than 2 (3) points are skipped for the first (second) order.
SmoothnessCdf smoothness_cdf(std::span<const std::vector<Vec3>> trajectories, double alpha1 = 1.0,
                             double alpha2 = 1.0, int quantiles = 1000);

std::vector<std::vector<Vec3>> trajectory_points(const TrackSet& tracks);

}  // namespace stab360

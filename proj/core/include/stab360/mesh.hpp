#pragma once

// Spherical mesh warping. Vertices sit on a regular longitude/latitude grid:
// column c at longitude -pi + 2 pi c / cols, row r at latitude
// pi/2 - pi r / (rows - 1), so the first and last rows are the poles.
// A vertex v is warped to
//   v' = rotate(normalize(t x R v), angle(v), R v)
// i.e. rotated with the frame and then slid along its great circle away
// from the translation direction t by a smooth per-vertex angle.

#include <span>
#include <vector>

#include "stab360/image.hpp"
#include "stab360/path.hpp"
#include "stab360/sphere.hpp"

namespace stab360 {

struct FeatureWarpSample {
  Vec3 input;    // bearing in the input frame
  Vec3 feature;  // R * input
  Vec3 axis;     // normalize(t x R p)
  double angle = 0.0;
};

struct WarpMesh {
  int cols = 20;
  int rows = 10;
  std::vector<Vec3> input;   // row-major, index r * cols + c
  std::vector<Vec3> output;
  std::vector<double> angle;
  Rotation rotation = Rotation::Identity();
  Vec3 translation_dir = Vec3::Zero();  // zero for a pure rotation
  bool has_motion = true;  // rotation/translation_dir are known, not fitted
  int width = 0;           // ER size the mesh was built for, 0 when unknown
  int height = 0;

  /// Grid with outputs equal to inputs and zero angles.
  static WarpMesh grid(int cols = 20, int rows = 10);

  int size() const { return cols * rows; }
  int index(int c, int r) const { return r * cols + c; }
};

/// Bilinear weights of the four grid vertices around a bearing.
struct BilinearCell {
  int vertex[4];
  double weight[4];
};
BilinearCell bilinear_cell(int cols, int rows, const Vec3& bearing);

/// Bilinear interpolation of a per-vertex field at a bearing.
double interpolate_field(int cols, int rows, std::span<const double> field, const Vec3& bearing);

/// Residual parallax per feature: `warped` is where the virtual camera
/// sees input bearing `inputs[i]`. The angle is measured about t x R p from
/// R p. Features parallel to t (or any feature when t = 0) are skipped.
std::vector<FeatureWarpSample> feature_warp_angles(std::span<const Vec3> inputs,
                                                   std::span<const Vec3> warped,
                                                   const Rotation& rotation,
                                                   const Vec3& translation_dir);

/// Direction of the virtual camera displacement after rotation:
/// normalize(q^W t^W), or zero when t^W vanishes.
Vec3 path_translation_dir(const PathTransform& path, int frame);

/// Samples of one frame from all trajectories observed in it.
std::vector<FeatureWarpSample> frame_warp_samples(
    const TrackSet& tracks, const std::vector<std::vector<PointGeometry>>& geometry,
    const PathTransform& path, int frame);

/// Least-squares angle field: sum (angle_p - b_p^T v)^2 + lambda sum (v_i - v_j)^2
/// over grid neighbors (wrapping horizontally, across each pole).
std::vector<double> solve_vertex_angles(std::span<const FeatureWarpSample> samples, int cols,
                                        int rows, double lambda = 1.0);

/// Fills output, angle, rotation and translation_dir. Vertices parallel to t
/// only rotate (angle forced to 0).
void warp_vertices(WarpMesh& mesh, const Rotation& rotation, const Vec3& translation_dir,
                   std::span<const double> angles);

/// Full per-frame mesh from samples.
WarpMesh build_warp_mesh(std::span<const FeatureWarpSample> samples, const Rotation& rotation,
                         const Vec3& translation_dir, int cols = 20, int rows = 10,
                         double lambda = 1.0);

/// Input bearing that the mesh warps onto `output`.
Vec3 inverse_warp(const WarpMesh& mesh, const Vec3& output);

enum class Interpolation { kNearest, kBilinear };

/// Inverse-maps every output pixel through the mesh and samples the input.
/// Throws invalid-argument when the mesh records a different ER size or the
/// image is not 2:1.
Image remap_er_image(const Image& image, const WarpMesh& mesh, Interpolation interpolation,
                     std::vector<float>* angle_raster = nullptr);

}  // namespace stab360

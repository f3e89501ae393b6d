#include "stab360/mesh.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "stab360/error.hpp"
#include "stab360/motion.hpp"

namespace stab360 {

WarpMesh WarpMesh::grid(int cols, int rows) {
  if (cols < 3 || rows < 2) throw Error(ErrorCode::kInvalidArgument, "mesh needs cols >= 3, rows >= 2");
  WarpMesh m;
  m.cols = cols;
  m.rows = rows;
  for (int r = 0; r < rows; ++r) {
    const double lat = kPi / 2 - kPi * r / (rows - 1);
    for (int c = 0; c < cols; ++c) {
      const double lon = -kPi + 2.0 * kPi * c / cols;
      m.input.push_back(bearing_from_lonlat(lon, lat));
    }
  }
  m.output = m.input;
  m.angle.assign(m.input.size(), 0.0);
  return m;
}

BilinearCell bilinear_cell(int cols, int rows, const Vec3& bearing) {
  const Vec2 ll = lonlat_from_vec(bearing);
  const double x = (ll[0] + kPi) / (2.0 * kPi) * cols;
  const double y = std::clamp((kPi / 2 - ll[1]) / kPi * (rows - 1), 0.0, rows - 1.0);
  const int cf = static_cast<int>(std::floor(x));
  const double fx = x - cf;
  const int c0 = ((cf % cols) + cols) % cols;
  const int c1 = (c0 + 1) % cols;
  const int r0 = std::min(static_cast<int>(std::floor(y)), rows - 2);
  const double fy = y - r0;
  return {{r0 * cols + c0, r0 * cols + c1, (r0 + 1) * cols + c0, (r0 + 1) * cols + c1},
          {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy}};
}

double interpolate_field(int cols, int rows, std::span<const double> field, const Vec3& bearing) {
  const BilinearCell cell = bilinear_cell(cols, rows, bearing);
  double v = 0.0;
  for (int k = 0; k < 4; ++k) v += cell.weight[k] * field[static_cast<std::size_t>(cell.vertex[k])];
  return v;
}

std::vector<FeatureWarpSample> feature_warp_angles(std::span<const Vec3> inputs,
                                                   std::span<const Vec3> warped,
                                                   const Rotation& rotation,
                                                   const Vec3& translation_dir) {
  if (inputs.size() != warped.size()) throw Error(ErrorCode::kInvalidArgument, "size mismatch");
  std::vector<FeatureWarpSample> out;
  if (translation_dir.norm() < 1e-12) return out;
  const Vec3 t = translation_dir.normalized();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    try {
      const ThetaResult th = recover_theta(rotation, t, {Bearing(inputs[i]), Bearing(warped[i])});
      out.push_back({Bearing(inputs[i]).vec(), rotation * Bearing(inputs[i]).vec(), th.axis, th.omega});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateGeometry) throw;
    }
  }
  return out;
}

Vec3 path_translation_dir(const PathTransform& path, int frame) {
  const auto f = static_cast<std::size_t>(frame);
  if (f >= path.translations.size()) return Vec3::Zero();
  const Vec3 t = path.rotations[f] * path.translations[f];
  return t.norm() < 1e-12 ? Vec3::Zero() : Vec3(t.normalized());
}

std::vector<FeatureWarpSample> frame_warp_samples(
    const TrackSet& tracks, const std::vector<std::vector<PointGeometry>>& geometry,
    const PathTransform& path, int frame) {
  const auto f = static_cast<std::size_t>(frame);
  const Vec3 tw = f < path.translations.size() ? path.translations[f] : Vec3::Zero();
  std::vector<Vec3> inputs, warped;
  for (std::size_t i = 0; i < tracks.trajectories.size(); ++i) {
    const auto& tr = tracks.trajectories[i];
    if (!tr.covers(frame)) continue;
    const auto k = static_cast<std::size_t>(frame - tr.start_frame);
    const PointGeometry& g = geometry[i][k];
    try {
      warped.push_back(project_point(tr.points[k], g.phi, g.omega, path.rotations[f].conjugate(), tw));
      inputs.push_back(tr.points[k]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateGeometry) throw;
    }
  }
  return feature_warp_angles(inputs, warped, path.rotations[f], path_translation_dir(path, frame));
}

std::vector<double> solve_vertex_angles(std::span<const FeatureWarpSample> samples, int cols,
                                        int rows, double lambda) {
  if (lambda < 0.0) throw Error(ErrorCode::kInvalidArgument, "lambda must be non-negative");
  const int n = cols * rows;
  if (samples.empty()) return std::vector<double>(static_cast<std::size_t>(n), 0.0);

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (const auto& s : samples) {
    const BilinearCell cell = bilinear_cell(cols, rows, s.input);
    for (int a = 0; a < 4; ++a) {
      rhs[cell.vertex[a]] += cell.weight[a] * s.angle;
      for (int b = 0; b < 4; ++b) {
        trip.emplace_back(cell.vertex[a], cell.vertex[b], cell.weight[a] * cell.weight[b]);
      }
    }
  }
  auto link = [&](int i, int j) {
    trip.emplace_back(i, i, lambda);
    trip.emplace_back(j, j, lambda);
    trip.emplace_back(i, j, -lambda);
    trip.emplace_back(j, i, -lambda);
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      link(r * cols + c, r * cols + (c + 1) % cols);
      if (r + 1 < rows) link(r * cols + c, (r + 1) * cols + c);
    }
  }
  for (int c = 0; c < cols / 2; ++c) {
    link(c, c + cols / 2);
    link((rows - 1) * cols + c, (rows - 1) * cols + c + cols / 2);
  }
  if (lambda == 0.0) {
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, 1e-12);
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::kNoConvergence, "angle field factorization failed");
  const Eigen::VectorXd v = ldlt.solve(rhs);
  return {v.data(), v.data() + n};
}

void warp_vertices(WarpMesh& mesh, const Rotation& rotation, const Vec3& translation_dir,
                   std::span<const double> angles) {
  if (angles.size() != mesh.input.size()) throw Error(ErrorCode::kInvalidArgument, "field size mismatch");
  const bool has_t = translation_dir.norm() >= 1e-12;
  const Vec3 t = has_t ? Vec3(translation_dir.normalized()) : Vec3::Zero();
  mesh.rotation = rotation.normalized();
  mesh.translation_dir = t;
  mesh.has_motion = true;
  mesh.output.resize(mesh.input.size());
  mesh.angle.assign(angles.begin(), angles.end());
  for (std::size_t i = 0; i < mesh.input.size(); ++i) {
    const Vec3 rv = mesh.rotation * mesh.input[i];
    const Vec3 n = t.cross(rv);
    if (!has_t || n.norm() < 1e-9) {
      mesh.output[i] = rv;
      mesh.angle[i] = 0.0;
      continue;
    }
    mesh.output[i] = rotate_rodrigues(n.normalized(), angles[i], rv).normalized();
  }
}

WarpMesh build_warp_mesh(std::span<const FeatureWarpSample> samples, const Rotation& rotation,
                         const Vec3& translation_dir, int cols, int rows, double lambda) {
  WarpMesh mesh = WarpMesh::grid(cols, rows);
  const auto field = solve_vertex_angles(samples, cols, rows, lambda);
  warp_vertices(mesh, rotation, translation_dir, field);
  return mesh;
}

namespace {

// Best rotation taking mesh inputs onto outputs, for meshes without stored motion.
Rotation fit_rotation(const WarpMesh& mesh) {
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < mesh.input.size(); ++i) h += mesh.output[i] * mesh.input[i].transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return Rotation(Mat3(svd.matrixU() * d * svd.matrixV().transpose())).normalized();
}

}  // namespace

Vec3 inverse_warp(const WarpMesh& mesh, const Vec3& output) {
  const Rotation r = mesh.has_motion ? mesh.rotation : fit_rotation(mesh);
  const Rotation rinv = r.conjugate();
  if (!mesh.has_motion || mesh.translation_dir.norm() < 1e-12) return rinv * output;
  const Vec3 n = mesh.translation_dir.cross(output);
  if (n.norm() < 1e-9) return rinv * output;
  const Vec3 axis = n.normalized();
  double a = 0.0;
  Vec3 v = rinv * output;
  for (int it = 0; it < 50; ++it) {
    const double next = interpolate_field(mesh.cols, mesh.rows, mesh.angle, v);
    v = rinv * rotate_rodrigues(axis, -next, output);
    if (std::abs(next - a) < 1e-12) break;
    a = next;
  }
  return v;
}

Image remap_er_image(const Image& image, const WarpMesh& mesh, Interpolation interpolation,
                     std::vector<float>* angle_raster) {
  if (image.width != 2 * image.height) {
    throw Error(ErrorCode::kInvalidArgument, "equirectangular image must be 2:1");
  }
  if (mesh.width != 0 && (mesh.width != image.width || mesh.height != image.height)) {
    throw Error(ErrorCode::kInvalidArgument, "image size does not match the mesh geometry");
  }
  const ErGeometry g{image.width, image.height};
  Image out(image.width, image.height, image.channels);
  if (angle_raster) angle_raster->assign(static_cast<std::size_t>(g.width) * g.height, 0.0f);
  const int w = g.width;
  const int h = g.height;
  auto wrap = [w](int x) { return ((x % w) + w) % w; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 u = er_continuous_to_bearing(g, x + 0.5, y + 0.5);
      const Vec3 v = inverse_warp(mesh, u);
      if (angle_raster) {
        (*angle_raster)[static_cast<std::size_t>(y) * w + x] =
            static_cast<float>(interpolate_field(mesh.cols, mesh.rows, mesh.angle, v));
      }
      const Vec2 src = er_continuous_from_bearing(g, v) - Vec2(0.5, 0.5);
      if (interpolation == Interpolation::kNearest) {
        const int sx = wrap(static_cast<int>(std::lround(src.x())));
        const int sy = std::clamp(static_cast<int>(std::lround(src.y())), 0, h - 1);
        for (int c = 0; c < image.channels; ++c) out.at(x, y, c) = image.at(sx, sy, c);
      } else {
        const double fx0 = std::floor(src.x());
        const double fy0 = std::floor(src.y());
        const double fx = src.x() - fx0;
        const double fy = src.y() - fy0;
        const int x0 = wrap(static_cast<int>(fx0));
        const int x1 = wrap(static_cast<int>(fx0) + 1);
        const int y0 = std::clamp(static_cast<int>(fy0), 0, h - 1);
        const int y1 = std::clamp(static_cast<int>(fy0) + 1, 0, h - 1);
        for (int c = 0; c < image.channels; ++c) {
          const double val = (1 - fx) * (1 - fy) * image.at(x0, y0, c) + fx * (1 - fy) * image.at(x1, y0, c) +
                             (1 - fx) * fy * image.at(x0, y1, c) + fx * fy * image.at(x1, y1, c);
          out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(val), 0L, 255L));
        }
      }
    }
  }
  return out;
}

}  // namespace stab360

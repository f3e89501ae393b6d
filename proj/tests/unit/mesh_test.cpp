#include <cmath>

#include <gtest/gtest.h>

#include "stab360/error.hpp"
#include "stab360/mesh.hpp"
#include "stab360/rng.hpp"

using namespace stab360;

namespace {

std::vector<FeatureWarpSample> constant_samples(int n, double angle, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureWarpSample> s;
  for (int i = 0; i < n; ++i) {
    const Vec3 p = rng.unit_vector();
    s.push_back({p, p, Vec3::UnitX(), angle});
  }
  return s;
}

// Objective the field solver minimises, written out independently.
double field_objective(std::span<const FeatureWarpSample> samples, int cols, int rows, double lambda,
                       const std::vector<double>& v) {
  double e = 0.0;
  for (const auto& s : samples) {
    const double r = s.angle - interpolate_field(cols, rows, v, s.input);
    e += r * r;
  }
  auto link = [&](int i, int j) {
    const double d = v[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
    e += lambda * d * d;
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
  return e;
}

Image random_image(int w, int h, int channels, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h, channels);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.uniform_int(256));
  return img;
}

}  // namespace

TEST(MeshGrid, VertexLayout) {
  const WarpMesh m = WarpMesh::grid(20, 10);
  ASSERT_EQ(m.input.size(), 200u);
  EXPECT_NEAR((m.input[static_cast<std::size_t>(m.index(0, 0))] - Vec3(0, -1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((m.input[static_cast<std::size_t>(m.index(5, 9))] - Vec3(0, 1, 0)).norm(), 0.0, 1e-12);
  for (const auto& v : m.input) EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  EXPECT_THROW(WarpMesh::grid(2, 10), Error);
}

TEST(BilinearCell, WeightsSumToOne) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const BilinearCell c = bilinear_cell(20, 10, rng.unit_vector());
    double s = 0.0;
    for (double w : c.weight) {
      EXPECT_GE(w, -1e-12);
      s += w;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(VertexAngles, ConstantFieldIsReproduced) {
  const auto samples = constant_samples(500, 0.2, 1);
  for (double lambda : {0.01, 1.0, 100.0}) {
    const auto v = solve_vertex_angles(samples, 20, 10, lambda);
    for (double a : v) EXPECT_NEAR(a, 0.2, 1e-9) << "lambda " << lambda;
  }
}

TEST(VertexAngles, NoSamplesGivesZero) {
  const auto v = solve_vertex_angles({}, 20, 10, 1.0);
  ASSERT_EQ(v.size(), 200u);
  for (double a : v) EXPECT_EQ(a, 0.0);
}

TEST(VertexAngles, LinearInSampleAngles) {
  Rng rng(4);
  std::vector<FeatureWarpSample> a, b, sum;
  for (int i = 0; i < 300; ++i) {
    const Vec3 p = rng.unit_vector();
    const double x = rng.uniform(-0.1, 0.1);
    const double y = rng.uniform(-0.1, 0.1);
    a.push_back({p, p, Vec3::UnitX(), x});
    b.push_back({p, p, Vec3::UnitX(), y});
    sum.push_back({p, p, Vec3::UnitX(), 2.0 * x - 3.0 * y});
  }
  const auto va = solve_vertex_angles(a, 20, 10, 1.0);
  const auto vb = solve_vertex_angles(b, 20, 10, 1.0);
  const auto vs = solve_vertex_angles(sum, 20, 10, 1.0);
  for (std::size_t i = 0; i < vs.size(); ++i) EXPECT_NEAR(vs[i], 2.0 * va[i] - 3.0 * vb[i], 1e-10);
}

TEST(VertexAngles, LargerLambdaIsSmoother) {
  Rng rng(5);
  std::vector<FeatureWarpSample> s;
  for (int i = 0; i < 400; ++i) {
    const Vec3 p = rng.unit_vector();
    s.push_back({p, p, Vec3::UnitX(), p.x() > 0 ? 0.05 : -0.05});
  }
  auto total_variation = [](const std::vector<double>& v, int cols, int rows) {
    double tv = 0.0;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double a = v[static_cast<std::size_t>(r * cols + c)];
        tv += std::abs(a - v[static_cast<std::size_t>(r * cols + (c + 1) % cols)]);
        if (r + 1 < rows) tv += std::abs(a - v[static_cast<std::size_t>((r + 1) * cols + c)]);
      }
    }
    return tv;
  };
  double previous = 1e300;
  for (double lambda : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const double tv = total_variation(solve_vertex_angles(s, 20, 10, lambda), 20, 10);
    EXPECT_LE(tv, previous + 1e-12) << "lambda " << lambda;
    previous = tv;
  }
}

TEST(VertexAngles, TwoClustersAreAtTheMinimum) {
  Rng rng(6);
  std::vector<FeatureWarpSample> s;
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = (Vec3(1, 0, 0) + rng.in_ball(0.2)).normalized();
    const Vec3 b = (Vec3(-1, 0, 0.2) + rng.in_ball(0.2)).normalized();
    s.push_back({a, a, Vec3::UnitY(), 0.08});
    s.push_back({b, b, Vec3::UnitY(), -0.03});
  }
  const double lambda = 0.5;
  const auto v = solve_vertex_angles(s, 20, 10, lambda);
  const double e0 = field_objective(s, 20, 10, lambda, v);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> d = v;
    for (auto& x : d) x += 1e-4 * rng.normal();
    EXPECT_GE(field_objective(s, 20, 10, lambda, d), e0 - 1e-14);
  }
  for (int i = 0; i < 200; i += 7) {
    std::vector<double> plus = v, minus = v;
    plus[static_cast<std::size_t>(i)] += 1e-6;
    minus[static_cast<std::size_t>(i)] -= 1e-6;
    const double g = (field_objective(s, 20, 10, lambda, plus) - field_objective(s, 20, 10, lambda, minus)) / 2e-6;
    EXPECT_NEAR(g, 0.0, 1e-7) << "vertex " << i;
  }
}

TEST(VertexAngles, NegativeLambdaRejected) {
  EXPECT_THROW(solve_vertex_angles({}, 20, 10, -1.0), Error);
}

TEST(FeatureWarp, RecoversKnownAngle) {
  Rng rng(7);
  const Rotation r = axis_angle(Vec3(0.2, 1, 0.1).normalized(), 0.3);
  const Vec3 t = Vec3(0.1, 0.0, 1.0).normalized();
  std::vector<Vec3> in, out;
  std::vector<double> truth;
  for (int i = 0; i < 50; ++i) {
    const Vec3 p = rng.unit_vector();
    const Vec3 rp = r * p;
    const double a = rng.uniform(-0.1, 0.1);
    in.push_back(p);
    out.push_back(rotate_rodrigues(t.cross(rp).normalized(), a, rp));
    truth.push_back(a);
  }
  const auto s = feature_warp_angles(in, out, r, t);
  ASSERT_EQ(s.size(), in.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(s[i].angle, truth[i], 1e-9);
    EXPECT_NEAR((s[i].feature - r * in[i]).norm(), 0.0, 1e-12);
  }
}

TEST(FeatureWarp, PureRotationHasNoSamples) {
  const std::vector<Vec3> in{Vec3::UnitX()};
  EXPECT_TRUE(feature_warp_angles(in, in, Rotation::Identity(), Vec3::Zero()).empty());
}

TEST(FeatureWarp, IdentityWarpGivesZeroAngles) {
  Rng rng(8);
  const Rotation r = axis_angle(Vec3::UnitY(), 0.2);
  std::vector<Vec3> in, out;
  for (int i = 0; i < 20; ++i) {
    in.push_back(rng.unit_vector());
    out.push_back(r * in.back());
  }
  for (const auto& s : feature_warp_angles(in, out, r, Vec3::UnitZ())) EXPECT_NEAR(s.angle, 0.0, 1e-12);
}

TEST(WarpVertices, ZeroFieldIsPureRotation) {
  WarpMesh m = WarpMesh::grid(20, 10);
  const Rotation r = from_yaw_pitch_roll(0.3, -0.2, 0.1);
  warp_vertices(m, r, Vec3::UnitZ(), std::vector<double>(200, 0.0));
  for (std::size_t i = 0; i < m.input.size(); ++i) EXPECT_NEAR((m.output[i] - r * m.input[i]).norm(), 0.0, 1e-12);
}

TEST(WarpVertices, EquatorSlidesAwayFromTranslation) {
  WarpMesh m = WarpMesh::grid(20, 11);
  warp_vertices(m, Rotation::Identity(), Vec3::UnitZ(), std::vector<double>(m.input.size(), 0.1));
  for (int c = 0; c < m.cols; ++c) {
    const auto i = static_cast<std::size_t>(m.index(c, 5));
    const Vec3 v = m.input[i];
    if (std::abs(v.z()) > 1.0 - 1e-9) {
      EXPECT_EQ(m.angle[i], 0.0);
      continue;
    }
    EXPECT_NEAR(std::acos(std::clamp(v.dot(m.output[i]), -1.0, 1.0)), 0.1, 1e-9);
    EXPECT_NEAR(m.output[i].y(), 0.0, 1e-12);
    // Moves away from +z.
    EXPECT_LT(m.output[i].z(), v.z() + 1e-12);
    EXPECT_NEAR(m.output[i].norm(), 1.0, 1e-12);
  }
}

TEST(WarpVertices, SizeMismatchRejected) {
  WarpMesh m = WarpMesh::grid(20, 10);
  EXPECT_THROW(warp_vertices(m, Rotation::Identity(), Vec3::UnitZ(), std::vector<double>(3, 0.0)), Error);
}

TEST(InverseWarp, RoundTrip) {
  Rng rng(9);
  std::vector<FeatureWarpSample> s;
  for (int i = 0; i < 300; ++i) {
    const Vec3 p = rng.unit_vector();
    s.push_back({p, p, Vec3::UnitX(), 0.02 * p.x() + 0.01 * p.y()});
  }
  const Rotation r = from_yaw_pitch_roll(0.4, 0.1, -0.05);
  const Vec3 t = Vec3(0.3, 0.1, 1.0).normalized();
  const WarpMesh mesh = build_warp_mesh(s, r, t, 20, 10, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p = rng.unit_vector();
    const Vec3 rp = r * p;
    const Vec3 n = t.cross(rp);
    if (n.norm() < 1e-3) continue;
    const double a = interpolate_field(mesh.cols, mesh.rows, mesh.angle, p);
    const Vec3 warped = rotate_rodrigues(n.normalized(), a, rp);
    EXPECT_NEAR((inverse_warp(mesh, warped) - p).norm(), 0.0, 1e-9);
  }
}

TEST(Remap, IdentityNearestIsExact) {
  const Image img = random_image(64, 32, 3, 10);
  const Image out = remap_er_image(img, WarpMesh::grid(), Interpolation::kNearest);
  EXPECT_EQ(out.data, img.data);
}

TEST(Remap, IdentityBilinearWithinOneLevel) {
  const Image img = random_image(64, 32, 1, 11);
  const Image out = remap_er_image(img, WarpMesh::grid(), Interpolation::kBilinear);
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_LE(std::abs(int(out.data[i]) - int(img.data[i])), 1);
}

TEST(Remap, QuarterTurnYawShiftsColumns) {
  const Image img = random_image(64, 32, 3, 12);
  WarpMesh m = WarpMesh::grid();
  warp_vertices(m, axis_angle(Vec3::UnitY(), kPi / 2), Vec3::Zero(), std::vector<double>(m.input.size(), 0.0));
  const Image out = remap_er_image(img, m, Interpolation::kNearest);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 64; ++x) {
      for (int c = 0; c < 3; ++c) ASSERT_EQ(out.at(x, y, c), img.at((x - 16 + 64) % 64, y, c)) << x << "," << y;
    }
  }
}

TEST(Remap, AngleRasterMatchesField) {
  const Image img = random_image(64, 32, 1, 13);
  WarpMesh m = WarpMesh::grid();
  warp_vertices(m, Rotation::Identity(), Vec3::Zero(), std::vector<double>(m.input.size(), 0.0));
  std::vector<float> raster;
  remap_er_image(img, m, Interpolation::kNearest, &raster);
  ASSERT_EQ(raster.size(), 64u * 32u);
  for (float a : raster) EXPECT_EQ(a, 0.0f);
}

TEST(Remap, RejectsMismatchedGeometry) {
  WarpMesh m = WarpMesh::grid();
  m.width = 128;
  m.height = 64;
  EXPECT_THROW(remap_er_image(random_image(64, 32, 3, 1), m, Interpolation::kNearest), Error);
  EXPECT_THROW(remap_er_image(random_image(60, 32, 3, 1), WarpMesh::grid(), Interpolation::kNearest), Error);
}

#include <benchmark/benchmark.h>

#include "stab360/mesh.hpp"
#include "stab360/motion.hpp"
#include "stab360/path.hpp"
#include "stab360/rng.hpp"
#include "stab360/synth.hpp"

using namespace stab360;

namespace {

Scene scene(int points) {
  SceneParams p;
  p.n_points = points;
  p.outlier_fraction = 0.1;
  p.noise_deg = 0.29;
  return generate_scene(p);
}

void BM_ResidualAndJacobian(benchmark::State& state) {
  const Scene s = scene(1000);
  const Rotation r = s.truth.rotation;
  const Vec3 t = s.truth.translation;
  for (auto _ : state) {
    double acc = 0.0;
    for (const auto& c : s.correspondences) {
      acc += residual_em(r, t, c);
      acc += residual_em_jacobian(r, t, c)[0];
    }
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_ResidualAndJacobian);

void BM_RelativeMotion(benchmark::State& state) {
  const Scene s = scene(static_cast<int>(state.range(0)));
  MotionOptions o;
  o.ransac.threshold_rad = deg_to_rad(0.87);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_relative_motion(s.correspondences, o));
}
BENCHMARK(BM_RelativeMotion)->Arg(500)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_RotationPathSolve(benchmark::State& state) {
  Rng rng(1);
  std::vector<Rotation> input;
  for (int i = 0; i < state.range(0); ++i) {
    input.push_back(from_yaw_pitch_roll(0.005 * i + 0.02 * rng.normal(), 0.02 * rng.normal(), 0.02 * rng.normal()));
  }
  const std::vector<DirectionalConstraint> cs{{static_cast<int>(state.range(0) / 2), Bearing(1.0, 0.0, 1.0)}};
  for (auto _ : state) benchmark::DoNotOptimize(solve_rotation_only_path(input, cs, PathOptions{}));
}
BENCHMARK(BM_RotationPathSolve)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_VertexSolve(benchmark::State& state) {
  Rng rng(2);
  std::vector<FeatureWarpSample> samples;
  for (int i = 0; i < 3000; ++i) {
    const Vec3 p = rng.unit_vector();
    samples.push_back({p, p, Vec3::UnitX(), 0.01 * p.x()});
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_vertex_angles(samples, 20, 10, 1.0));
}
BENCHMARK(BM_VertexSolve)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();

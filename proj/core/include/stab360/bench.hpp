#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stab360/motion.hpp"
#include "stab360/synth.hpp"

namespace stab360 {

enum class SweepKind { kNoise, kFov };

struct BenchOptions {
  SweepKind sweep = SweepKind::kNoise;
  std::vector<double> levels{0.0, 0.14, 0.29, 0.43, 0.57, 0.72, 0.86};
  int trials = 1000;
  SceneParams base;  // the swept field is overwritten per level
  MotionOptions motion;
  // RANSAC threshold max(threshold, noise_sigmas * noise); the generator's
  // noise level is known, so inliers are not cut at a fixed 0.5 degrees.
  double noise_sigmas = 3.0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BenchRow {
  double level = 0.0;
  std::string estimator;  // "full" or "rotation-only"
  int trials = 0;
  double mean_rot_err_deg = 0.0;
  double mean_trans_err_deg = 0.0;  // NaN when the estimator has no translation
  double median_rot_err_deg = 0.0;
  double median_trans_err_deg = 0.0;
  int failures = 0;
  std::vector<double> rot_errors;  // per successful trial, in trial order
  std::vector<double> trans_errors;
};

/// One "full" and one "rotation-only" row per level. Per-trial seeds are
/// derived from (seed, level index, trial), so results do not depend on the
/// number of threads.
std::vector<BenchRow> run_benchmark(const BenchOptions& options);

inline constexpr const char* kBenchCsvHeader =
    "level,estimator,trials,mean_rot_err_deg,mean_trans_err_deg,median_rot_err_deg,"
    "median_trans_err_deg,failures";

void write_benchmark_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace stab360

#include "stab360/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include "stab360/error.hpp"
#include "stab360/parallel.hpp"
#include "stab360/rng.hpp"

namespace stab360 {

namespace {

struct Trial {
  std::optional<PoseError> full;
  std::optional<double> rotation_only;
};

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Trial run_trial(const BenchOptions& options, std::size_t level_index, int trial) {
  SceneParams params = options.base;
  const double level = options.levels[level_index];
  if (options.sweep == SweepKind::kNoise) {
    params.noise_deg = level;
  } else {
    params.fov_deg = level;
  }
  params.seed = derive_seed(options.seed, level_index, static_cast<std::uint64_t>(trial));
  const Scene scene = generate_scene(params);

  MotionOptions motion = options.motion;
  motion.ransac.threshold_rad =
      std::max(motion.ransac.threshold_rad, deg_to_rad(options.noise_sigmas * params.noise_deg));
  motion.ransac.seed = derive_seed(params.seed, 1);
  motion.lm.seed = derive_seed(params.seed, 2);

  Trial t;
  std::vector<int> inliers;
  try {
    const RelativeMotion est = estimate_relative_motion(scene.correspondences, motion);
    t.full = pose_error(est, scene.truth);
    inliers = est.inliers;
  } catch (const Error&) {
  }
  try {
    std::vector<Correspondence> subset;
    if (inliers.empty()) {
      subset = scene.correspondences;
    } else {
      for (int i : inliers) subset.push_back(scene.correspondences[static_cast<std::size_t>(i)]);
    }
    RelativeMotion r;
    r.rotation = estimate_rotation_only(subset);
    t.rotation_only = pose_error(r, scene.truth).rotation_deg;
  } catch (const Error&) {
  }
  return t;
}

}  // namespace

std::vector<BenchRow> run_benchmark(const BenchOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
  if (options.levels.empty()) throw Error(ErrorCode::kInvalidArgument, "no sweep levels");
  std::vector<BenchRow> rows;
  for (std::size_t li = 0; li < options.levels.size(); ++li) {
    std::vector<Trial> trials(static_cast<std::size_t>(options.trials));
    parallel_for(trials.size(), options.threads,
                 [&](std::size_t i) { trials[i] = run_trial(options, li, static_cast<int>(i)); });

    BenchRow full, rot;
    full.level = rot.level = options.levels[li];
    full.estimator = "full";
    rot.estimator = "rotation-only";
    full.trials = rot.trials = options.trials;
    for (const auto& t : trials) {
      if (t.full) {
        full.rot_errors.push_back(t.full->rotation_deg);
        full.trans_errors.push_back(t.full->translation_deg);
      } else {
        ++full.failures;
      }
      if (t.rotation_only) {
        rot.rot_errors.push_back(*t.rotation_only);
      } else {
        ++rot.failures;
      }
    }
    for (BenchRow* r : {&full, &rot}) {
      r->mean_rot_err_deg = mean(r->rot_errors);
      r->median_rot_err_deg = median(r->rot_errors);
      r->mean_trans_err_deg = mean(r->trans_errors);
      r->median_trans_err_deg = median(r->trans_errors);
    }
    rows.push_back(std::move(full));
    rows.push_back(std::move(rot));
  }
  return rows;
}

void write_benchmark_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  auto num = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  out << kBenchCsvHeader << '\n';
  for (const auto& r : rows) {
    out << num(r.level) << ',' << r.estimator << ',' << r.trials << ',' << num(r.mean_rot_err_deg)
        << ',' << num(r.mean_trans_err_deg) << ',' << num(r.median_rot_err_deg) << ','
        << num(r.median_trans_err_deg) << ',' << r.failures << '\n';
  }
}

}  // namespace stab360

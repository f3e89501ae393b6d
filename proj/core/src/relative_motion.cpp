#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "stab360/error.hpp"
#include "stab360/motion.hpp"
#include "stab360/rng.hpp"

namespace stab360 {

double residual_em(const Rotation& rotation, const Vec3& t, const Correspondence& c) {
  const Vec3 n = t.cross(rotation * c.p.vec());
  const double nn = n.norm();
  if (nn <= 1e-12) {
    throw Error(ErrorCode::kDegenerateGeometry, "translation parallel to rotated bearing");
  }
  return std::asin(std::clamp(c.q.vec().dot(n) / nn, -1.0, 1.0));
}

Jacobian16 residual_em_jacobian(const Rotation& rotation, const Vec3& t, const Correspondence& c) {
  const Vec3 rp = rotation * c.p.vec();
  const Vec3 n = t.cross(rp);
  const double nn = n.norm();
  if (nn <= 1e-12) {
    throw Error(ErrorCode::kDegenerateGeometry, "translation parallel to rotated bearing");
  }
  const Vec3& q = c.q.vec();
  const double s = std::clamp(q.dot(n) / nn, -1.0, 1.0);
  const double denom = std::sqrt(std::max(1.0 - s * s, 1e-300));

  // dE/dn = q^T (I/|n| - n n^T/|n|^3) / sqrt(1 - s^2)
  const Eigen::RowVector3d de_dn =
      (q.transpose() / nn - (q.dot(n) / (nn * nn * nn)) * n.transpose()) / denom;
  // With n = t x Rp and R <- exp(w) R: dn/dw = -[t]x [Rp]x, dn/dt = -[Rp]x.
  const Mat3 rp_x = skew(rp);
  Jacobian16 j;
  j.leftCols<3>() = -de_dn * skew(t) * rp_x;
  j.rightCols<3>() = -de_dn * rp_x;
  return j;
}

double motion_energy(const Rotation& rotation, const Vec3& t,
                     std::span<const Correspondence> correspondences,
                     std::span<const int> indices) {
  double e = 0.0;
  auto add = [&](const Correspondence& c) {
    const Vec3 n = t.cross(rotation * c.p.vec());
    const double nn = n.norm();
    if (nn <= 1e-12) return;
    const double r = std::asin(std::clamp(c.q.vec().dot(n) / nn, -1.0, 1.0));
    e += r * r;
  };
  if (indices.empty()) {
    for (const auto& c : correspondences) add(c);
  } else {
    for (int i : indices) add(correspondences[static_cast<std::size_t>(i)]);
  }
  return e;
}

namespace {

struct LmRun {
  Rotation rotation = Rotation::Identity();
  Vec3 translation = Vec3::UnitZ();
  double energy = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::kConverged;
  std::vector<double> trace;
};

LmRun run_lm(std::span<const Correspondence> corr, std::span<const int> idx,
             const Rotation& r0, const Vec3& t0, const LmOptions& opt) {
  LmRun run;
  run.rotation = r0;
  run.translation = t0;
  run.energy = motion_energy(r0, t0, corr, idx);
  run.trace.push_back(run.energy);

  double lambda = opt.initial_lambda;
  bool accepted_any = false;
  run.status = SolveStatus::kMaxIterations;

  for (int it = 0; it < opt.max_iterations; ++it) {
    run.iterations = it + 1;
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (int i : idx) {
      const Correspondence& c = corr[static_cast<std::size_t>(i)];
      const Vec3 n = run.translation.cross(run.rotation * c.p.vec());
      if (n.norm() <= 1e-12) continue;
      const double r = residual_em(run.rotation, run.translation, c);
      const Jacobian16 j = residual_em_jacobian(run.rotation, run.translation, c);
      h.noalias() += j.transpose() * j;
      g.noalias() += j.transpose() * r;
    }
    if (run.energy <= 1e-30 || g.norm() <= 1e-18) {
      run.status = SolveStatus::kConverged;
      break;
    }

    const double floor = 1e-9 * std::max(h.diagonal().maxCoeff(), 1e-300);
    bool stepped = false;
    double step_norm = 0.0;
    for (int retry = 0; retry <= opt.max_retries; ++retry) {
      Eigen::Matrix<double, 6, 6> a = h;
      for (int k = 0; k < 6; ++k) a(k, k) += lambda * std::max(h(k, k), floor);
      const Eigen::Matrix<double, 6, 1> delta = -a.ldlt().solve(g);
      if (!delta.allFinite()) {
        lambda *= opt.lambda_factor;
        continue;
      }
      const Rotation r_new = (exp_rotation(delta.head<3>()) * run.rotation).normalized();
      const Vec3 t_new = run.translation + delta.tail<3>();
      const double e_new = motion_energy(r_new, t_new, corr, idx);
      if (e_new < run.energy) {
        run.rotation = r_new;
        run.translation = t_new;
        run.energy = e_new;
        run.trace.push_back(e_new);
        lambda = std::max(lambda / opt.lambda_factor, 1e-15);
        step_norm = delta.norm() / std::max(1.0, t_new.norm());
        stepped = true;
        accepted_any = true;
        break;
      }
      lambda *= opt.lambda_factor;
    }
    if (!stepped) {
      run.status = accepted_any ? SolveStatus::kConverged : SolveStatus::kNoConvergence;
      break;
    }
    if (step_norm < opt.step_tolerance) {
      run.status = SolveStatus::kConverged;
      break;
    }
  }
  return run;
}

// Median of the in-plane angles; used to orient t.
double median_theta(const Rotation& r, const Vec3& t, std::span<const Correspondence> corr,
                    std::span<const int> idx, double* median_abs) {
  std::vector<double> thetas;
  thetas.reserve(idx.size());
  for (int i : idx) {
    try {
      thetas.push_back(recover_theta(r, t, corr[static_cast<std::size_t>(i)]).omega);
    } catch (const Error&) {
    }
  }
  if (thetas.empty()) {
    *median_abs = 0.0;
    return 0.0;
  }
  auto mid = thetas.begin() + static_cast<std::ptrdiff_t>(thetas.size() / 2);
  std::nth_element(thetas.begin(), mid, thetas.end());
  const double med = *mid;
  for (auto& v : thetas) v = std::abs(v);
  std::nth_element(thetas.begin(), mid, thetas.end());
  *median_abs = *mid;
  return med;
}

RelativeMotion finalize(const LmRun& run, std::span<const Correspondence> corr,
                        std::span<const int> idx) {
  RelativeMotion m;
  m.rotation = run.rotation.normalized();
  m.translation = run.translation.normalized();
  m.status = run.status;
  m.iterations = run.iterations;
  m.energy_trace = run.trace;
  m.inliers.assign(idx.begin(), idx.end());

  double sum_abs = 0.0;
  int counted = 0;
  for (int i : idx) {
    const Correspondence& c = corr[static_cast<std::size_t>(i)];
    if (m.translation.cross(m.rotation * c.p.vec()).norm() <= 1e-12) continue;
    sum_abs += std::abs(residual_em(m.rotation, m.translation, c));
    ++counted;
  }
  m.mean_residual = counted > 0 ? sum_abs / counted : 0.0;

  double median_abs = 0.0;
  if (median_theta(m.rotation, m.translation, corr, idx, &median_abs) < 0.0) {
    m.translation = -m.translation;
  }
  m.degenerate_translation = median_abs < std::max(2.0 * m.mean_residual, 1e-7);
  return m;
}

}  // namespace

RelativeMotion refine_relative_motion(std::span<const Correspondence> correspondences,
                                      std::span<const int> inliers, const LmOptions& lm) {
  std::vector<int> all;
  if (inliers.empty()) {
    all.resize(correspondences.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    inliers = all;
  }
  if (inliers.size() < 6) {
    throw Error(ErrorCode::kInsufficientData, "too few correspondences for motion refinement");
  }
  Rng rng(lm.seed);
  LmRun best;
  best.energy = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, lm.restarts); ++r) {
    const Vec3 t0 = rng.unit_vector();
    LmRun run = run_lm(correspondences, inliers, Rotation::Identity(), t0, lm);
    if (run.energy < best.energy) best = std::move(run);
  }
  return finalize(best, correspondences, inliers);
}

RelativeMotion estimate_relative_motion(std::span<const Correspondence> correspondences,
                                        const MotionOptions& options) {
  if (static_cast<int>(correspondences.size()) < options.min_correspondences) {
    throw Error(ErrorCode::kInsufficientData, "need at least " +
                                                  std::to_string(options.min_correspondences) +
                                                  " correspondences");
  }
  std::vector<int> inliers;
  if (options.use_ransac) {
    const std::vector<bool> mask = ransac_inliers_7pt(correspondences, options.ransac);
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) inliers.push_back(static_cast<int>(i));
    }
  } else {
    for (std::size_t i = 0; i < correspondences.size(); ++i) inliers.push_back(static_cast<int>(i));
  }
  if (static_cast<int>(inliers.size()) < options.min_correspondences) {
    throw Error(ErrorCode::kInsufficientData, "too few inliers after RANSAC");
  }

  RelativeMotion m = refine_relative_motion(correspondences, inliers, options.lm);
  if (!options.use_ransac) return m;

  // Re-select inliers against the refined model and polish once if the set moved.
  std::vector<int> refined;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    const Correspondence& c = correspondences[i];
    if (m.translation.cross(m.rotation * c.p.vec()).norm() <= 1e-12) continue;
    if (std::abs(residual_em(m.rotation, m.translation, c)) < options.ransac.threshold_rad) {
      refined.push_back(static_cast<int>(i));
    }
  }
  if (refined != inliers && static_cast<int>(refined.size()) >= options.min_correspondences) {
    LmRun run = run_lm(correspondences, refined, m.rotation, m.translation, options.lm);
    RelativeMotion polished = finalize(run, correspondences, refined);
    polished.iterations += m.iterations;
    return polished;
  }
  return m;
}

ThetaResult recover_theta(const Rotation& rotation, const Vec3& t, const Correspondence& c) {
  const Vec3 rp = rotation * c.p.vec();
  const Vec3 n = t.cross(rp);
  const double nn = n.norm();
  if (nn <= 1e-12) {
    throw Error(ErrorCode::kDegenerateGeometry, "translation parallel to rotated bearing");
  }
  ThetaResult out;
  out.axis = n / nn;
  out.omega = signed_angle_in_plane(rp, c.q.vec(), out.axis);
  return out;
}

std::vector<Rotation> chain_global_rotations(std::span<const Rotation> relative) {
  std::vector<Rotation> global;
  global.reserve(relative.size() + 1);
  global.push_back(Rotation::Identity());
  for (const Rotation& r : relative) global.push_back((r * global.back()).normalized());
  return global;
}

Rotation estimate_rotation_only(std::span<const Correspondence> correspondences) {
  if (correspondences.size() < 3) {
    throw Error(ErrorCode::kInsufficientData, "rotation fit needs at least 3 correspondences");
  }
  Mat3 m = Mat3::Zero();
  for (const auto& c : correspondences) m.noalias() += c.q.vec() * c.p.vec().transpose();
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "rank-deficient cross-covariance");
  }
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return Rotation(r).normalized();
}

}  // namespace stab360

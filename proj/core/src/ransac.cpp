#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "stab360/error.hpp"
#include "stab360/motion.hpp"
#include "stab360/rng.hpp"

namespace stab360 {

namespace {

std::vector<double> solve_quadratic_real(double a, double b, double c) {
  if (std::abs(a) < 1e-300) {
    if (std::abs(b) < 1e-300) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double sq = std::sqrt(disc);
  // Numerically stable pair.
  const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  std::vector<double> roots;
  if (q != 0.0) {
    roots.push_back(q / a);
    roots.push_back(c / q);
  } else {
    roots.push_back(0.0);
  }
  if (roots.size() == 2 && roots[0] == roots[1]) roots.pop_back();
  return roots;
}

Mat3 reshape_row_major(const Eigen::Matrix<double, 9, 1>& v) {
  Mat3 f;
  f << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return f;
}

}  // namespace

std::vector<double> solve_cubic_real(double a, double b, double c, double d) {
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
  if (scale == 0.0) return {};
  if (std::abs(a) <= 1e-14 * scale) return solve_quadratic_real(b, c, d);

  // Monic form, then Cardano on the depressed cubic t^3 + p t + q with x = t - B/3.
  const double B = b / a, C = c / a, D = d / a;
  const double p = C - B * B / 3.0;
  const double q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
  using cd = std::complex<double>;
  const cd disc = std::sqrt(cd(q * q / 4.0 + p * p * p / 27.0, 0.0));
  cd u3 = -q / 2.0 + disc;
  if (std::abs(u3) < std::abs(-q / 2.0 - disc)) u3 = -q / 2.0 - disc;

  std::vector<double> roots;
  const cd omega(-0.5, std::sqrt(3.0) / 2.0);
  if (std::abs(u3) < 1e-300) {
    roots.push_back(-B / 3.0);  // triple root
  } else {
    const cd u = std::pow(u3, 1.0 / 3.0);
    const cd v = -p / (3.0 * u);
    const cd candidates[3] = {u + v, u * omega + v * std::conj(omega),
                              u * std::conj(omega) + v * omega};
    for (const cd& t : candidates) {
      if (std::abs(t.imag()) < 1e-9) roots.push_back(t.real() - B / 3.0);
    }
  }
  // Newton polish on the original polynomial.
  for (double& x : roots) {
    for (int k = 0; k < 3; ++k) {
      const double f = ((a * x + b) * x + c) * x + d;
      const double df = (3.0 * a * x + 2.0 * b) * x + c;
      if (df == 0.0) break;
      x -= f / df;
    }
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [](double l, double r) { return std::abs(l - r) < 1e-12 * (1.0 + std::abs(l)); }),
              roots.end());
  return roots;
}

std::vector<Mat3> seven_point_candidates(std::span<const Correspondence> seven) {
  if (seven.size() != 7) {
    throw Error(ErrorCode::kInvalidArgument, "seven-point solver needs exactly 7 correspondences");
  }
  // No coordinate normalization: the bearings are already unit vectors.
  Eigen::Matrix<double, 7, 9> a;
  for (int i = 0; i < 7; ++i) {
    const Vec3& p = seven[static_cast<std::size_t>(i)].p.vec();
    const Vec3& q = seven[static_cast<std::size_t>(i)].q.vec();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a(i, 3 * r + c) = q(r) * p(c);
    }
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 7, 9>> svd(a, Eigen::ComputeFullV);
  const Mat3 f1 = reshape_row_major(svd.matrixV().col(8));
  const Mat3 f2 = reshape_row_major(svd.matrixV().col(7));

  // det(F1 + l F2) = c3 l^3 + c2 l^2 + c1 l + c0, recovered from four samples.
  auto det_at = [&](double l) { return (f1 + l * f2).determinant(); };
  const double d0 = det_at(0.0), d1 = det_at(1.0), dm1 = det_at(-1.0), d2 = det_at(2.0);
  const double c0 = d0;
  const double c2 = 0.5 * (d1 + dm1) - c0;
  const double odd = 0.5 * (d1 - dm1);        // c1 + c3
  const double rest = d2 - c0 - 4.0 * c2;     // 2 c1 + 8 c3
  const double c3 = (rest - 2.0 * odd) / 6.0;
  const double c1 = odd - c3;

  std::vector<Mat3> out;
  for (double l : solve_cubic_real(c3, c2, c1, c0)) {
    Mat3 f = f1 + l * f2;
    const double n = f.norm();
    if (n > 0.0 && std::isfinite(n)) out.push_back(f / n);
  }
  // The F2 direction itself is a root at infinity when the cubic degenerates.
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale > 0.0 && std::abs(c3) <= 1e-14 * scale) out.push_back(f2 / f2.norm());
  return out;
}

double epipolar_angle(const Mat3& f, const Correspondence& c) {
  const Vec3 fp = f * c.p.vec();
  const double n = fp.norm();
  if (n <= 1e-300) return kPi / 2.0;
  return std::abs(std::asin(std::clamp(c.q.vec().dot(fp) / n, -1.0, 1.0)));
}

std::vector<bool> ransac_inliers_7pt(std::span<const Correspondence> correspondences,
                                     const RansacOptions& options) {
  const int n = static_cast<int>(correspondences.size());
  if (n < 7) throw Error(ErrorCode::kInsufficientData, "RANSAC needs at least 7 correspondences");

  Rng rng(options.seed);
  std::vector<bool> best(static_cast<std::size_t>(n), false);
  int best_count = -1;
  std::vector<bool> mask(static_cast<std::size_t>(n));
  std::array<int, 7> sample{};
  std::vector<Correspondence> seven(7);

  long long needed = options.max_iterations;
  for (long long it = 0; it < needed && it < options.max_iterations; ++it) {
    for (int k = 0; k < 7; ++k) {
      int idx;
      do {
        idx = rng.uniform_int(n);
      } while (std::find(sample.begin(), sample.begin() + k, idx) != sample.begin() + k);
      sample[static_cast<std::size_t>(k)] = idx;
      seven[static_cast<std::size_t>(k)] = correspondences[static_cast<std::size_t>(idx)];
    }
    for (const Mat3& f : seven_point_candidates(seven)) {
      int count = 0;
      for (int i = 0; i < n; ++i) {
        const bool in = epipolar_angle(f, correspondences[static_cast<std::size_t>(i)]) <
                        options.threshold_rad;
        mask[static_cast<std::size_t>(i)] = in;
        count += in ? 1 : 0;
      }
      if (count > best_count) {
        best_count = count;
        best = mask;
        const double w = static_cast<double>(count) / n;
        const double all_good = std::pow(w, 7.0);
        if (all_good >= 1.0 - 1e-15) {
          needed = 0;
        } else if (all_good > 0.0) {
          const double k = std::log(1.0 - options.confidence) / std::log(1.0 - all_good);
          needed = std::min<long long>(options.max_iterations,
                                       static_cast<long long>(std::ceil(std::max(k, 1.0))));
        }
      }
    }
  }
  if (best_count < options.min_inlier_ratio * n) {
    throw Error(ErrorCode::kRobustFitFailure, "no fundamental matrix with a majority of inliers");
  }
  return best;
}

}  // namespace stab360

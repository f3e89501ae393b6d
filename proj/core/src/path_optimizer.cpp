#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "path_model.hpp"
#include "stab360/error.hpp"
#include "stab360/path.hpp"

namespace stab360 {

using namespace detail;

PathTransform PathTransform::identity(int frames) {
  PathTransform w;
  w.rotations.assign(static_cast<std::size_t>(frames), Rotation::Identity());
  w.translations.assign(static_cast<std::size_t>(frames), Vec3::Zero());
  w.translation_frozen.assign(static_cast<std::size_t>(frames), false);
  return w;
}

SmoothnessTerms smoothness_terms(std::span<const Rotation> path, std::span<const Rotation> input,
                                 const PathOptions& options) {
  if (path.size() != input.size()) {
    throw Error(ErrorCode::kInvalidArgument, "path and input lengths differ");
  }
  if (path.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two frames");
  if (options.norm != 1 && options.norm != 2) {
    throw Error(ErrorCode::kInvalidArgument, "norm must be 1 or 2");
  }
  std::vector<Rotation> c(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) c[i] = path[i] * input[i];
  auto term = [&](const Rotation& a, const Rotation& b) {
    const double d = quat_path_difference(a, b, options.norm);
    return options.norm == 2 ? d * d : d;
  };
  SmoothnessTerms s;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) s.first_order += term(c[i + 1], c[i]);
  for (std::size_t i = 0; i + 2 < c.size(); ++i) {
    s.second_order += term(c[i + 2].conjugate() * c[i + 1], c[i + 1].conjugate() * c[i]);
  }
  s.first_order *= options.alpha1;
  s.second_order *= options.alpha2;
  return s;
}

double smoothness_energy(std::span<const Rotation> path, std::span<const Rotation> input,
                         const PathOptions& options) {
  return smoothness_terms(path, input, options).total();
}

double rotation_path_energy(std::span<const Rotation> path, std::span<const Rotation> input,
                            std::span<const DirectionalConstraint> constraints,
                            const PathOptions& options) {
  double e = path.size() >= 2 ? smoothness_energy(path, input, options) : 0.0;
  if (options.direction_weight != 0.0) {
    e += options.direction_weight *
         directional_energy(path, constraints, options.negative_alpha, options.negative_beta);
  }
  return e;
}

namespace {

template <class T>
std::array<T, 4> aligned_difference(const Quat<T>& a, const Quat<T>& b) {
  const double s = qdot_value(a, b) < 0.0 ? -1.0 : 1.0;
  return {a.w - s * b.w, a.x - s * b.x, a.y - s * b.y, a.z - s * b.z};
}

struct RotationProblem {
  std::span<const Rotation> input;
  std::span<const DirectionalConstraint> constraints;
  PathOptions options;
  PathLayout layout;

  template <class T>
  Quat<T> composed(const PathState& s, int frame, int base) const {
    return qmul(frame_rotation<T>(layout, s, frame, base),
                qconst<T>(input[static_cast<std::size_t>(frame)]));
  }

  template <bool kJac>
  void evaluate(const PathState& s, Linearization& lin) const {
    using T6 = std::conditional_t<kJac, Jet<6>, double>;
    using T12 = std::conditional_t<kJac, Jet<12>, double>;
    using T18 = std::conditional_t<kJac, Jet<18>, double>;
    const bool l1 = options.norm == 1;
    const int n = layout.frames;
    for (int i = 0; i + 1 < n; ++i) {
      const auto vars = layout.vars<2>({i, i + 1});
      const auto r = aligned_difference(composed<T12>(s, i + 1, 6), composed<T12>(s, i, 0));
      emit(lin, vars, r, options.alpha1, l1, true);
    }
    for (int i = 0; i + 2 < n; ++i) {
      const auto vars = layout.vars<3>({i, i + 1, i + 2});
      const Quat<T18> c0 = composed<T18>(s, i, 0);
      const Quat<T18> c1 = composed<T18>(s, i + 1, 6);
      const Quat<T18> c2 = composed<T18>(s, i + 2, 12);
      const auto r = aligned_difference(qmul(qconj(c2), c1), qmul(qconj(c1), c0));
      emit(lin, vars, r, options.alpha2, l1, true);
    }
    for (const auto& c : constraints) add_constraint_block<T6>(lin, layout, s, c, c.target, options);
  }
};

LsqOptions lsq_options(const PathOptions& o) {
  LsqOptions l;
  l.max_iterations = o.max_iterations;
  l.function_tolerance = o.tolerance;
  l.norm_epsilon = o.norm_epsilon;
  return l;
}

void check_constraints(std::span<const DirectionalConstraint> constraints, int frames) {
  for (const auto& c : constraints) {
    if (c.frame < 0 || c.frame >= frames) {
      throw Error(ErrorCode::kInvalidArgument,
                  "constraint frame " + std::to_string(c.frame) + " outside the clip");
    }
  }
}

PathSolution run_rotation_solve(std::span<const Rotation> input,
                                std::span<const DirectionalConstraint> constraints,
                                const PathOptions& options, const PathTransform& init) {
  RotationProblem problem{input, constraints, options,
                          PathLayout::make(static_cast<int>(input.size()), options.roll_locked,
                                           false, {})};
  PathState state = PathState::from_transform(init, options.roll_locked);
  const auto summary = solve_least_squares(
      state, problem.layout.num_params,
      [&](const PathState& s, Linearization& lin) {
        lin.with_jacobian() ? problem.evaluate<true>(s, lin) : problem.evaluate<false>(s, lin);
      },
      [&](const PathState& s, const Eigen::VectorXd& d) { return retract(problem.layout, s, d); },
      lsq_options(options));
  PathSolution out;
  out.transform = PathTransform::identity(static_cast<int>(input.size()));
  out.transform.rotations = state.q;
  out.initial_energy = summary.initial_cost;
  out.final_energy = summary.final_cost;
  out.energy_trace = summary.cost_trace;
  out.iterations = summary.iterations;
  out.converged = summary.converged;
  return out;
}

Rotation project_roll_free(const Rotation& q) {
  const Vec2 yp = roll_free_yaw_pitch(q);
  return from_yaw_pitch_roll(yp[0], yp[1], 0.0);
}

/// Solves on every stride-th frame, then slerps the composed rotations in between.
PathTransform staged_initialization(std::span<const Rotation> input,
                                    std::span<const DirectionalConstraint> constraints,
                                    const PathOptions& options) {
  const int n = static_cast<int>(input.size());
  const int stride = options.keyframe_stride;
  if (stride <= 1 || n < 2 * stride + 1) return PathTransform::identity(n);

  std::vector<int> keys;
  for (int f = 0; f < n - 1; f += stride) keys.push_back(f);
  keys.push_back(n - 1);
  std::vector<Rotation> sub_input;
  for (int k : keys) sub_input.push_back(input[static_cast<std::size_t>(k)]);

  std::vector<DirectionalConstraint> sub_constraints;
  for (const auto& c : constraints) {
    const auto nearest = std::min_element(keys.begin(), keys.end(), [&](int a, int b) {
      return std::abs(a - c.frame) < std::abs(b - c.frame);
    });
    DirectionalConstraint m = c;
    m.frame = static_cast<int>(nearest - keys.begin());
    // Re-express the target in the keyframe's input coordinates.
    m.target = Bearing(input[static_cast<std::size_t>(*nearest)] *
                       (input[static_cast<std::size_t>(c.frame)].conjugate() * c.target.vec()));
    sub_constraints.push_back(m);
  }
  const PathSolution sub =
      run_rotation_solve(sub_input, sub_constraints, options,
                         PathTransform::identity(static_cast<int>(keys.size())));

  PathTransform init = PathTransform::identity(n);
  for (std::size_t m = 0; m + 1 < keys.size(); ++m) {
    const Rotation ca = sub.transform.rotations[m] * sub_input[m];
    const Rotation cb = sub.transform.rotations[m + 1] * sub_input[m + 1];
    for (int f = keys[m]; f <= keys[m + 1]; ++f) {
      const double u = static_cast<double>(f - keys[m]) / (keys[m + 1] - keys[m]);
      const Rotation composed = ca.slerp(u, cb);
      Rotation w = (composed * input[static_cast<std::size_t>(f)].conjugate()).normalized();
      init.rotations[static_cast<std::size_t>(f)] = options.roll_locked ? project_roll_free(w) : w;
    }
  }
  return init;
}

}  // namespace

PathSolution solve_rotation_only_path(std::span<const Rotation> input,
                                      std::span<const DirectionalConstraint> constraints,
                                      const PathOptions& options, const PathTransform* initial) {
  if (input.empty()) throw Error(ErrorCode::kInvalidArgument, "no frames");
  if (options.norm != 1 && options.norm != 2) {
    throw Error(ErrorCode::kInvalidArgument, "norm must be 1 or 2");
  }
  if (options.alpha1 < 0.0 || options.alpha2 < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "smoothness weights must be non-negative");
  }
  check_constraints(constraints, static_cast<int>(input.size()));
  if (initial && initial->size() != static_cast<int>(input.size())) {
    throw Error(ErrorCode::kInvalidArgument, "initial path length differs from the input");
  }
  const PathTransform init =
      initial ? *initial : staged_initialization(input, constraints, options);
  return run_rotation_solve(input, constraints, options, init);
}

PathSolution solve_two_stage(std::span<const Rotation> input,
                             std::span<const DirectionalConstraint> constraints,
                             const PathOptions& options) {
  check_constraints(constraints, static_cast<int>(input.size()));
  PathOptions stabilize = options;
  stabilize.direction_weight = 0.0;
  PathSolution out = solve_rotation_only_path(input, {}, stabilize);

  std::vector<std::pair<int, Rotation>> anchors;
  std::vector<DirectionalConstraint> positives;
  for (const auto& c : constraints) {
    if (c.sign == ConstraintSign::kPositive && c.weight > 0.0) positives.push_back(c);
  }
  std::stable_sort(positives.begin(), positives.end(),
                   [](const auto& a, const auto& b) { return a.frame < b.frame; });
  for (const auto& c : positives) {
    if (!anchors.empty() && anchors.back().first == c.frame) continue;
    const Vec3 seen = out.transform.rotations[static_cast<std::size_t>(c.frame)] * c.target.vec();
    anchors.emplace_back(c.frame, Rotation::FromTwoVectors(seen, front_vector()));
  }
  if (anchors.empty()) return out;

  for (int f = 0; f < static_cast<int>(input.size()); ++f) {
    Rotation a;
    if (f <= anchors.front().first) {
      a = anchors.front().second;
    } else if (f >= anchors.back().first) {
      a = anchors.back().second;
    } else {
      std::size_t k = 0;
      while (anchors[k + 1].first < f) ++k;
      const double u = static_cast<double>(f - anchors[k].first) /
                       (anchors[k + 1].first - anchors[k].first);
      a = anchors[k].second.slerp(u, anchors[k + 1].second);
    }
    auto& q = out.transform.rotations[static_cast<std::size_t>(f)];
    q = (a * q).normalized();
  }
  out.final_energy = rotation_path_energy(out.transform.rotations, input, constraints, options);
  out.energy_trace.push_back(out.final_energy);
  return out;
}

}  // namespace stab360

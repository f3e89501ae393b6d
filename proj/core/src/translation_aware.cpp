#include <algorithm>
#include <cmath>
#include <type_traits>

#include "path_model.hpp"
#include "stab360/error.hpp"
#include "stab360/path.hpp"

namespace stab360 {

using namespace detail;

Vec3 project_point(const Vec3& p, double phi, double omega, const Rotation& rw, const Vec3& tw) {
  const Vec3 v = std::sin(phi) * p - std::sin(omega) * tw;
  const double n = v.norm();
  if (n < 1e-12) throw Error(ErrorCode::kDegenerateGeometry, "projected point at the camera center");
  return rw.conjugate() * (v / n);
}

std::vector<std::vector<PointGeometry>> compute_point_geometry(
    const TrackSet& tracks, std::span<const FrameMotion> motions, std::span<const int> keyframes) {
  if (static_cast<int>(motions.size()) != tracks.frame_count) {
    throw Error(ErrorCode::kInvalidArgument, "one motion per frame is required");
  }
  std::vector<std::vector<PointGeometry>> out;
  out.reserve(tracks.trajectories.size());
  for (const auto& tr : tracks.trajectories) {
    std::vector<int> refs;
    for (int k : keyframes) {
      if (tr.covers(k)) refs.push_back(k);
    }
    std::vector<PointGeometry> geo(tr.points.size());
    for (int j = tr.start_frame; j <= tr.end_frame(); ++j) {
      int ref = -1;
      for (int k : refs) {
        if (k != j && (ref < 0 || std::abs(k - j) < std::abs(ref - j))) ref = k;
      }
      if (ref < 0) {
        // No keyframe besides j itself: use the far end of the track.
        ref = (j - tr.start_frame >= tr.end_frame() - j) ? tr.start_frame : tr.end_frame();
      }
      PointGeometry& g = geo[static_cast<std::size_t>(j - tr.start_frame)];
      if (ref == j) continue;
      const FrameMotion& mk = motions[static_cast<std::size_t>(ref)];
      const FrameMotion& mj = motions[static_cast<std::size_t>(j)];
      const Rotation r_kj = mj.global_rotation * mk.global_rotation.conjugate();
      // Baseline from the reference keyframe to j in j's coordinates.
      const Vec3 chord = mj.translation + r_kj * mk.translation;
      if (chord.norm() < 1e-12) continue;
      const Vec3 t = (j > ref ? 1.0 : -1.0) * chord.normalized();
      const Correspondence c{tr.at(ref), tr.at(j)};
      const Vec3 rp = r_kj * c.p.vec();
      try {
        const double phi = angle_between(rp, t);
        if (std::sin(phi) < 1e-6) continue;
        g.omega = std::max(0.0, recover_theta(r_kj, t, c).omega);
        g.phi = phi;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateGeometry) throw;
      }
    }
    out.push_back(std::move(geo));
  }
  return out;
}

std::vector<std::vector<Vec3>> transform_trajectories(
    const TrackSet& tracks, const std::vector<std::vector<PointGeometry>>& geometry,
    const PathTransform& path) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(tracks.trajectories.size());
  for (std::size_t i = 0; i < tracks.trajectories.size(); ++i) {
    const auto& tr = tracks.trajectories[i];
    std::vector<Vec3> w;
    w.reserve(tr.points.size());
    for (std::size_t k = 0; k < tr.points.size(); ++k) {
      const auto f = static_cast<std::size_t>(tr.start_frame) + k;
      const Vec3 t = f < path.translations.size() ? path.translations[f] : Vec3::Zero();
      const PointGeometry& g = geometry[i][k];
      w.push_back(project_point(tr.points[k], g.phi, g.omega, path.rotations[f].conjugate(), t));
    }
    out.push_back(std::move(w));
  }
  return out;
}

SmoothnessTerms trajectory_smoothness(std::span<const std::vector<Vec3>> trajectories,
                                      double alpha1, double alpha2) {
  SmoothnessTerms s;
  for (const auto& t : trajectories) {
    const TrajectoryCost c = trajectory_cost(t);
    s.first_order += alpha1 * c.first_order;
    s.second_order += alpha2 * c.second_order;
  }
  return s;
}

namespace {

struct Observation {
  Vec3 p;
  double sin_phi;
  double sin_omega;
};

struct TranslationProblem {
  std::vector<std::vector<Observation>> tracks;
  std::vector<int> start;
  std::span<const DirectionalConstraint> constraints;
  PathOptions options;
  PathLayout layout;

  template <class T>
  V3<T> transformed(const PathState& s, int track, int frame, int base) const {
    const Observation& o =
        tracks[static_cast<std::size_t>(track)][static_cast<std::size_t>(frame - start[static_cast<std::size_t>(track)])];
    const V3<T> t = frame_translation<T>(layout, s, frame, base + 3);
    const V3<T> v{o.sin_phi * o.p.x() - o.sin_omega * t[0], o.sin_phi * o.p.y() - o.sin_omega * t[1],
                  o.sin_phi * o.p.z() - o.sin_omega * t[2]};
    return qrotate(frame_rotation<T>(layout, s, frame, base), vnormalize(v));
  }

  template <bool kJac>
  void evaluate(const PathState& s, Linearization& lin) const {
    using T6 = std::conditional_t<kJac, Jet<6>, double>;
    using T12 = std::conditional_t<kJac, Jet<12>, double>;
    using T18 = std::conditional_t<kJac, Jet<18>, double>;
    const bool l1 = options.norm == 1;
    for (int i = 0; i < static_cast<int>(tracks.size()); ++i) {
      const int s0 = start[static_cast<std::size_t>(i)];
      const int e0 = s0 + static_cast<int>(tracks[static_cast<std::size_t>(i)].size()) - 1;
      for (int j = s0; j + 1 <= e0; ++j) {
        const auto vars = layout.vars<2>({j, j + 1});
        const V3<T12> a = transformed<T12>(s, i, j, 0);
        const V3<T12> b = transformed<T12>(s, i, j + 1, 6);
        emit(lin, vars, std::array<T12, 3>{a[0] - b[0], a[1] - b[1], a[2] - b[2]},
             options.alpha1, l1, false);
      }
      for (int j = s0; j + 2 <= e0; ++j) {
        const auto vars = layout.vars<3>({j, j + 1, j + 2});
        const V3<T18> a = transformed<T18>(s, i, j, 0);
        const V3<T18> b = transformed<T18>(s, i, j + 1, 6);
        const V3<T18> c = transformed<T18>(s, i, j + 2, 12);
        emit(lin, vars,
             std::array<T18, 3>{c[0] - 2.0 * b[0] + a[0], c[1] - 2.0 * b[1] + a[1],
                                c[2] - 2.0 * b[2] + a[2]},
             options.alpha2, l1, false);
      }
    }
    for (const auto& c : constraints) add_constraint_block<T6>(lin, layout, s, c, c.target, options);
    for (int f = 0; f < layout.frames; ++f) {
      if (layout.trans_offset[static_cast<std::size_t>(f)] < 0) continue;
      const V3<T6> t = frame_translation<T6>(layout, s, f, 3);
      emit(lin, layout.vars<1>({f}), std::array<T6, 3>{t[0], t[1], t[2]},
           options.translation_regularizer, false, false);
    }
  }
};

}  // namespace

PathSolution solve_translation_aware_path(const TrackSet& tracks,
                                          std::span<const FrameMotion> motions,
                                          std::span<const int> keyframes,
                                          std::span<const DirectionalConstraint> constraints,
                                          const PathOptions& options,
                                          const PathTransform* initial) {
  const int n = tracks.frame_count;
  if (n <= 0) throw Error(ErrorCode::kInvalidArgument, "no frames");
  if (static_cast<int>(motions.size()) != n) {
    throw Error(ErrorCode::kInvalidArgument, "one motion per frame is required");
  }
  const auto geometry = compute_point_geometry(tracks, motions, keyframes);

  TranslationProblem problem;
  problem.constraints = constraints;
  problem.options = options;
  std::vector<int> live(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < tracks.trajectories.size(); ++i) {
    const auto& tr = tracks.trajectories[i];
    std::vector<Observation> obs;
    for (std::size_t k = 0; k < tr.points.size(); ++k) {
      obs.push_back({tr.points[k].vec(), std::sin(geometry[i][k].phi), std::sin(geometry[i][k].omega)});
      ++live[static_cast<std::size_t>(tr.start_frame) + k];
    }
    problem.tracks.push_back(std::move(obs));
    problem.start.push_back(tr.start_frame);
  }
  std::vector<bool> frozen(static_cast<std::size_t>(n));
  for (int f = 0; f < n; ++f) frozen[static_cast<std::size_t>(f)] = live[static_cast<std::size_t>(f)] < options.min_live_tracks;
  problem.layout = PathLayout::make(n, options.roll_locked, true, frozen);

  PathTransform init;
  if (initial) {
    if (initial->size() != n) {
      throw Error(ErrorCode::kInvalidArgument, "initial path length differs from the input");
    }
    init = *initial;
  } else {
    std::vector<Rotation> input;
    for (const auto& m : motions) input.push_back(m.global_rotation);
    init = solve_rotation_only_path(input, constraints, options).transform;
  }
  init.translations.assign(static_cast<std::size_t>(n), Vec3::Zero());

  PathState state = PathState::from_transform(init, options.roll_locked);
  LsqOptions lsq;
  lsq.max_iterations = options.max_iterations;
  lsq.function_tolerance = options.tolerance;
  lsq.norm_epsilon = options.norm_epsilon;
  const auto summary = solve_least_squares(
      state, problem.layout.num_params,
      [&](const PathState& s, Linearization& lin) {
        lin.with_jacobian() ? problem.evaluate<true>(s, lin) : problem.evaluate<false>(s, lin);
      },
      [&](const PathState& s, const Eigen::VectorXd& d) { return retract(problem.layout, s, d); },
      lsq);

  PathSolution out;
  out.transform.rotations = state.q;
  out.transform.translations = state.t;
  out.transform.translation_frozen = frozen;
  out.initial_energy = summary.initial_cost;
  out.final_energy = summary.final_cost;
  out.energy_trace = summary.cost_trace;
  out.iterations = summary.iterations;
  out.converged = summary.converged;
  return out;
}

}  // namespace stab360

#include "stab360/synth.hpp"

#include <cmath>

#include "stab360/error.hpp"
#include "stab360/rng.hpp"

namespace stab360 {

void SceneParams::validate() const {
  if (!(tau > 0.0) || !(gamma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau and gamma must be positive");
  if (outlier_fraction < 0.0 || outlier_fraction >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "outlier_fraction must be in [0, 1)");
  }
  if (n_points < 1) throw Error(ErrorCode::kInvalidArgument, "n_points must be positive");
  if (noise_deg < 0.0) throw Error(ErrorCode::kInvalidArgument, "noise must be non-negative");
  if (!(fov_deg > 0.0) || fov_deg > 360.0) throw Error(ErrorCode::kInvalidArgument, "fov must be in (0, 360]");
}

Vec3 perturb_bearing(const Vec3& b, double sigma_rad, Rng& rng) {
  const double n1 = rng.normal();
  const double n2 = rng.normal();
  if (sigma_rad == 0.0) return b;
  const Vec3 helper = std::abs(b.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = b.cross(helper).normalized();
  const Vec3 e2 = b.cross(e1);
  // sigma is the RMS angular offset, so each tangent axis carries sigma / sqrt(2).
  const Vec3 d = (sigma_rad / std::sqrt(2.0)) * (n1 * e1 + n2 * e2);
  const double a = d.norm();
  if (a == 0.0) return b;
  return (std::cos(a) * b + std::sin(a) * d / a).normalized();
}

Scene generate_scene(const SceneParams& params) {
  params.validate();
  Rng rng(params.seed);
  Scene s;
  do {
    s.camera2_position = rng.in_ball(params.tau);
  } while (s.camera2_position.norm() < 1e-6);
  const double k = deg_to_rad(params.kappa_deg);
  const double yaw = rng.uniform(-k, k);
  const double pitch = rng.uniform(-k, k);
  const double roll = rng.uniform(-k, k);
  const Rotation cam2_to_world = from_yaw_pitch_roll(yaw, pitch, roll);
  const Rotation world_to_cam2 = cam2_to_world.conjugate();
  s.truth.rotation = world_to_cam2;
  s.truth.translation = (world_to_cam2 * s.camera2_position).normalized();

  const bool limited = params.fov_deg < 360.0;
  const double half_fov = deg_to_rad(params.fov_deg) / 2.0;
  auto in_view = [&](const Vec3& b) { return !limited || angle_between(b, front_vector()) <= half_fov; };

  long attempts = 0;
  while (static_cast<int>(s.correspondences.size()) < params.n_points) {
    if (++attempts > 1000000) {
      throw Error(ErrorCode::kGenerationFailure, "could not place the requested points in view");
    }
    const Vec3 p = rng.in_ball(params.gamma);
    if (p.norm() < 0.1 || (p - s.camera2_position).norm() < 0.1) continue;
    const Vec3 b1 = p.normalized();
    const Vec3 b2 = (world_to_cam2 * (p - s.camera2_position)).normalized();
    if (!in_view(b1) || !in_view(b2)) continue;
    s.correspondences.push_back({Bearing(b1), Bearing(b2)});
  }
  const double sigma = deg_to_rad(params.noise_deg);
  for (auto& c : s.correspondences) c.q = Bearing(perturb_bearing(c.q, sigma, rng));

  s.outlier.assign(s.correspondences.size(), false);
  const int n = static_cast<int>(s.correspondences.size());
  const int n_out = static_cast<int>(std::lround(params.outlier_fraction * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < n_out; ++i) {
    const int j = i + rng.uniform_int(n - i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    const auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
    Vec3 b;
    do {
      b = rng.unit_vector();
    } while (!in_view(b));
    s.correspondences[idx].q = Bearing(b);
    s.outlier[idx] = true;
  }
  return s;
}

PoseError pose_error(const RelativeMotion& estimate, const RelativeMotion& truth) {
  PoseError e;
  e.rotation_deg = rad_to_deg(rotation_angle(estimate.rotation * truth.rotation.conjugate()));
  const double a = angle_between(estimate.translation, truth.translation);
  e.translation_deg = rad_to_deg(std::min(a, kPi - a));
  return e;
}

Sequence generate_sequence(const SequenceParams& params) {
  if (params.frames < 1 || params.points < 1) {
    throw Error(ErrorCode::kInvalidArgument, "sequence needs frames and points");
  }
  Rng rng(params.seed);
  const int n = params.frames;
  Sequence seq;
  const double yaw_rate = deg_to_rad(params.yaw_rate_deg);
  const double sway = deg_to_rad(params.sway_deg);
  const double jitter = deg_to_rad(params.rotation_jitter_deg);

  Vec3 pos = Vec3::Zero();
  std::vector<Vec3> path_pos;
  for (int j = 0; j < n; ++j) {
    const double heading = yaw_rate * j;
    const double phase = 2.0 * kPi * j / params.sway_period;
    const Rotation smooth = from_yaw_pitch_roll(heading + sway * std::sin(phase),
                                                0.7 * sway * std::sin(1.3 * phase + 0.4),
                                                0.5 * sway * std::sin(0.7 * phase + 1.1));
    const Rotation shake = from_yaw_pitch_roll(jitter * rng.normal(), jitter * rng.normal(),
                                               jitter * rng.normal());
    const Rotation cam = (smooth * shake).normalized();
    const Vec3 travel(std::sin(heading), 0.0, std::cos(heading));
    const Vec3 offset(params.translation_jitter * rng.normal(), params.translation_jitter * rng.normal(),
                      params.translation_jitter * rng.normal());
    path_pos.push_back(pos);
    seq.positions.push_back(pos + offset);
    seq.camera_to_world.push_back(cam);
    seq.headings.push_back((cam.conjugate() * travel).normalized());
    // Advance along the arc using the heading halfway to the next frame.
    const double mid = yaw_rate * (j + 0.5);
    pos += params.speed * Vec3(std::sin(mid), 0.0, std::cos(mid));
  }
  for (int j = 0; j < n; ++j) {
    seq.global_rotations.push_back(
        (seq.camera_to_world[static_cast<std::size_t>(j)].conjugate() * seq.camera_to_world[0]).normalized());
  }

  auto spawn_point = [&]() {
    for (;;) {
      const Vec3 anchor = path_pos[static_cast<std::size_t>(rng.uniform_int(n))];
      const Vec3 p = anchor + rng.uniform(params.near, params.far) * rng.unit_vector();
      bool clear = true;
      for (const Vec3& c : seq.positions) {
        if ((p - c).norm() < 0.5 * params.near) {
          clear = false;
          break;
        }
      }
      if (clear) return p;
    }
  };

  const double sigma = deg_to_rad(params.noise_deg);
  seq.tracks.frame_count = n;
  struct Live {
    std::size_t index;
    Vec3 point;
  };
  std::vector<Live> live;
  auto observe = [&](const Vec3& p, int j) {
    const auto fj = static_cast<std::size_t>(j);
    const Vec3 b = (seq.camera_to_world[fj].conjugate() * (p - seq.positions[fj])).normalized();
    return Bearing(perturb_bearing(b, sigma, rng));
  };
  int next_id = 0;
  for (int j = 0; j < n; ++j) {
    std::vector<Live> kept;
    for (const auto& l : live) {
      if (params.dropout > 0.0 && rng.uniform() < params.dropout) continue;
      kept.push_back(l);
    }
    live = std::move(kept);
    while (static_cast<int>(live.size()) < params.points) {
      FeatureTrajectory t;
      t.id = next_id++;
      t.start_frame = j;
      seq.tracks.trajectories.push_back(t);
      live.push_back({seq.tracks.trajectories.size() - 1, spawn_point()});
    }
    for (const auto& l : live) seq.tracks.trajectories[l.index].points.push_back(observe(l.point, j));
  }
  return seq;
}

}  // namespace stab360

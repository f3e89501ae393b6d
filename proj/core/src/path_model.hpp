#pragma once

// Parameter layout, retraction and templated rotation algebra shared by the
// rotation-only and translation-aware path solvers.

#include <array>
#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

#include "stab360/jet.hpp"
#include "stab360/least_squares.hpp"
#include "stab360/path.hpp"

namespace stab360::detail {

template <class T>
struct Quat {
  T w, x, y, z;
};

template <class T>
using V3 = std::array<T, 3>;

template <class T>
Quat<T> qconst(const Rotation& q) {
  return {T(q.w()), T(q.x()), T(q.y()), T(q.z())};
}

template <class T>
Quat<T> qmul(const Quat<T>& a, const Quat<T>& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

template <class T>
Quat<T> qconj(const Quat<T>& q) {
  return {q.w, -q.x, -q.y, -q.z};
}

template <class T>
Quat<T> qnormalize(const Quat<T>& q) {
  using std::sqrt;
  const T n = sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

template <class T>
V3<T> cross(const V3<T>& a, const V3<T>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T>
V3<T> qrotate(const Quat<T>& q, const V3<T>& v) {
  const V3<T> u{q.x, q.y, q.z};
  V3<T> t = cross(u, v);
  for (auto& c : t) c = c * 2.0;
  const V3<T> ut = cross(u, t);
  return {v[0] + q.w * t[0] + ut[0], v[1] + q.w * t[1] + ut[1], v[2] + q.w * t[2] + ut[2]};
}

template <class T>
V3<T> vnormalize(const V3<T>& v) {
  using std::sqrt;
  const T n = sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

template <class T>
V3<T> vconst(const Vec3& v) {
  return {T(v.x()), T(v.y()), T(v.z())};
}

template <class T>
double qdot_value(const Quat<T>& a, const Quat<T>& b) {
  return value_of(a.w) * value_of(b.w) + value_of(a.x) * value_of(b.x) +
         value_of(a.y) * value_of(b.y) + value_of(a.z) * value_of(b.z);
}

template <class T>
T make_var(double value, int slot) {
  if constexpr (std::is_same_v<T, double>) {
    (void)slot;
    return value;
  } else {
    return T(value, slot);
  }
}

/// Yaw and pitch of the roll-free rotation closest to q. Picks the Euler branch
/// with |roll| <= pi/2 so pitch beyond +-90 degrees survives the round trip.
inline Vec2 roll_free_yaw_pitch(const Rotation& q) {
  const Vec3 ypr = to_yaw_pitch_roll(q);
  if (std::abs(ypr[2]) > 0.5 * kPi) return Vec2(ypr[0] + kPi, kPi - ypr[1]);
  return Vec2(ypr[0], ypr[1]);
}

struct PathLayout {
  int frames = 0;
  bool roll_locked = true;
  bool translation = false;
  std::vector<int> rot_offset;
  std::vector<int> trans_offset;  // -1 when the frame has no translation unknowns
  int num_params = 0;

  int rot_dim() const { return roll_locked ? 2 : 3; }

  static PathLayout make(int frames, bool roll_locked, bool translation,
                         const std::vector<bool>& frozen_translation) {
    PathLayout l;
    l.frames = frames;
    l.roll_locked = roll_locked;
    l.translation = translation;
    l.rot_offset.resize(static_cast<std::size_t>(frames));
    l.trans_offset.assign(static_cast<std::size_t>(frames), -1);
    int k = 0;
    for (int i = 0; i < frames; ++i) {
      l.rot_offset[static_cast<std::size_t>(i)] = k;
      k += l.rot_dim();
      const bool frozen = !frozen_translation.empty() && frozen_translation[static_cast<std::size_t>(i)];
      if (translation && !frozen) {
        l.trans_offset[static_cast<std::size_t>(i)] = k;
        k += 3;
      }
    }
    l.num_params = k;
    return l;
  }

  /// Global parameter indices for a block over `frames_in_block`, six slots per frame.
  template <std::size_t K>
  std::array<int, 6 * K> vars(const std::array<int, K>& block_frames) const {
    std::array<int, 6 * K> v;
    v.fill(-1);
    for (std::size_t m = 0; m < K; ++m) {
      const auto f = static_cast<std::size_t>(block_frames[m]);
      for (int d = 0; d < rot_dim(); ++d) v[6 * m + static_cast<std::size_t>(d)] = rot_offset[f] + d;
      if (trans_offset[f] >= 0) {
        for (int d = 0; d < 3; ++d) v[6 * m + 3 + static_cast<std::size_t>(d)] = trans_offset[f] + d;
      }
    }
    return v;
  }
};

struct PathState {
  std::vector<Rotation> q;
  std::vector<Vec2> yaw_pitch;  // roll-locked parametrization
  std::vector<Vec3> t;

  static PathState from_transform(const PathTransform& w, bool roll_locked) {
    PathState s;
    s.q = w.rotations;
    s.t = w.translations;
    if (s.t.size() != s.q.size()) s.t.assign(s.q.size(), Vec3::Zero());
    if (roll_locked) {
      s.yaw_pitch.reserve(s.q.size());
      for (auto& q : s.q) {
        const Vec2 yp = roll_free_yaw_pitch(q);
        s.yaw_pitch.push_back(yp);
        q = from_yaw_pitch_roll(yp[0], yp[1], 0.0);
      }
    }
    return s;
  }
};

inline PathState retract(const PathLayout& l, const PathState& s, const Eigen::VectorXd& delta) {
  PathState out = s;
  for (int i = 0; i < l.frames; ++i) {
    const auto fi = static_cast<std::size_t>(i);
    const int r = l.rot_offset[fi];
    if (l.roll_locked) {
      out.yaw_pitch[fi] += Vec2(delta[r], delta[r + 1]);
      out.q[fi] = from_yaw_pitch_roll(out.yaw_pitch[fi][0], out.yaw_pitch[fi][1], 0.0);
    } else {
      out.q[fi] = (exp_rotation(Vec3(delta[r], delta[r + 1], delta[r + 2])) * s.q[fi]).normalized();
    }
    if (l.trans_offset[fi] >= 0) out.t[fi] += delta.segment<3>(l.trans_offset[fi]);
  }
  return out;
}

/// q^W of a frame as a function of its local rotation increment in slots [base, base+3).
template <class T>
Quat<T> frame_rotation(const PathLayout& l, const PathState& s, int frame, int base) {
  const auto f = static_cast<std::size_t>(frame);
  if (l.roll_locked) {
    using std::cos;
    using std::sin;
    const T yaw = make_var<T>(s.yaw_pitch[f][0], base);
    const T pitch = make_var<T>(s.yaw_pitch[f][1], base + 1);
    const Quat<T> qy{cos(yaw * 0.5), T(0.0), sin(yaw * 0.5), T(0.0)};
    const Quat<T> qx{cos(pitch * 0.5), sin(pitch * 0.5), T(0.0), T(0.0)};
    return qmul(qy, qx);
  }
  const Quat<T> inc{T(1.0), make_var<T>(0.0, base) * 0.5, make_var<T>(0.0, base + 1) * 0.5,
                    make_var<T>(0.0, base + 2) * 0.5};
  return qmul(qnormalize(inc), qconst<T>(s.q[f]));
}

template <class T>
V3<T> frame_translation(const PathLayout& l, const PathState& s, int frame, int base) {
  const auto f = static_cast<std::size_t>(frame);
  if (l.trans_offset[f] < 0) return vconst<T>(s.t[f]);
  return {make_var<T>(s.t[f].x(), base), make_var<T>(s.t[f].y(), base + 1),
          make_var<T>(s.t[f].z(), base + 2)};
}

/// Adds residual r either as one squared block, one norm block, or (for the
/// component-wise L1 norm) one norm block per entry.
template <class T, std::size_t M, std::size_t V>
void emit(Linearization& lin, const std::array<int, V>& vars, const std::array<T, M>& r,
          double weight, bool norm, bool per_component) {
  if (weight == 0.0) return;
  auto add = [&](const auto& arr) {
    if constexpr (std::is_same_v<T, double>) {
      lin.add_values(norm, arr, weight);
    } else {
      lin.add_jets(norm, std::span<const int>(vars.data(), vars.size()), arr, weight);
    }
  };
  if (norm && per_component) {
    for (std::size_t i = 0; i < M; ++i) {
      const T one[1] = {r[i]};
      add(one);
    }
  } else {
    T arr[M];
    for (std::size_t i = 0; i < M; ++i) arr[i] = r[i];
    add(arr);
  }
}

/// Positive and negative constraint residuals on a frame's q^W.
template <class T>
void add_constraint_block(Linearization& lin, const PathLayout& l, const PathState& s,
                          const DirectionalConstraint& c, const Vec3& target,
                          const PathOptions& o) {
  const double w = c.weight * o.direction_weight;
  if (w == 0.0) return;
  const auto vars = l.vars<1>({c.frame});
  const V3<T> moved = qrotate(frame_rotation<T>(l, s, c.frame, 0), vconst<T>(target));
  if (c.sign == ConstraintSign::kPositive) {
    const std::array<T, 3> r{moved[0], moved[1], moved[2] - 1.0};
    emit(lin, vars, r, w, false, false);
  } else {
    using std::exp;
    const T x = moved[0] * moved[0] + moved[1] * moved[1] + (moved[2] + 1.0) * (moved[2] + 1.0);
    // sqrt(rho(x)) = sqrt(alpha) exp(-beta / (2x)); exactly 0 behind the viewer.
    const T r0 = value_of(x) < 1e-12 ? T(0.0)
                                     : std::sqrt(o.negative_alpha) * exp(-o.negative_beta / (2.0 * x));
    emit(lin, vars, std::array<T, 1>{r0}, w, false, false);
  }
}

}  // namespace stab360::detail

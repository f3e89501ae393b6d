#include <cstdlib>
#include <optional>

#include "stab360/error.hpp"
#include "stab360/motion.hpp"
#include "stab360/parallel.hpp"
#include "stab360/rng.hpp"

namespace stab360 {

std::vector<Rotation> MotionTrack::global_rotations() const {
  std::vector<Rotation> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f.global_rotation);
  return out;
}

std::vector<Correspondence> correspondences_between(const TrackSet& tracks, int frame_a,
                                                    int frame_b) {
  std::vector<Correspondence> out;
  for (const auto& t : tracks.trajectories) {
    if (t.covers(frame_a) && t.covers(frame_b)) out.push_back({t.at(frame_a), t.at(frame_b)});
  }
  return out;
}

namespace {

MotionOptions with_seeds(const MotionOptions& base, std::uint64_t a, std::uint64_t b) {
  MotionOptions o = base;
  o.ransac.seed = derive_seed(base.ransac.seed, a, b);
  o.lm.seed = derive_seed(base.lm.seed, a, b);
  return o;
}

std::optional<RelativeMotion> try_estimate(const TrackSet& tracks, int ref, int frame,
                                           const MotionOptions& options) {
  const auto corr = correspondences_between(tracks, ref, frame);
  if (static_cast<int>(corr.size()) < options.min_correspondences) return std::nullopt;
  try {
    return estimate_relative_motion(corr, options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInsufficientData || e.code() == ErrorCode::kRobustFitFailure ||
        e.code() == ErrorCode::kDegenerateGeometry) {
      return std::nullopt;
    }
    throw;
  }
}

Vec3 blend_directions(const std::optional<Vec3>& a, double wa, const std::optional<Vec3>& b,
                      double wb) {
  Vec3 sum = Vec3::Zero();
  if (a) sum += wa * *a;
  if (b) sum += wb * *b;
  const double n = sum.norm();
  return n > 1e-12 ? Vec3(sum / n) : Vec3::Zero();
}

}  // namespace

std::vector<FrameMotion> estimate_inner_frames(const TrackSet& tracks, int kf_prev, int kf_next,
                                               const Rotation& global_prev,
                                               const Rotation& global_next,
                                               const MotionOptions& options) {
  if (kf_next <= kf_prev) throw Error(ErrorCode::kInvalidArgument, "keyframes out of order");
  std::vector<FrameMotion> out;
  const double span = static_cast<double>(kf_next - kf_prev);
  for (int f = kf_prev + 1; f < kf_next; ++f) {
    const auto from_prev = try_estimate(tracks, kf_prev, f, with_seeds(options, f, 1));
    const auto from_next = try_estimate(tracks, kf_next, f, with_seeds(options, f, 2));
    if (!from_prev && !from_next) {
      throw Error(ErrorCode::kInsufficientData,
                  "frame " + std::to_string(f) + " shares too few tracks with both keyframes");
    }
    FrameMotion fm;
    fm.frame = f;
    const double w_prev = (kf_next - f) / span;
    const double w_next = 1.0 - w_prev;

    std::optional<Vec3> t_prev, t_next;
    if (from_prev && !from_prev->degenerate_translation) t_prev = from_prev->translation;
    // Motion from the next keyframe to f runs against the direction of travel.
    if (from_next && !from_next->degenerate_translation) t_next = -from_next->translation;

    if (from_prev && from_next) {
      const Rotation gp = from_prev->rotation * global_prev;
      const Rotation gn = align_hemisphere(gp, from_next->rotation * global_next);
      fm.global_rotation = Rotation(w_prev * gp.coeffs() + w_next * gn.coeffs()).normalized();
      fm.translation = blend_directions(t_prev, w_prev, t_next, w_next);
      fm.mean_residual = w_prev * from_prev->mean_residual + w_next * from_next->mean_residual;
    } else if (from_prev) {
      fm.global_rotation = (from_prev->rotation * global_prev).normalized();
      fm.translation = blend_directions(t_prev, 1.0, std::nullopt, 0.0);
      fm.mean_residual = from_prev->mean_residual;
      fm.fallback = true;
    } else {
      fm.global_rotation = (from_next->rotation * global_next).normalized();
      fm.translation = blend_directions(std::nullopt, 0.0, t_next, 1.0);
      fm.mean_residual = from_next->mean_residual;
      fm.fallback = true;
    }
    fm.degenerate = fm.translation.isZero();
    out.push_back(fm);
  }
  return out;
}

MotionTrack estimate_motion(const TrackSet& tracks, const MotionPipelineOptions& options) {
  MotionTrack track;
  track.keyframes = select_keyframes(tracks, options.survival_ratio);
  const auto& kf = track.keyframes;
  const std::size_t pairs = kf.size() - 1;

  MotionOptions base = options.motion;
  base.ransac.seed = derive_seed(options.seed, 0x5eed, 1);
  base.lm.seed = derive_seed(options.seed, 0x5eed, 2);

  std::vector<RelativeMotion> relative(pairs);
  parallel_for(pairs, options.threads, [&](std::size_t i) {
    const auto corr = correspondences_between(tracks, kf[i], kf[i + 1]);
    try {
      relative[i] = estimate_relative_motion(corr, with_seeds(base, 1000003ULL + i, 0));
    } catch (const Error& e) {
      throw Error(e.code(), "keyframes " + std::to_string(kf[i]) + "->" +
                                std::to_string(kf[i + 1]) + ": " + e.what());
    }
  });

  std::vector<Rotation> rel_rot;
  rel_rot.reserve(pairs);
  for (const auto& r : relative) rel_rot.push_back(r.rotation);
  const std::vector<Rotation> global = chain_global_rotations(rel_rot);

  track.frames.resize(static_cast<std::size_t>(tracks.frame_count));
  for (std::size_t i = 0; i < kf.size(); ++i) {
    FrameMotion& fm = track.frames[static_cast<std::size_t>(kf[i])];
    fm.frame = kf[i];
    fm.keyframe = true;
    fm.global_rotation = global[i];
    if (pairs == 0) {
      fm.degenerate = true;
      continue;
    }
    // Travel direction in this keyframe's coordinates from the incoming and
    // outgoing keyframe chords, weighted so the chord bends cancel to first order.
    std::optional<Vec3> incoming, outgoing;
    double d_prev = 0.0, d_next = 0.0;
    if (i > 0 && !relative[i - 1].degenerate_translation) {
      incoming = relative[i - 1].translation;
      d_prev = kf[i] - kf[i - 1];
    }
    if (i < pairs && !relative[i].degenerate_translation) {
      outgoing = relative[i].rotation.inverse() * relative[i].translation;
      d_next = kf[i + 1] - kf[i];
    }
    if (incoming && outgoing) {
      fm.translation = blend_directions(incoming, d_next / (d_prev + d_next), outgoing,
                                        d_prev / (d_prev + d_next));
    } else {
      fm.translation = blend_directions(incoming, 1.0, outgoing, 1.0);
    }
    fm.mean_residual = i < pairs ? relative[i].mean_residual : relative[i - 1].mean_residual;
    fm.degenerate = fm.translation.isZero();
  }

  parallel_for(pairs, options.threads, [&](std::size_t i) {
    auto inner = estimate_inner_frames(tracks, kf[i], kf[i + 1], global[i], global[i + 1],
                                       with_seeds(base, 2000003ULL + i, 0));
    for (auto& fm : inner) track.frames[static_cast<std::size_t>(fm.frame)] = fm;
  });

  // The clip's end keyframes only see one chord, whose direction lags the
  // tangent by an angle proportional to its span. A second chord over half the
  // span gives the rate, and the direction is extrapolated to zero span.
  auto extrapolate_end = [&](std::size_t key_index, std::size_t other_index, std::uint64_t stream) {
    const int key = kf[key_index];
    const int other = kf[other_index];
    const int span = std::abs(other - key);
    FrameMotion& fm = track.frames[static_cast<std::size_t>(key)];
    if (span < 2 || fm.degenerate) return;
    const int mid = key + (other - key) / 2;
    const int half = std::abs(mid - key);
    const bool outgoing = other > key;
    const auto r = outgoing ? try_estimate(tracks, key, mid, with_seeds(base, stream, 0))
                            : try_estimate(tracks, mid, key, with_seeds(base, stream, 0));
    if (!r || r->degenerate_translation) return;
    const Vec3 chord = outgoing ? Vec3(r->rotation.inverse() * r->translation) : r->translation;
    const Vec3 full = fm.translation;
    const Vec3 axis = full.cross(chord);
    if (axis.norm() < 1e-12) return;
    const double angle = angle_between(full, chord) * half / static_cast<double>(span - half);
    fm.translation = rotate_rodrigues(axis.normalized(), angle, chord).normalized();
  };
  if (pairs > 0) {
    extrapolate_end(0, 1, 3000003ULL);
    extrapolate_end(kf.size() - 1, kf.size() - 2, 3000004ULL);
  }
  return track;
}

}  // namespace stab360

#include "stab360/tracks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "stab360/error.hpp"
#include "stab360/text_format.hpp"

namespace stab360 {

Bearing CameraModel::pixel_to_bearing(const Vec2& pixel) const {
  if (projection == Projection::kEquirectangular) {
    return er_to_bearing(geometry, pixel);
  }
  const double focal = 0.5 * geometry.width / std::tan(0.5 * deg_to_rad(hfov_deg));
  return Bearing(Vec3((pixel.x() - 0.5 * geometry.width) / focal,
                      (pixel.y() - 0.5 * geometry.height) / focal, 1.0));
}

void TrackSet::validate() const {
  if (frame_count < 0) throw Error(ErrorCode::kValidationError, "negative frame count");
  for (const auto& t : trajectories) {
    if (t.points.empty()) {
      throw Error(ErrorCode::kValidationError, "track " + std::to_string(t.id) + " is empty");
    }
    if (t.start_frame < 0 || t.end_frame() >= frame_count) {
      throw Error(ErrorCode::kValidationError,
                  "track " + std::to_string(t.id) + " exceeds the clip frame range");
    }
    for (const auto& p : t.points) {
      if (std::abs(p.vec().norm() - 1.0) > 1e-9) {
        throw Error(ErrorCode::kValidationError, "non-unit bearing in track " + std::to_string(t.id));
      }
    }
  }
}

TrackSet parse_tracks(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  TrackSet set;
  std::map<int, std::vector<std::pair<int, Vec3>>> records;

  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::split_tokens(line);
    if (tokens.empty() || tokens.front().starts_with('#')) continue;

    if (!have_header) {
      const auto header = detail::parse_header(tokens, "tracks", line_no);
      const std::string projection = header.get("projection", line_no);
      if (projection == "er") {
        set.camera.projection = Projection::kEquirectangular;
      } else if (projection == "wideangle") {
        set.camera.projection = Projection::kWideAngle;
      } else {
        throw Error(ErrorCode::kUnsupportedFormat, "unknown projection '" + projection + "'");
      }
      set.camera.geometry.width = header.get_int("width", line_no);
      set.camera.geometry.height = header.get_int("height", line_no);
      set.frame_count = header.get_int("frames", line_no);
      if (header.has("hfov_deg")) set.camera.hfov_deg = header.get_double("hfov_deg", line_no);
      if (set.camera.geometry.width <= 0 || set.camera.geometry.height <= 0 || set.frame_count < 0) {
        throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": bad header values");
      }
      have_header = true;
      continue;
    }

    if (tokens.size() != 4 && tokens.size() != 5) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected 4 or 5 fields");
    }
    const int id = detail::parse_int(tokens[0], line_no);
    const int frame = detail::parse_int(tokens[1], line_no);
    const double a = detail::parse_double(tokens[2], line_no);
    const double b = detail::parse_double(tokens[3], line_no);
    if (frame < 0 || frame >= set.frame_count) {
      throw Error(ErrorCode::kValidationError,
                  "line " + std::to_string(line_no) + ": frame out of range");
    }
    Vec3 dir;
    try {
      if (tokens.size() == 5) {
        dir = Bearing(Vec3(a, b, detail::parse_double(tokens[4], line_no))).vec();
      } else {
        dir = set.camera.pixel_to_bearing(Vec2(a, b)).vec();
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kValidationError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    records[id].emplace_back(frame, dir);
  }
  if (!have_header) throw Error(ErrorCode::kParseError, "missing 'tracks v1' header");

  for (auto& [id, obs] : records) {
    std::sort(obs.begin(), obs.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    FeatureTrajectory traj;
    traj.id = id;
    traj.start_frame = obs.front().first;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (obs[i].first != traj.start_frame + static_cast<int>(i)) {
        throw Error(ErrorCode::kValidationError,
                    "track " + std::to_string(id) + " has non-consecutive frames");
      }
      traj.points.emplace_back(obs[i].second);
    }
    set.trajectories.push_back(std::move(traj));
  }
  set.validate();
  return set;
}

TrackSet load_tracks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return parse_tracks(in);
}

void write_tracks(std::ostream& out, const TrackSet& tracks) {
  const auto& g = tracks.camera.geometry;
  out << "tracks v1 projection="
      << (tracks.camera.projection == Projection::kEquirectangular ? "er" : "wideangle")
      << " width=" << g.width << " height=" << g.height << " frames=" << tracks.frame_count;
  if (tracks.camera.projection == Projection::kWideAngle) {
    out << " hfov_deg=" << detail::format_double(tracks.camera.hfov_deg);
  }
  out << '\n';
  for (const auto& t : tracks.trajectories) {
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const Vec3& p = t.points[i];
      out << t.id << ' ' << t.start_frame + static_cast<int>(i) << ' '
          << detail::format_double(p.x()) << ' ' << detail::format_double(p.y()) << ' '
          << detail::format_double(p.z()) << '\n';
    }
  }
}

void save_tracks(const std::filesystem::path& path, const TrackSet& tracks) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_tracks(out, tracks);
}

std::vector<int> select_keyframes(const TrackSet& tracks, double survival_ratio) {
  if (tracks.frame_count <= 0 || tracks.trajectories.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "keyframe selection needs a non-empty track set");
  }
  const int n = tracks.frame_count;
  std::vector<int> keyframes{0};

  // Tracks alive continuously since keyframe k and still alive at frame f are
  // exactly those covering both k and f.
  auto count_spanning = [&](int k, int f) {
    int c = 0;
    for (const auto& t : tracks.trajectories) {
      if (t.start_frame <= k && t.end_frame() >= f) ++c;
    }
    return c;
  };

  int key = 0;
  int base = count_spanning(0, 0);
  for (int f = 1; f < n; ++f) {
    const int alive = count_spanning(key, f);
    if (static_cast<double>(alive) < survival_ratio * base) {
      keyframes.push_back(f);
      key = f;
      base = count_spanning(f, f);
    }
  }
  if (keyframes.back() != n - 1) keyframes.push_back(n - 1);
  return keyframes;
}

std::vector<std::pair<int, int>> find_close_features(const TrackSet& tracks, int frame,
                                                     double min_separation_deg) {
  const double limit = deg_to_rad(min_separation_deg);
  std::vector<const FeatureTrajectory*> live;
  for (const auto& t : tracks.trajectories) {
    if (t.covers(frame)) live.push_back(&t);
  }
  std::vector<std::pair<int, int>> close;
  for (std::size_t i = 0; i < live.size(); ++i) {
    for (std::size_t j = i + 1; j < live.size(); ++j) {
      if (angle_between(live[i]->at(frame), live[j]->at(frame)) < limit) {
        close.emplace_back(live[i]->id, live[j]->id);
      }
    }
  }
  return close;
}

TrajectoryCost trajectory_cost(std::span<const Vec3> w) {
  TrajectoryCost c;
  for (std::size_t j = 0; j + 1 < w.size(); ++j) c.first_order += (w[j] - w[j + 1]).norm();
  for (std::size_t j = 0; j + 2 < w.size(); ++j) {
    c.second_order += (w[j + 2] - 2.0 * w[j + 1] + w[j]).norm();
  }
  return c;
}

namespace {

std::vector<std::pair<double, double>> quantile_table(const std::vector<double>& sorted,
                                                      int quantiles) {
  std::vector<std::pair<double, double>> table;
  if (sorted.empty() || quantiles <= 0) return table;
  table.reserve(static_cast<std::size_t>(quantiles));
  const double n = static_cast<double>(sorted.size());
  for (int k = 1; k <= quantiles; ++k) {
    const double fraction = static_cast<double>(k) / quantiles;
    auto idx = static_cast<std::size_t>(std::ceil(fraction * n - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, sorted.size()) - 1;
    table.emplace_back(sorted[idx], fraction);
  }
  return table;
}

}  // namespace

double SmoothnessCdf::pooled_first() const {
  return std::accumulate(first_order_costs.begin(), first_order_costs.end(), 0.0);
}

double SmoothnessCdf::pooled_second() const {
  return std::accumulate(second_order_costs.begin(), second_order_costs.end(), 0.0);
}

SmoothnessCdf smoothness_cdf(std::span<const std::vector<Vec3>> trajectories, double alpha1,
                             double alpha2, int quantiles) {
  SmoothnessCdf cdf;
  for (const auto& t : trajectories) {
    const TrajectoryCost c = trajectory_cost(t);
    if (t.size() >= 2) cdf.first_order_costs.push_back(alpha1 * c.first_order);
    if (t.size() >= 3) cdf.second_order_costs.push_back(alpha2 * c.second_order);
  }
  std::sort(cdf.first_order_costs.begin(), cdf.first_order_costs.end());
  std::sort(cdf.second_order_costs.begin(), cdf.second_order_costs.end());
  cdf.first_order = quantile_table(cdf.first_order_costs, quantiles);
  cdf.second_order = quantile_table(cdf.second_order_costs, quantiles);
  return cdf;
}

std::vector<std::vector<Vec3>> trajectory_points(const TrackSet& tracks) {
  std::vector<std::vector<Vec3>> out;
  out.reserve(tracks.trajectories.size());
  for (const auto& t : tracks.trajectories) {
    std::vector<Vec3> pts;
    pts.reserve(t.points.size());
    for (const auto& p : t.points) pts.push_back(p.vec());
    out.push_back(std::move(pts));
  }
  return out;
}

}  // namespace stab360

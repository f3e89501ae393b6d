#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "stab360/error.hpp"
#include "stab360/rng.hpp"
#include "stab360/tracks.hpp"

using namespace stab360;

namespace {

TrackSet parse(const std::string& text) {
  std::istringstream in(text);
  return parse_tracks(in);
}

ErrorCode parse_error_code(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kInvalidArgument;
}

// `alive[f]` tracks from frame 0 survive through frame f; every track lasts at least frame 0.
TrackSet scripted_dropout(int frames, const std::vector<int>& lifetimes) {
  TrackSet t;
  t.frame_count = frames;
  int id = 0;
  for (int life : lifetimes) {
    FeatureTrajectory tr;
    tr.id = id++;
    tr.start_frame = 0;
    for (int f = 0; f < life; ++f) tr.points.emplace_back(Vec3(0.1 * id, 0.2, 1.0));
    t.trajectories.push_back(tr);
  }
  return t;
}

}  // namespace

TEST(ParseTracks, SingleTrackSpan) {
  const TrackSet t = parse(
      "tracks v1 projection=er width=1920 height=960 frames=10\n"
      "7 3 960 480\n7 4 961 480\n7 5 962 480\n7 6 963 480\n7 7 964 480\n");
  ASSERT_EQ(t.trajectories.size(), 1u);
  EXPECT_EQ(t.trajectories[0].start_frame, 3);
  EXPECT_EQ(t.trajectories[0].end_frame(), 7);
  EXPECT_EQ(t.frame_count, 10);
  EXPECT_NEAR((t.trajectories[0].points[0].vec() - front_vector()).norm(), 0.0, 1e-12);
}

TEST(ParseTracks, RawDirectionNormalized) {
  const TrackSet t = parse("tracks v1 projection=er width=1920 height=960 frames=2\n1 0 0.6 0.8 0.0\n1 1 0.6 0.8 0\n");
  EXPECT_NEAR(t.trajectories[0].points[0].vec().norm(), 1.0, 1e-15);
  EXPECT_NEAR(t.trajectories[0].points[0].x(), 0.6, 1e-15);
}

TEST(ParseTracks, CommentsAndBlankLinesIgnored) {
  const TrackSet t = parse("# header follows\ntracks v1 projection=er width=64 height=32 frames=2\n\n# obs\n1 0 1 1\n1 1 2 1\n");
  EXPECT_EQ(t.trajectories.size(), 1u);
}

TEST(ParseTracks, Errors) {
  EXPECT_EQ(parse_error_code("tracks v1 projection=er width=1920 height=960 frames=10\n1 3 0 0 1\n1 4 0 0 1\n1 6 0 0 1\n"),
            ErrorCode::kValidationError);
  EXPECT_EQ(parse_error_code("tracks v1 projection=cubemap width=1920 height=960 frames=10\n"),
            ErrorCode::kUnsupportedFormat);
  EXPECT_EQ(parse_error_code("tracks v1 projection=er width=1920 height=960 frames=10\n1 3 abc 0\n"),
            ErrorCode::kParseError);
  EXPECT_EQ(parse_error_code("tracks v1 projection=er width=1920 height=960 frames=4\n1 4 0 0 1\n"),
            ErrorCode::kValidationError);
  EXPECT_EQ(parse_error_code("tracks v2 projection=er width=1920 height=960 frames=4\n"), ErrorCode::kUnsupportedFormat);
}

TEST(ParseTracks, ParseErrorCarriesLineNumber) {
  try {
    parse("tracks v1 projection=er width=1920 height=960 frames=10\n1 0 0 0 1\n1 1 x 0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos) << e.what();
  }
}

TEST(ParseTracks, WideAngleUsesFov) {
  const TrackSet t = parse("tracks v1 projection=wideangle width=1000 height=500 frames=1 hfov_deg=90\n1 0 500 250\n2 0 1000 250\n");
  EXPECT_NEAR((t.trajectories[0].points[0].vec() - front_vector()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(rad_to_deg(angle_between(t.trajectories[1].points[0].vec(), front_vector())), 45.0, 1e-9);
}

TEST(ParseTracks, WriteReadRoundTrip) {
  const TrackSet t = parse("tracks v1 projection=er width=1920 height=960 frames=5\n1 1 0.1 0.2 0.9\n1 2 0.1 0.25 0.9\n2 0 100 100\n");
  std::stringstream ss;
  write_tracks(ss, t);
  const TrackSet u = parse_tracks(ss);
  ASSERT_EQ(u.trajectories.size(), t.trajectories.size());
  for (std::size_t i = 0; i < t.trajectories.size(); ++i) {
    for (std::size_t k = 0; k < t.trajectories[i].points.size(); ++k) {
      EXPECT_EQ(u.trajectories[i].points[k].vec(), t.trajectories[i].points[k].vec());
    }
  }
}

TEST(Keyframes, ScriptedDropoutAtSeventeen) {
  // 100 tracks at frame 0; 41 die after frame 16, so 59 remain at frame 17.
  std::vector<int> lifetimes(100, 40);
  for (int i = 0; i < 41; ++i) lifetimes[static_cast<std::size_t>(i)] = 17;
  const auto kf = select_keyframes(scripted_dropout(40, lifetimes), 0.6);
  EXPECT_NE(std::find(kf.begin(), kf.end(), 17), kf.end());
  EXPECT_EQ(kf.front(), 0);
  EXPECT_EQ(kf.back(), 39);
}

TEST(Keyframes, FullSpanTracksGiveEndpoints) {
  const auto kf = select_keyframes(scripted_dropout(25, std::vector<int>(10, 25)));
  EXPECT_EQ(kf, (std::vector<int>{0, 24}));
}

TEST(Keyframes, SingleFrameClip) {
  EXPECT_EQ(select_keyframes(scripted_dropout(1, std::vector<int>(3, 1))), (std::vector<int>{0}));
}

TEST(Keyframes, EmptyRejected) {
  TrackSet t;
  t.frame_count = 5;
  EXPECT_THROW(select_keyframes(t), Error);
}

TEST(Keyframes, MonotoneInSurvivalRatio) {
  Rng rng(9);
  TrackSet t;
  t.frame_count = 120;
  int id = 0;
  for (int i = 0; i < 400; ++i) {
    FeatureTrajectory tr;
    tr.id = id++;
    tr.start_frame = rng.uniform_int(100);
    const int len = 2 + rng.uniform_int(60);
    for (int k = 0; k < len && tr.start_frame + k < 120; ++k) tr.points.emplace_back(rng.unit_vector());
    t.trajectories.push_back(tr);
  }
  std::size_t prev = 0;
  for (double r : {0.2, 0.4, 0.6, 0.8, 0.95}) {
    const auto kf = select_keyframes(t, r);
    EXPECT_TRUE(std::is_sorted(kf.begin(), kf.end()));
    EXPECT_EQ(std::adjacent_find(kf.begin(), kf.end()), kf.end());
    EXPECT_GE(kf.size(), prev);
    EXPECT_EQ(kf, select_keyframes(t, r));
    prev = kf.size();
  }
}

TEST(TrajectoryCost, GreatCircleAdvance) {
  const double step = 2.0 * std::asin(0.005);  // chord 0.01
  std::vector<Vec3> pts;
  for (int i = 0; i < 11; ++i) pts.push_back(Vec3(std::sin(i * step), 0.0, std::cos(i * step)));
  const TrajectoryCost c = trajectory_cost(pts);
  EXPECT_NEAR(c.first_order, 0.1, 1e-6);
  EXPECT_LT(c.second_order, 1e-3);
}

TEST(SmoothnessCdf, StaticPointsAreZero) {
  std::vector<std::vector<Vec3>> trajs(5, std::vector<Vec3>(6, Vec3::UnitZ()));
  const SmoothnessCdf cdf = smoothness_cdf(trajs);
  for (double v : cdf.first_order_costs) EXPECT_EQ(v, 0.0);
  for (double v : cdf.second_order_costs) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(cdf.first_order.size(), 1000u);
}

TEST(SmoothnessCdf, ShortTrajectoriesSkipped) {
  std::vector<std::vector<Vec3>> trajs{{Vec3::UnitZ()}, {Vec3::UnitZ(), Vec3::UnitX()}};
  const SmoothnessCdf cdf = smoothness_cdf(trajs);
  EXPECT_EQ(cdf.first_order_costs.size(), 1u);
  EXPECT_EQ(cdf.second_order_costs.size(), 0u);
}

TEST(SmoothnessCdf, ReorderInvariantAndDominance) {
  Rng rng(4);
  auto jittered = [&](double s) {
    std::vector<std::vector<Vec3>> out;
    for (int i = 0; i < 200; ++i) {
      std::vector<Vec3> t;
      const Vec3 base = rng.unit_vector();
      for (int k = 0; k < 20; ++k) t.push_back((base + s * Vec3(rng.normal(), rng.normal(), rng.normal())).normalized());
      out.push_back(t);
    }
    return out;
  };
  auto calm = jittered(0.01);
  auto noisy = jittered(0.02);
  const SmoothnessCdf a = smoothness_cdf(calm);
  std::reverse(calm.begin(), calm.end());
  const SmoothnessCdf b = smoothness_cdf(calm);
  EXPECT_EQ(a.first_order_costs, b.first_order_costs);
  EXPECT_EQ(a.second_order, b.second_order);
  const SmoothnessCdf c = smoothness_cdf(noisy);
  for (std::size_t i = 0; i < a.second_order.size(); i += 50) {
    EXPECT_LT(a.second_order[i].first, c.second_order[i].first);
  }
}

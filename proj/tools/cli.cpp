#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "stab360/bench.hpp"
#include "stab360/constraints.hpp"
#include "stab360/error.hpp"
#include "stab360/formats.hpp"
#include "stab360/image.hpp"
#include "stab360/mesh.hpp"
#include "stab360/motion.hpp"
#include "stab360/parallel.hpp"
#include "stab360/path.hpp"
#include "stab360/synth.hpp"
#include "stab360/tracks.hpp"

namespace stab360::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormats = R"(File formats (whitespace separated, '#' starts a comment line):
  tracks v1 projection=<er|wideangle> width=<W> height=<H> frames=<N> [hfov_deg=<F>]
    <track_id> <frame> <x> <y>          pixel observation
    <track_id> <frame> <dx> <dy> <dz>   raw direction
  constraints v1 projection=<er|dir> [width=<W> height=<H>]
    <+|-> <frame> <a> <b> [<c>] [w=<weight>] [tag=<manual|guided|saliency|forward-motion|seam>]
  motion v1
    <frame> <qw> <qx> <qy> <qz> <tx> <ty> <tz> <mean_residual_rad>
  path v1
    <frame> <qw> <qx> <qy> <qz> <twx> <twy> <twz>
  mesh v1 cols=<C> rows=<R> [width=<W> height=<H>] [rotation=<qw,qx,qy,qz>] [axis_dir=<x,y,z>]
    <col> <row> <in_x> <in_y> <in_z> <out_x> <out_y> <out_z> <angle_rad>
  images: binary PGM (P5) / PPM (P6), 8 bit
Equirectangular convention: column x in [0,W) -> longitude [-pi,pi), row y in [0,H)
-> latitude [pi/2,-pi/2]; +x right, +y down, +z forward (image center).
Quaternions are Hamilton, stored w x y z.
Exit status: 0 ok, 2 missing file, 3 invalid input, 4 solver failure.
A --config file holds 'key = value' lines (key = long flag name); flags win.)";

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
      return kMissingFile;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParseError:
    case ErrorCode::kValidationError:
    case ErrorCode::kUnsupportedFormat:
      return kValidationFailure;
    case ErrorCode::kDegenerateGeometry:
    case ErrorCode::kInsufficientData:
    case ErrorCode::kNoConvergence:
    case ErrorCode::kRobustFitFailure:
    case ErrorCode::kGenerationFailure:
      return kSolverFailure;
  }
  return kSolverFailure;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

void diagnostic(std::ostream& err, std::string_view level, std::string_view code,
                const std::string& msg) {
  err << "level=" << level << " code=" << code << " msg=" << one_line(msg) << '\n';
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kIoError, "file not found: " + path);
}

/// `key = value` lines turned into flag arguments.
std::vector<std::string> config_arguments(const std::string& path) {
  require_file(path);
  std::ifstream in(path);
  std::vector<std::string> args;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::kParseError, path + ":" + std::to_string(line_no) + ": empty key");
    args.push_back("--" + key);
    if (value != "true") args.push_back(value);
  }
  return args;
}

struct Common {
  std::uint64_t seed = 1;
  int threads = 1;
};

struct EstimateArgs {
  std::string tracks, out;
  double survival = 0.6;
  double ransac_threshold_deg = 0.5;
  double ransac_confidence = 0.999;
  int ransac_iterations = 2000;
  int lm_iterations = 10;
  bool no_ransac = false;
};

struct SolveArgs {
  std::string tracks, motion, constraints = "none", out;
  std::string mode = "direct-joint";
  std::string model = "rotation";
  double alpha1 = 10.0, alpha2 = 100.0;
  int norm = 2;
  bool free_roll = false;
  int forward_stride = 0;
  double neg_alpha = kNegativeAlpha, neg_beta = kNegativeBeta;
  int max_iterations = 200;
  int keyframe_stride = 10;
  double survival = 0.6;
  double translation_regularizer = 1e-3;
  int width = 1920, height = 960;
};

struct WarpArgs {
  std::string tracks, motion, path, out_dir;
  int cols = 20, rows = 10;
  double lambda = 1.0;
  double survival = 0.6;
  int frame = -1;
};

struct RemapArgs {
  std::string mesh, image, out, interpolation = "bilinear", angle_raster;
};

struct BenchArgs {
  std::string sweep = "noise", levels, out;
  int trials = 1000;
  int points = 500;
  double outliers = 0.1, noise = 0.29, fov = 360.0;
  double tau = 2.0, kappa = 30.0, gamma = 8.0;
  double threshold_deg = 0.5;
};

struct SynthArgs {
  std::string out, truth;
  SequenceParams p;
};

MotionOptions motion_options(const EstimateArgs& a, std::uint64_t seed) {
  MotionOptions m;
  m.ransac.threshold_rad = deg_to_rad(a.ransac_threshold_deg);
  m.ransac.confidence = a.ransac_confidence;
  m.ransac.max_iterations = a.ransac_iterations;
  m.ransac.seed = seed;
  m.lm.max_iterations = a.lm_iterations;
  m.lm.seed = seed;
  m.use_ransac = !a.no_ransac;
  return m;
}

int do_estimate(const EstimateArgs& a, const Common& c, std::ostream& out) {
  require_file(a.tracks);
  const TrackSet tracks = load_tracks(a.tracks);
  MotionPipelineOptions o;
  o.motion = motion_options(a, c.seed);
  o.survival_ratio = a.survival;
  o.threads = c.threads;
  o.seed = c.seed;
  const MotionTrack m = estimate_motion(tracks, o);
  save_motion(a.out, m.frames);
  int fallback = 0, degenerate = 0;
  for (const auto& f : m.frames) {
    fallback += f.fallback;
    degenerate += f.degenerate;
  }
  out << "frames=" << m.frames.size() << " keyframes=" << m.keyframes.size()
      << " fallback=" << fallback << " degenerate_translation=" << degenerate << '\n';
  return kOk;
}

int do_solve(const SolveArgs& a, const Common& c, std::ostream& out, std::ostream& err) {
  require_file(a.motion);
  const auto motions = load_motion(a.motion);
  const int n = static_cast<int>(motions.size());
  std::optional<TrackSet> tracks;
  ErGeometry geometry{a.width, a.height};
  if (!a.tracks.empty()) {
    require_file(a.tracks);
    tracks = load_tracks(a.tracks);
    if (tracks->frame_count != n) {
      throw Error(ErrorCode::kValidationError, "tracks and motion disagree on the frame count");
    }
    geometry = tracks->camera.geometry;
  }
  ConstraintSet constraints;
  if (a.constraints != "none") {
    require_file(a.constraints);
    constraints = load_constraints(a.constraints, geometry, n);
  }
  if (a.forward_stride > 0) {
    const auto fwd = forward_motion_constraints(motions, a.forward_stride);
    constraints.insert(constraints.end(), fwd.begin(), fwd.end());
  }

  PathOptions o;
  o.norm = a.norm;
  o.alpha1 = a.alpha1;
  o.alpha2 = a.alpha2;
  o.roll_locked = !a.free_roll;
  o.negative_alpha = a.neg_alpha;
  o.negative_beta = a.neg_beta;
  o.max_iterations = a.max_iterations;
  o.keyframe_stride = a.keyframe_stride;
  o.translation_regularizer = a.translation_regularizer;
  if (a.mode == "stabilize") o.direction_weight = 0.0;

  std::vector<Rotation> input;
  for (const auto& m : motions) input.push_back(m.global_rotation);

  PathSolution sol;
  if (a.model == "translation") {
    if (!tracks) throw Error(ErrorCode::kInvalidArgument, "--model translation needs --tracks");
    if (a.mode == "direct-two-stage") {
      throw Error(ErrorCode::kInvalidArgument, "direct-two-stage is rotation-only");
    }
    const auto keyframes = select_keyframes(*tracks, a.survival);
    sol = solve_translation_aware_path(*tracks, motions, keyframes, constraints, o);
    int frozen = 0;
    for (bool f : sol.transform.translation_frozen) frozen += f;
    if (frozen > 0) {
      diagnostic(err, "warning", "insufficient-data",
                 std::to_string(frozen) + " frames have too few live tracks; their translation is fixed at 0");
    }
  } else if (a.mode == "direct-two-stage") {
    sol = solve_two_stage(input, constraints, o);
  } else {
    sol = solve_rotation_only_path(input, constraints, o);
  }
  (void)c;
  if (!sol.converged) {
    diagnostic(err, "warning", "no-convergence", "iteration limit reached; writing the best iterate");
  }
  save_path(a.out, sol.transform);
  out << "frames=" << n << " constraints=" << constraints.size()
      << " initial_energy=" << sol.initial_energy << " final_energy=" << sol.final_energy
      << " iterations=" << sol.iterations << '\n';
  return kOk;
}

int do_warp(const WarpArgs& a, const Common& c, std::ostream& out) {
  require_file(a.tracks);
  require_file(a.motion);
  require_file(a.path);
  const TrackSet tracks = load_tracks(a.tracks);
  const auto motions = load_motion(a.motion);
  const PathTransform path = load_path(a.path);
  const int n = tracks.frame_count;
  if (static_cast<int>(motions.size()) != n || path.size() != n) {
    throw Error(ErrorCode::kValidationError, "tracks, motion and path disagree on the frame count");
  }
  if (a.frame >= n) throw Error(ErrorCode::kInvalidArgument, "--frame outside the clip");
  const auto keyframes = select_keyframes(tracks, a.survival);
  const auto geometry = compute_point_geometry(tracks, motions, keyframes);
  fs::create_directories(a.out_dir);
  std::vector<int> frames;
  for (int f = 0; f < n; ++f) {
    if (a.frame < 0 || a.frame == f) frames.push_back(f);
  }
  parallel_for(frames.size(), c.threads, [&](std::size_t i) {
    const int f = frames[i];
    const auto samples = frame_warp_samples(tracks, geometry, path, f);
    WarpMesh mesh = build_warp_mesh(samples, path.rotations[static_cast<std::size_t>(f)],
                                    path_translation_dir(path, f), a.cols, a.rows, a.lambda);
    if (tracks.camera.projection == Projection::kEquirectangular) {
      mesh.width = tracks.camera.geometry.width;
      mesh.height = tracks.camera.geometry.height;
    }
    char name[32];
    std::snprintf(name, sizeof name, "mesh_%05d.txt", f);
    save_mesh(fs::path(a.out_dir) / name, mesh);
  });
  out << "meshes=" << frames.size() << " dir=" << a.out_dir << '\n';
  return kOk;
}

int do_remap(const RemapArgs& a, std::ostream& out) {
  require_file(a.mesh);
  require_file(a.image);
  const WarpMesh mesh = load_mesh(a.mesh);
  const Image img = load_pnm(a.image);
  const Interpolation interp =
      a.interpolation == "nearest" ? Interpolation::kNearest : Interpolation::kBilinear;
  std::vector<float> raster;
  const Image result = remap_er_image(img, mesh, interp, a.angle_raster.empty() ? nullptr : &raster);
  save_pnm(a.out, result);
  if (!a.angle_raster.empty()) save_pfm(a.angle_raster, result.width, result.height, raster);
  out << "remapped " << result.width << "x" << result.height << '\n';
  return kOk;
}

int do_bench(const BenchArgs& a, const Common& c, std::ostream& out) {
  BenchOptions o;
  o.sweep = a.sweep == "fov" ? SweepKind::kFov : SweepKind::kNoise;
  if (!a.levels.empty()) {
    o.levels.clear();
    std::stringstream ss(a.levels);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        o.levels.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError, "bad --levels entry '" + item + "'");
      }
    }
  } else if (o.sweep == SweepKind::kFov) {
    o.levels = {60.0, 120.0, 180.0, 360.0};
  }
  o.trials = a.trials;
  o.base.n_points = a.points;
  o.base.outlier_fraction = a.outliers;
  o.base.noise_deg = a.noise;
  o.base.fov_deg = a.fov;
  o.base.tau = a.tau;
  o.base.kappa_deg = a.kappa;
  o.base.gamma = a.gamma;
  o.base.validate();
  o.motion.ransac.threshold_rad = deg_to_rad(a.threshold_deg);
  o.seed = c.seed;
  o.threads = c.threads;
  const auto rows = run_benchmark(o);
  if (a.out.empty()) {
    write_benchmark_csv(out, rows);
  } else {
    std::ofstream f(a.out);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + a.out);
    write_benchmark_csv(f, rows);
  }
  return kOk;
}

int do_synth(SynthArgs a, const Common& c, std::ostream& out) {
  a.p.seed = c.seed;
  const Sequence seq = generate_sequence(a.p);
  save_tracks(a.out, seq.tracks);
  if (!a.truth.empty()) {
    std::vector<FrameMotion> truth;
    for (int f = 0; f < a.p.frames; ++f) {
      FrameMotion m;
      m.frame = f;
      m.global_rotation = seq.global_rotations[static_cast<std::size_t>(f)];
      m.translation = seq.headings[static_cast<std::size_t>(f)];
      truth.push_back(m);
    }
    save_motion(a.truth, truth);
  }
  out << "tracks=" << seq.tracks.trajectories.size() << " frames=" << a.p.frames << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spherical motion estimation, directed path optimization and mesh warping", "stab360"};
  app.footer(kFormats);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  std::string config;
  auto add_common = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--config", config, "key = value defaults file");
    sub->add_option("--threads", common.threads, "worker threads (1 = serial)")->check(CLI::PositiveNumber);
    if (stochastic) sub->add_option("--seed", common.seed, "master seed");
  };

  EstimateArgs est;
  auto* s_est = app.add_subcommand("estimate", "estimate per-frame motion from a track file");
  s_est->add_option("--tracks", est.tracks, "input track file")->required();
  s_est->add_option("--out", est.out, "output motion file")->required();
  s_est->add_option("--survival", est.survival, "keyframe survival ratio")->capture_default_str();
  s_est->add_option("--ransac-threshold-deg", est.ransac_threshold_deg)->capture_default_str();
  s_est->add_option("--ransac-confidence", est.ransac_confidence)->capture_default_str();
  s_est->add_option("--ransac-iterations", est.ransac_iterations)->capture_default_str();
  s_est->add_option("--lm-iterations", est.lm_iterations)->capture_default_str();
  s_est->add_flag("--no-ransac", est.no_ransac, "skip the RANSAC prefilter");
  add_common(s_est, true);

  SolveArgs sol;
  auto* s_sol = app.add_subcommand("solve", "optimize the virtual camera path");
  s_sol->add_option("--motion", sol.motion, "motion file")->required();
  s_sol->add_option("--out", sol.out, "output path file")->required();
  s_sol->add_option("--tracks", sol.tracks, "track file (required for --model translation)");
  s_sol->add_option("--constraints", sol.constraints, "constraint file or 'none'")->capture_default_str();
  s_sol->add_option("--mode", sol.mode)
      ->check(CLI::IsMember({"stabilize", "direct-joint", "direct-two-stage"}))
      ->capture_default_str();
  s_sol->add_option("--model", sol.model)->check(CLI::IsMember({"rotation", "translation"}))->capture_default_str();
  s_sol->add_option("--alpha1", sol.alpha1)->check(CLI::NonNegativeNumber)->capture_default_str();
  s_sol->add_option("--alpha2", sol.alpha2)->check(CLI::NonNegativeNumber)->capture_default_str();
  s_sol->add_option("--norm", sol.norm, "smoothness norm")->check(CLI::IsMember({1, 2}))->capture_default_str();
  s_sol->add_flag("--free-roll", sol.free_roll, "allow roll in the path correction");
  s_sol->add_option("--forward-stride", sol.forward_stride, "add forward-motion constraints every N frames (0 = off)")
      ->capture_default_str();
  s_sol->add_option("--neg-alpha", sol.neg_alpha)->capture_default_str();
  s_sol->add_option("--neg-beta", sol.neg_beta)->capture_default_str();
  s_sol->add_option("--max-iterations", sol.max_iterations)->capture_default_str();
  s_sol->add_option("--keyframe-stride", sol.keyframe_stride, "staged initialization stride")->capture_default_str();
  s_sol->add_option("--survival", sol.survival)->capture_default_str();
  s_sol->add_option("--translation-regularizer", sol.translation_regularizer)->capture_default_str();
  s_sol->add_option("--width", sol.width, "ER width for pixel constraints without --tracks")->capture_default_str();
  s_sol->add_option("--height", sol.height)->capture_default_str();
  add_common(s_sol, true);

  WarpArgs wa;
  auto* s_warp = app.add_subcommand("warp", "write per-frame warp meshes");
  s_warp->add_option("--tracks", wa.tracks)->required();
  s_warp->add_option("--motion", wa.motion)->required();
  s_warp->add_option("--path", wa.path)->required();
  s_warp->add_option("--out-dir", wa.out_dir)->required();
  s_warp->add_option("--cols", wa.cols)->check(CLI::Range(3, 1000))->capture_default_str();
  s_warp->add_option("--rows", wa.rows)->check(CLI::Range(2, 1000))->capture_default_str();
  s_warp->add_option("--lambda", wa.lambda, "angle field smoothness")->check(CLI::NonNegativeNumber)->capture_default_str();
  s_warp->add_option("--survival", wa.survival)->capture_default_str();
  s_warp->add_option("--frame", wa.frame, "only this frame");
  add_common(s_warp, false);

  RemapArgs ra;
  auto* s_remap = app.add_subcommand("remap", "apply a warp mesh to an equirectangular PPM/PGM");
  s_remap->add_option("--mesh", ra.mesh)->required();
  s_remap->add_option("--image", ra.image)->required();
  s_remap->add_option("--out", ra.out)->required();
  s_remap->add_option("--interpolation", ra.interpolation)
      ->check(CLI::IsMember({"nearest", "bilinear"}))
      ->capture_default_str();
  s_remap->add_option("--angle-raster", ra.angle_raster, "optional PFM of the per-pixel warp angle");
  add_common(s_remap, false);

  BenchArgs ba;
  auto* s_bench = app.add_subcommand("bench", "synthetic two-view benchmark (CSV)");
  s_bench->add_option("--sweep", ba.sweep)->check(CLI::IsMember({"noise", "fov"}))->capture_default_str();
  s_bench->add_option("--levels", ba.levels, "comma-separated sweep values");
  s_bench->add_option("--trials", ba.trials)->check(CLI::PositiveNumber)->capture_default_str();
  s_bench->add_option("--points", ba.points)->check(CLI::PositiveNumber)->capture_default_str();
  s_bench->add_option("--outliers", ba.outliers)->capture_default_str();
  s_bench->add_option("--noise", ba.noise, "noise (deg) when sweeping fov")->capture_default_str();
  s_bench->add_option("--fov", ba.fov, "fov (deg) when sweeping noise")->capture_default_str();
  s_bench->add_option("--tau", ba.tau)->capture_default_str();
  s_bench->add_option("--kappa", ba.kappa)->capture_default_str();
  s_bench->add_option("--gamma", ba.gamma)->capture_default_str();
  s_bench->add_option("--ransac-threshold-deg", ba.threshold_deg)->capture_default_str();
  s_bench->add_option("--out", ba.out, "CSV file (default stdout)");
  add_common(s_bench, true);

  SynthArgs sa;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic track file");
  s_synth->add_option("--out", sa.out)->required();
  s_synth->add_option("--truth", sa.truth, "ground-truth motion file");
  s_synth->add_option("--frames", sa.p.frames)->capture_default_str();
  s_synth->add_option("--points", sa.p.points)->capture_default_str();
  s_synth->add_option("--speed", sa.p.speed)->capture_default_str();
  s_synth->add_option("--yaw-rate-deg", sa.p.yaw_rate_deg)->capture_default_str();
  s_synth->add_option("--jitter-deg", sa.p.rotation_jitter_deg)->capture_default_str();
  s_synth->add_option("--translation-jitter", sa.p.translation_jitter)->capture_default_str();
  s_synth->add_option("--sway-deg", sa.p.sway_deg)->capture_default_str();
  s_synth->add_option("--dropout", sa.p.dropout)->capture_default_str();
  s_synth->add_option("--noise-deg", sa.p.noise_deg)->capture_default_str();
  add_common(s_synth, true);

  try {
    // Splice config-file values in front of the user's flags so flags win.
    std::vector<std::string> args = args_in;
    const auto cfg = std::find(args.begin(), args.end(), "--config");
    if (cfg != args.end() && cfg + 1 != args.end() && !args.empty()) {
      const auto extra = config_arguments(*(cfg + 1));
      args.insert(args.begin() + 1, extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      diagnostic(err, "error", "invalid-argument", e.what());
      return kValidationFailure;
    }

    if (s_est->parsed()) return do_estimate(est, common, out);
    if (s_sol->parsed()) return do_solve(sol, common, out, err);
    if (s_warp->parsed()) return do_warp(wa, common, out);
    if (s_remap->parsed()) return do_remap(ra, out);
    if (s_bench->parsed()) return do_bench(ba, common, out);
    if (s_synth->parsed()) return do_synth(sa, common, out);
  } catch (const Error& e) {
    diagnostic(err, "error", to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    diagnostic(err, "error", "io-error", e.what());
    return kMissingFile;
  } catch (const std::exception& e) {
    diagnostic(err, "error", "internal", e.what());
    return kSolverFailure;
  }
  return kValidationFailure;
}

}  // namespace stab360::cli

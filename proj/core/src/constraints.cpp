#include "stab360/constraints.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "stab360/error.hpp"
#include "stab360/text_format.hpp"

namespace stab360 {

namespace {

constexpr std::string_view kProvenanceNames[] = {"manual", "guided", "saliency",
                                                 "forward-motion", "seam"};

Provenance parse_provenance(const std::string& name, int line_no) {
  for (std::size_t i = 0; i < std::size(kProvenanceNames); ++i) {
    if (name == kProvenanceNames[i]) return static_cast<Provenance>(i);
  }
  throw Error(ErrorCode::kParseError,
              "line " + std::to_string(line_no) + ": unknown provenance '" + name + "'");
}

}  // namespace

std::string_view to_string(Provenance p) { return kProvenanceNames[static_cast<int>(p)]; }

ConstraintSet parse_constraints(std::istream& in, const ErGeometry& geometry, int frame_count) {
  using namespace detail;
  ConstraintSet out;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  ErGeometry g = geometry;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_tokens(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (!have_header) {
      const Header h = parse_header(tokens, "constraints", line_no);
      const std::string& projection = h.get("projection", line_no);
      if (projection != "er" && projection != "dir") {
        throw Error(ErrorCode::kUnsupportedFormat, "unknown projection '" + projection + "'");
      }
      if (h.has("width")) g.width = h.get_int("width", line_no);
      if (h.has("height")) g.height = h.get_int("height", line_no);
      have_header = true;
      continue;
    }
    DirectionalConstraint c;
    if (tokens[0] == "+") {
      c.sign = ConstraintSign::kPositive;
    } else if (tokens[0] == "-") {
      c.sign = ConstraintSign::kNegative;
    } else {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": unknown sign '" + tokens[0] + "'");
    }
    std::vector<double> values;
    for (std::size_t i = 2; i < tokens.size(); ++i) {
      const std::string& tok = tokens[i];
      if (tok.rfind("w=", 0) == 0) {
        c.weight = parse_double(tok.substr(2), line_no);
        if (c.weight < 0.0) {
          throw Error(ErrorCode::kValidationError,
                      "line " + std::to_string(line_no) + ": negative weight");
        }
      } else if (tok.rfind("tag=", 0) == 0) {
        c.provenance = parse_provenance(tok.substr(4), line_no);
      } else {
        values.push_back(parse_double(tok, line_no));
      }
    }
    if (tokens.size() < 2 || (values.size() != 2 && values.size() != 3)) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(line_no) + ": expected <+|-> <frame> <a> <b> [<c>]");
    }
    c.frame = parse_int(tokens[1], line_no);
    if (c.frame < 0 || (frame_count >= 0 && c.frame >= frame_count)) {
      throw Error(ErrorCode::kValidationError,
                  "line " + std::to_string(line_no) + ": frame " + std::to_string(c.frame) +
                      " out of range");
    }
    try {
      if (values.size() == 2) {
        c.target = er_to_bearing(g, Vec2(values[0], values[1]));
      } else {
        c.target = Bearing(values[0], values[1], values[2]);
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kValidationError,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(c);
  }
  return out;
}

ConstraintSet load_constraints(const std::filesystem::path& path, const ErGeometry& geometry,
                               int frame_count) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return parse_constraints(in, geometry, frame_count);
}

void write_constraints(std::ostream& out, const ConstraintSet& constraints) {
  using detail::format_double;
  out << "constraints v1 projection=dir\n";
  for (const auto& c : constraints) {
    out << (c.sign == ConstraintSign::kPositive ? '+' : '-') << ' ' << c.frame << ' '
        << format_double(c.target.x()) << ' ' << format_double(c.target.y()) << ' '
        << format_double(c.target.z()) << " w=" << format_double(c.weight)
        << " tag=" << to_string(c.provenance) << '\n';
  }
}

void save_constraints(const std::filesystem::path& path, const ConstraintSet& constraints) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_constraints(out, constraints);
}

ConstraintSet forward_motion_constraints(std::span<const FrameMotion> motions, int stride) {
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be positive");
  ConstraintSet out;
  for (std::size_t i = 0; i < motions.size(); i += static_cast<std::size_t>(stride)) {
    const FrameMotion& m = motions[i];
    if (m.degenerate || m.translation.norm() < 1e-12) continue;
    DirectionalConstraint c;
    c.frame = m.frame;
    c.target = Bearing(m.translation);
    c.provenance = Provenance::kForwardMotion;
    out.push_back(c);
  }
  return out;
}

double negative_loss(double x, double alpha, double beta) {
  if (x < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative_loss needs x >= 0");
  if (x == 0.0) return 0.0;
  return alpha * std::exp(-beta / x);
}

double directional_energy(std::span<const Rotation> path_rotations,
                          std::span<const DirectionalConstraint> constraints, double alpha,
                          double beta) {
  double e = 0.0;
  for (const auto& c : constraints) {
    if (c.frame < 0 || static_cast<std::size_t>(c.frame) >= path_rotations.size()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no path rotation for constrained frame " + std::to_string(c.frame));
    }
    const Vec3 moved = path_rotations[static_cast<std::size_t>(c.frame)] * c.target.vec();
    if (c.sign == ConstraintSign::kPositive) {
      e += c.weight * (moved - front_vector()).squaredNorm();
    } else {
      e += c.weight * negative_loss((moved - back_vector()).squaredNorm(), alpha, beta);
    }
  }
  return e;
}

}  // namespace stab360

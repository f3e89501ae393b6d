#include "stab360/formats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "stab360/error.hpp"
#include "stab360/text_format.hpp"

namespace stab360 {

using detail::format_double;
using detail::parse_double;
using detail::parse_int;
using detail::split_tokens;

namespace {

struct Table {
  detail::Header header;
  std::vector<std::pair<int, std::vector<std::string>>> rows;  // line number, tokens
};

Table read_table(std::istream& in, std::string_view magic, std::size_t columns) {
  Table t;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_tokens(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    if (!have_header) {
      t.header = detail::parse_header(tokens, magic, line_no);
      have_header = true;
      continue;
    }
    if (tokens.size() != columns) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(columns) + " fields");
    }
    t.rows.emplace_back(line_no, std::move(tokens));
  }
  if (!have_header) throw Error(ErrorCode::kParseError, std::string("missing '") + std::string(magic) + "' header");
  return t;
}

/// Orders rows by frame and checks that frames are exactly 0..N-1.
std::vector<const std::pair<int, std::vector<std::string>>*> by_frame(const Table& t) {
  std::map<int, const std::pair<int, std::vector<std::string>>*> frames;
  for (const auto& row : t.rows) {
    const int f = parse_int(row.second[0], row.first);
    if (!frames.emplace(f, &row).second) {
      throw Error(ErrorCode::kValidationError,
                  "line " + std::to_string(row.first) + ": duplicate frame " + std::to_string(f));
    }
  }
  std::vector<const std::pair<int, std::vector<std::string>>*> out;
  int expected = 0;
  for (const auto& [f, row] : frames) {
    if (f != expected) {
      throw Error(ErrorCode::kValidationError, "frames must cover 0..N-1; missing frame " +
                                                   std::to_string(expected));
    }
    out.push_back(row);
    ++expected;
  }
  return out;
}

Rotation parse_quaternion(const std::vector<std::string>& tok, std::size_t at, int line_no) {
  Rotation q(parse_double(tok[at], line_no), parse_double(tok[at + 1], line_no),
             parse_double(tok[at + 2], line_no), parse_double(tok[at + 3], line_no));
  const double n = q.norm();
  if (std::abs(n - 1.0) > 1e-6) {
    throw Error(ErrorCode::kValidationError,
                "line " + std::to_string(line_no) + ": quaternion is not unit length");
  }
  return q.normalized();
}

Vec3 parse_vec(const std::vector<std::string>& tok, std::size_t at, int line_no) {
  return {parse_double(tok[at], line_no), parse_double(tok[at + 1], line_no),
          parse_double(tok[at + 2], line_no)};
}

void put_quaternion(std::ostream& out, const Rotation& q) {
  out << format_double(q.w()) << ' ' << format_double(q.x()) << ' ' << format_double(q.y()) << ' '
      << format_double(q.z());
}

void put_vec(std::ostream& out, const Vec3& v) {
  out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z());
}

template <class T, class Fn>
T load_with(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return fn(in);
}

template <class Fn>
void save_with(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  fn(out);
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace

void write_motion(std::ostream& out, const std::vector<FrameMotion>& frames) {
  out << "motion v1\n";
  for (const auto& f : frames) {
    out << f.frame << ' ';
    put_quaternion(out, f.global_rotation);
    out << ' ';
    put_vec(out, f.degenerate ? Vec3::Zero() : f.translation);
    out << ' ' << format_double(f.mean_residual) << '\n';
  }
}

std::vector<FrameMotion> read_motion(std::istream& in) {
  const Table t = read_table(in, "motion", 9);
  std::vector<FrameMotion> out;
  for (const auto* row : by_frame(t)) {
    const auto& tok = row->second;
    FrameMotion m;
    m.frame = static_cast<int>(out.size());
    m.global_rotation = parse_quaternion(tok, 1, row->first);
    m.translation = parse_vec(tok, 5, row->first);
    m.mean_residual = parse_double(tok[8], row->first);
    const double n = m.translation.norm();
    if (n < 1e-12) {
      m.translation.setZero();
      m.degenerate = true;
    } else {
      m.translation /= n;
    }
    out.push_back(m);
  }
  return out;
}

void save_motion(const std::filesystem::path& path, const std::vector<FrameMotion>& frames) {
  save_with(path, [&](std::ostream& o) { write_motion(o, frames); });
}

std::vector<FrameMotion> load_motion(const std::filesystem::path& path) {
  return load_with<std::vector<FrameMotion>>(path, [](std::istream& i) { return read_motion(i); });
}

void write_path(std::ostream& out, const PathTransform& path) {
  out << "path v1\n";
  for (int f = 0; f < path.size(); ++f) {
    const auto i = static_cast<std::size_t>(f);
    out << f << ' ';
    put_quaternion(out, path.rotations[i]);
    out << ' ';
    put_vec(out, i < path.translations.size() ? path.translations[i] : Vec3::Zero());
    out << '\n';
  }
}

PathTransform read_path(std::istream& in) {
  const Table t = read_table(in, "path", 8);
  const auto rows = by_frame(t);
  PathTransform p = PathTransform::identity(static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    p.rotations[i] = parse_quaternion(rows[i]->second, 1, rows[i]->first);
    p.translations[i] = parse_vec(rows[i]->second, 5, rows[i]->first);
  }
  return p;
}

void save_path(const std::filesystem::path& path, const PathTransform& transform) {
  save_with(path, [&](std::ostream& o) { write_path(o, transform); });
}

PathTransform load_path(const std::filesystem::path& path) {
  return load_with<PathTransform>(path, [](std::istream& i) { return read_path(i); });
}

void write_mesh(std::ostream& out, const WarpMesh& mesh) {
  out << "mesh v1 cols=" << mesh.cols << " rows=" << mesh.rows;
  if (mesh.width > 0) out << " width=" << mesh.width << " height=" << mesh.height;
  if (mesh.has_motion) {
    const Rotation& q = mesh.rotation;
    const Vec3& t = mesh.translation_dir;
    out << " rotation=" << format_double(q.w()) << ',' << format_double(q.x()) << ','
        << format_double(q.y()) << ',' << format_double(q.z()) << " axis_dir="
        << format_double(t.x()) << ',' << format_double(t.y()) << ',' << format_double(t.z());
  }
  out << '\n';
  for (int r = 0; r < mesh.rows; ++r) {
    for (int c = 0; c < mesh.cols; ++c) {
      const auto i = static_cast<std::size_t>(mesh.index(c, r));
      out << c << ' ' << r << ' ';
      put_vec(out, mesh.input[i]);
      out << ' ';
      put_vec(out, mesh.output[i]);
      out << ' ' << format_double(mesh.angle[i]) << '\n';
    }
  }
}

WarpMesh read_mesh(std::istream& in) {
  const Table t = read_table(in, "mesh", 9);
  const int cols = t.header.get_int("cols", 1);
  const int rows = t.header.get_int("rows", 1);
  WarpMesh mesh = WarpMesh::grid(cols, rows);
  if (t.header.has("width")) {
    mesh.width = t.header.get_int("width", 1);
    mesh.height = t.header.get_int("height", 1);
  }
  mesh.has_motion = t.header.has("rotation") && t.header.has("axis_dir");
  if (mesh.has_motion) {
    const auto q = detail::parse_double_list(t.header.get("rotation", 1), 1);
    const auto a = detail::parse_double_list(t.header.get("axis_dir", 1), 1);
    if (q.size() != 4 || a.size() != 3) {
      throw Error(ErrorCode::kParseError, "mesh header: rotation needs 4 and axis_dir 3 values");
    }
    mesh.rotation = Rotation(q[0], q[1], q[2], q[3]).normalized();
    mesh.translation_dir = Vec3(a[0], a[1], a[2]);
  }
  std::vector<bool> seen(static_cast<std::size_t>(mesh.size()), false);
  for (const auto& [line_no, tok] : t.rows) {
    const int c = parse_int(tok[0], line_no);
    const int r = parse_int(tok[1], line_no);
    if (c < 0 || c >= cols || r < 0 || r >= rows) {
      throw Error(ErrorCode::kValidationError, "line " + std::to_string(line_no) + ": vertex out of range");
    }
    const auto i = static_cast<std::size_t>(mesh.index(c, r));
    if (seen[i]) {
      throw Error(ErrorCode::kValidationError, "line " + std::to_string(line_no) + ": duplicate vertex");
    }
    seen[i] = true;
    mesh.input[i] = Bearing(parse_vec(tok, 2, line_no)).vec();
    mesh.output[i] = Bearing(parse_vec(tok, 5, line_no)).vec();
    mesh.angle[i] = parse_double(tok[8], line_no);
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(ErrorCode::kValidationError, "mesh is missing vertices");
  }
  return mesh;
}

void save_mesh(const std::filesystem::path& path, const WarpMesh& mesh) {
  save_with(path, [&](std::ostream& o) { write_mesh(o, mesh); });
}

WarpMesh load_mesh(const std::filesystem::path& path) {
  return load_with<WarpMesh>(path, [](std::istream& i) { return read_mesh(i); });
}

}  // namespace stab360

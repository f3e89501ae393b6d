#pragma once

// Text formats for per-frame motion, virtual camera paths and warp meshes.
//
//   motion v1
//   <frame> <qw> <qx> <qy> <qz> <tx> <ty> <tz> <mean_residual_rad>
//
//   path v1
//   <frame> <qw> <qx> <qy> <qz> <twx> <twy> <twz>
//
//   mesh v1 cols=<C> rows=<R> [width=<W> height=<H>] [rotation=<qw,qx,qy,qz>] [axis_dir=<x,y,z>]
//   <col> <row> <in_x> <in_y> <in_z> <out_x> <out_y> <out_z> <angle_rad>
//
// Motion rows hold the global rotation (first frame -> frame) and the unit
// direction of travel in the frame's coordinates; 0 0 0 marks a frame whose
// translation could not be resolved. Frames must cover 0..N-1 exactly once.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "stab360/mesh.hpp"
#include "stab360/motion.hpp"
#include "stab360/path.hpp"

namespace stab360 {

void write_motion(std::ostream& out, const std::vector<FrameMotion>& frames);
std::vector<FrameMotion> read_motion(std::istream& in);
void save_motion(const std::filesystem::path& path, const std::vector<FrameMotion>& frames);
std::vector<FrameMotion> load_motion(const std::filesystem::path& path);

void write_path(std::ostream& out, const PathTransform& path);
PathTransform read_path(std::istream& in);
void save_path(const std::filesystem::path& path, const PathTransform& transform);
PathTransform load_path(const std::filesystem::path& path);

void write_mesh(std::ostream& out, const WarpMesh& mesh);
WarpMesh read_mesh(std::istream& in);
void save_mesh(const std::filesystem::path& path, const WarpMesh& mesh);
WarpMesh load_mesh(const std::filesystem::path& path);

}  // namespace stab360

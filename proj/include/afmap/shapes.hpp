#pragma once

#include "afmap/mesh.hpp"

namespace afmap::shapes {

/// Subdivided icosahedron projected to a sphere: 10*4^level + 2 vertices,
/// 20*4^level faces.
TriMesh icosphere(int level, double radius = 1.0);

/// Flat [0,width]x[0,height] rectangle split into nx*ny cells, two triangles each.
TriMesh grid(int nx, int ny, double width = 1.0, double height = 1.0);

}  // namespace afmap::shapes

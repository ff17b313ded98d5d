#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

namespace cyclofem {

// 2D quadrilateral mesh. Coordinates in mm. Element connectivity is
// counter-clockwise; every element must have a positive Jacobian at all four
// Gauss points (checked by validate). Boundary regions are named node sets
// (Dirichlet) and edge sets (Neumann), edges as ordered node pairs.
struct Mesh2D {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 4>> elements;
  std::map<std::string, std::vector<int>> node_sets;
  std::map<std::string, std::vector<std::array<int, 2>>> edge_sets;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }

  void validate() const;
};

// Square plate with a centered circular hole, meshed as a single O-grid
// block: n_theta radial rays (multiple of 4; four of them hit the square
// corners exactly) times n_rings element layers between the hole and the
// outer boundary. Node sets: "bottom", "top", "left", "right", "hole".
// Edge sets: "top", "bottom". Fully deterministic.
Mesh2D plate_mesh(double side = 30.0, double hole_radius = 6.0,
                  int n_theta = 60, int n_rings = 13);

// JSON round trip, schema:
// { "format": "cyclofem-mesh", "version": 1, "nodes": [[x,y],...],
//   "elements": [[a,b,c,d],...], "node_sets": {...}, "edge_sets": {...} }
std::string mesh_to_json(const Mesh2D& mesh);
Mesh2D mesh_from_json(const std::string& text);

void save_mesh(const Mesh2D& mesh, const std::string& path);
Mesh2D load_mesh(const std::string& path);

}  // namespace cyclofem

#include "cyclofem/mesh.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cyclofem {

namespace {

// Jacobian determinant of the bilinear map at reference point (xi, eta).
double jacobian_det(const Mesh2D& m, const std::array<int, 4>& e, double xi, double eta) {
  const double dN_dxi[4] = {-(1 - eta) / 4, (1 - eta) / 4, (1 + eta) / 4, -(1 + eta) / 4};
  const double dN_deta[4] = {-(1 - xi) / 4, -(1 + xi) / 4, (1 + xi) / 4, (1 - xi) / 4};
  double j11 = 0, j12 = 0, j21 = 0, j22 = 0;
  for (int a = 0; a < 4; ++a) {
    const auto& x = m.nodes[static_cast<std::size_t>(e[static_cast<std::size_t>(a)])];
    j11 += dN_dxi[a] * x[0];
    j12 += dN_dxi[a] * x[1];
    j21 += dN_deta[a] * x[0];
    j22 += dN_deta[a] * x[1];
  }
  return j11 * j22 - j12 * j21;
}

}  // namespace

void Mesh2D::validate() const {
  if (nodes.empty()) throw std::invalid_argument("mesh: no nodes");
  if (elements.empty()) throw std::invalid_argument("mesh: no elements");
  const int nn = node_count();
  const double g = 1.0 / std::sqrt(3.0);
  for (std::size_t k = 0; k < elements.size(); ++k) {
    for (int a = 0; a < 4; ++a) {
      const int n = elements[k][static_cast<std::size_t>(a)];
      if (n < 0 || n >= nn) {
        std::ostringstream msg;
        msg << "mesh: element " << k << " references node " << n;
        throw std::invalid_argument(msg.str());
      }
    }
    for (double xi : {-g, g})
      for (double eta : {-g, g})
        if (jacobian_det(*this, elements[k], xi, eta) <= 0.0) {
          std::ostringstream msg;
          msg << "mesh: element " << k << " has nonpositive Jacobian";
          throw std::invalid_argument(msg.str());
        }
  }
  for (const auto& [name, set] : node_sets)
    for (int n : set)
      if (n < 0 || n >= nn)
        throw std::invalid_argument("mesh: node set '" + name + "' references node " +
                                    std::to_string(n));
  for (const auto& [name, set] : edge_sets)
    for (const auto& e : set)
      if (e[0] < 0 || e[0] >= nn || e[1] < 0 || e[1] >= nn)
        throw std::invalid_argument("mesh: edge set '" + name + "' references a missing node");
}

Mesh2D plate_mesh(double side, double hole_radius, int n_theta, int n_rings) {
  if (!(side > 0) || !(hole_radius > 0) || hole_radius >= side / 2)
    throw std::invalid_argument("plate mesh: need 0 < hole radius < side/2");
  if (n_theta < 8 || n_theta % 4 != 0)
    throw std::invalid_argument("plate mesh: n_theta must be a multiple of 4, >= 8");
  if (n_rings < 2) throw std::invalid_argument("plate mesh: n_rings must be >= 2");

  Mesh2D m;
  const double cx = side / 2, cy = side / 2;
  const int n_layers = n_rings + 1;  // node rings, hole boundary to outer boundary
  m.nodes.reserve(static_cast<std::size_t>(n_theta * n_layers));

  // Rays start at pi/4 so that rays k = 0, n/4, n/2, 3n/4 pass through the
  // square corners; ring spacing is graded toward the hole.
  for (int k = 0; k < n_theta; ++k) {
    const double th = M_PI / 4 + 2.0 * M_PI * k / n_theta;
    const double c = std::cos(th), s = std::sin(th);
    const double r_out = (side / 2) / std::max(std::abs(c), std::abs(s));
    for (int i = 0; i < n_layers; ++i) {
      const double t = std::pow(static_cast<double>(i) / n_rings, 1.2);
      const double r = hole_radius + (r_out - hole_radius) * t;
      m.nodes.push_back({cx + r * c, cy + r * s});
    }
  }
  // Snap the outer ring onto exact boundary coordinates.
  for (int k = 0; k < n_theta; ++k) {
    auto& x = m.nodes[static_cast<std::size_t>(k * n_layers + n_rings)];
    if (std::abs(x[0]) < 1e-9) x[0] = 0.0;
    if (std::abs(x[1]) < 1e-9) x[1] = 0.0;
    if (std::abs(x[0] - side) < 1e-9) x[0] = side;
    if (std::abs(x[1] - side) < 1e-9) x[1] = side;
  }

  const auto node_id = [&](int k, int i) { return ((k % n_theta) + n_theta) % n_theta * n_layers + i; };

  // Counter-clockwise quads: radially outward first, then along the arc.
  for (int k = 0; k < n_theta; ++k)
    for (int i = 0; i < n_rings; ++i)
      m.elements.push_back({node_id(k, i), node_id(k, i + 1), node_id(k + 1, i + 1), node_id(k + 1, i)});

  // Boundary classification of outer-ring nodes by ray angle quadrant.
  const int q = n_theta / 4;
  auto outer = [&](int k) { return node_id(k, n_rings); };
  std::vector<int> top, left, bottom, right, hole;
  for (int k = 0; k <= q; ++k) top.push_back(outer(k));            // pi/4 .. 3pi/4
  for (int k = q; k <= 2 * q; ++k) left.push_back(outer(k));       // 3pi/4 .. 5pi/4
  for (int k = 2 * q; k <= 3 * q; ++k) bottom.push_back(outer(k)); // 5pi/4 .. 7pi/4
  for (int k = 3 * q; k <= 4 * q; ++k) right.push_back(outer(k % n_theta));
  for (int k = 0; k < n_theta; ++k) hole.push_back(node_id(k, 0));
  m.node_sets = {{"top", top}, {"left", left}, {"bottom", bottom}, {"right", right}, {"hole", hole}};

  std::vector<std::array<int, 2>> top_edges, bottom_edges;
  for (int k = 0; k < q; ++k) top_edges.push_back({outer(k), outer(k + 1)});
  for (int k = 2 * q; k < 3 * q; ++k) bottom_edges.push_back({outer(k), outer(k + 1)});
  m.edge_sets = {{"top", top_edges}, {"bottom", bottom_edges}};

  m.validate();
  return m;
}

std::string mesh_to_json(const Mesh2D& mesh) {
  nlohmann::json j;
  j["format"] = "cyclofem-mesh";
  j["version"] = 1;
  j["nodes"] = mesh.nodes;
  j["elements"] = mesh.elements;
  j["node_sets"] = mesh.node_sets;
  j["edge_sets"] = mesh.edge_sets;
  return j.dump(2);
}

Mesh2D mesh_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("mesh: invalid JSON: ") + e.what());
  }
  if (j.value("format", "") != "cyclofem-mesh")
    throw std::invalid_argument("mesh: not a cyclofem-mesh document");
  if (j.value("version", 0) != 1)
    throw std::invalid_argument("mesh: unsupported schema version");
  Mesh2D m;
  try {
    m.nodes = j.at("nodes").get<std::vector<std::array<double, 2>>>();
    m.elements = j.at("elements").get<std::vector<std::array<int, 4>>>();
    if (j.contains("node_sets"))
      m.node_sets = j["node_sets"].get<std::map<std::string, std::vector<int>>>();
    if (j.contains("edge_sets"))
      m.edge_sets = j["edge_sets"].get<std::map<std::string, std::vector<std::array<int, 2>>>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("mesh: malformed field: ") + e.what());
  }
  m.validate();
  return m;
}

void save_mesh(const Mesh2D& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("mesh: cannot open '" + path + "' for writing");
  f << mesh_to_json(mesh) << "\n";
}

Mesh2D load_mesh(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("mesh: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return mesh_from_json(ss.str());
}

}  // namespace cyclofem

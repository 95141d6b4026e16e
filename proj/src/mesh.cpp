#include "lsdot/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lsdot {

std::string_view to_string(Side side) {
  switch (side) {
    case Side::Bottom: return "bottom";
    case Side::Right: return "right";
    case Side::Top: return "top";
    case Side::Left: return "left";
  }
  return "unknown";
}

Mesh::Mesh(int nx, int ny, Rectangle rect) : nx_(nx), ny_(ny), rect_(rect) {
  if (nx < 2 || ny < 2) {
    throw std::invalid_argument("mesh needs at least 2 nodes per side, got " + std::to_string(nx) +
                                "x" + std::to_string(ny));
  }
  if (!(rect.width() > 0.0) || !(rect.height() > 0.0) || !std::isfinite(rect.area())) {
    throw std::invalid_argument("degenerate mesh rectangle");
  }

  nodes_.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    // Exact endpoints so boundary coordinates match the rectangle bit-for-bit.
    const double y = (j == ny - 1) ? rect.hi.y : rect.lo.y + j * hy();
    for (int i = 0; i < nx; ++i) {
      const double x = (i == nx - 1) ? rect.hi.x : rect.lo.x + i * hx();
      nodes_.push_back({x, y});
    }
  }

  triangles_.reserve(2 * static_cast<std::size_t>(nx - 1) * (ny - 1));
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const int n00 = node_index(i, j);
      const int n10 = node_index(i + 1, j);
      const int n01 = node_index(i, j + 1);
      const int n11 = node_index(i + 1, j + 1);
      triangles_.push_back({n00, n10, n11});
      triangles_.push_back({n00, n11, n01});
    }
  }

  lumped_ = Eigen::VectorXd::Zero(num_nodes());
  areas_.reserve(triangles_.size());
  grads_.reserve(triangles_.size());
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    const Point& p0 = nodes_[tri[0]];
    const Point& p1 = nodes_[tri[1]];
    const Point& p2 = nodes_[tri[2]];
    const double twice = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    const double area = 0.5 * twice;
    areas_.push_back(area);
    grads_.push_back({Point{(p1.y - p2.y) / twice, (p2.x - p1.x) / twice},
                      Point{(p2.y - p0.y) / twice, (p0.x - p2.x) / twice},
                      Point{(p0.y - p1.y) / twice, (p1.x - p0.x) / twice}});
    for (int v : tri) lumped_[v] += area / 3.0;
  }

  for (int i = 0; i + 1 < nx; ++i) boundary_nodes_.push_back(node_index(i, 0));
  for (int j = 0; j + 1 < ny; ++j) boundary_nodes_.push_back(node_index(nx - 1, j));
  for (int i = nx - 1; i > 0; --i) boundary_nodes_.push_back(node_index(i, ny - 1));
  for (int j = ny - 1; j > 0; --j) boundary_nodes_.push_back(node_index(0, j));

  const int nb = num_boundary_nodes();
  const int bottom_end = nx - 1;
  const int right_end = bottom_end + ny - 1;
  const int top_end = right_end + nx - 1;
  boundary_weights_ = Eigen::VectorXd::Zero(nb);
  arc_positions_ = Eigen::VectorXd::Zero(nb);
  double arc = 0.0;
  for (int p = 0; p < nb; ++p) {
    Side side = Side::Left;
    if (p < bottom_end) side = Side::Bottom;
    else if (p < right_end) side = Side::Right;
    else if (p < top_end) side = Side::Top;
    BoundaryEdge e{boundary_nodes_[p], boundary_nodes_[(p + 1) % nb], p, side};
    const double len = edge_length(e);
    boundary_weights_[p] += 0.5 * len;
    boundary_weights_[(p + 1) % nb] += 0.5 * len;
    arc_positions_[p] = arc;
    arc += len;
    boundary_edges_.push_back(e);
  }
}

double Mesh::signed_area(int t) const {
  const auto& tri = triangles_[t];
  const Point& p0 = nodes_[tri[0]];
  const Point& p1 = nodes_[tri[1]];
  const Point& p2 = nodes_[tri[2]];
  return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

double Mesh::edge_length(const BoundaryEdge& e) const {
  const Point& a = nodes_[e.first];
  const Point& b = nodes_[e.second];
  return std::hypot(b.x - a.x, b.y - a.y);
}

Mesh build_uniform_mesh(int nx, int ny, Rectangle rect) { return Mesh(nx, ny, rect); }

std::vector<BoundaryEdge> boundary_edges_of(const Mesh& mesh, Side side) {
  std::vector<BoundaryEdge> out;
  for (const auto& e : mesh.boundary_edges()) {
    if (e.side == side) out.push_back(e);
  }
  return out;
}

double boundary_l2_inner(const Mesh& mesh, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  const auto nb = mesh.num_boundary_nodes();
  if (f.size() != nb || g.size() != nb) {
    throw std::invalid_argument("boundary field size mismatch: expected " + std::to_string(nb) +
                                ", got " + std::to_string(f.size()) + " and " +
                                std::to_string(g.size()));
  }
  return (mesh.boundary_weights().array() * f.array() * g.array()).sum();
}

}  // namespace lsdot

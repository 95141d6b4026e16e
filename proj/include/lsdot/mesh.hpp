#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lsdot {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct Rectangle {
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }
  double perimeter() const { return 2.0 * (width() + height()); }
};

inline constexpr Rectangle kUnitSquare{};

enum class Side { Bottom, Right, Top, Left };

inline constexpr std::array<Side, 4> kAllSides{Side::Bottom, Side::Right, Side::Top, Side::Left};

std::string_view to_string(Side side);

/// Boundary edge oriented along the counterclockwise traversal.
/// `first`/`second` are node indices, `position` the index of `first`
/// in the boundary node ordering.
struct BoundaryEdge {
  int first = 0;
  int second = 0;
  int position = 0;
  Side side = Side::Bottom;
};

using Triangle = std::array<int, 3>;

/// Uniform triangulation of a rectangle with P1 nodal basis.
///
/// Nodes are numbered row-major (`j * nx + i`). Every grid cell is split by the
/// bottom-left to top-right diagonal into two counterclockwise triangles.
/// Boundary nodes are ordered counterclockwise starting at the bottom-left
/// corner; a boundary field is a vector indexed by that ordering.
///
/// Immutable after construction.
class Mesh {
 public:
  Mesh(int nx, int ny, Rectangle rect);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const Rectangle& domain() const { return rect_; }
  double hx() const { return rect_.width() / (nx_ - 1); }
  double hy() const { return rect_.height() / (ny_ - 1); }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_boundary_nodes() const { return static_cast<int>(boundary_nodes_.size()); }

  int node_index(int i, int j) const { return j * nx_ + i; }
  const std::vector<Point>& nodes() const { return nodes_; }
  const Point& node(int k) const { return nodes_[k]; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }

  double signed_area(int t) const;
  double area(int t) const { return areas_[t]; }
  /// Gradients of the three local basis functions on triangle t.
  const std::array<Point, 3>& basis_gradients(int t) const { return grads_[t]; }

  /// ∫_Ω ψ_k dx for every node (row sums of the mass matrix).
  const Eigen::VectorXd& lumped_weights() const { return lumped_; }
  /// Trapezoid weights per boundary position: ∫_Γ f dσ ≈ Σ w_p f_p.
  const Eigen::VectorXd& boundary_weights() const { return boundary_weights_; }
  /// Arc length of each boundary position measured from the bottom-left corner.
  const Eigen::VectorXd& arc_positions() const { return arc_positions_; }

  double edge_length(const BoundaryEdge& e) const;

 private:
  int nx_;
  int ny_;
  Rectangle rect_;
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<double> areas_;
  std::vector<std::array<Point, 3>> grads_;
  std::vector<int> boundary_nodes_;
  std::vector<BoundaryEdge> boundary_edges_;
  Eigen::VectorXd lumped_;
  Eigen::VectorXd boundary_weights_;
  Eigen::VectorXd arc_positions_;
};

Mesh build_uniform_mesh(int nx, int ny, Rectangle rect = kUnitSquare);

/// Edges on one side, ordered along the counterclockwise traversal.
std::vector<BoundaryEdge> boundary_edges_of(const Mesh& mesh, Side side);

/// Trapezoidal approximation of ∫_Γ f g dσ for boundary fields.
double boundary_l2_inner(const Mesh& mesh, const Eigen::VectorXd& f, const Eigen::VectorXd& g);

}  // namespace lsdot

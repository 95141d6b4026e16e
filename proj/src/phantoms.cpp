#include "lsdot/phantoms.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lsdot {

bool Shape::contains(const Point& p) const {
  if (kind == Kind::Disk) {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    return dx * dx + dy * dy <= radius * radius;
  }
  return p.x >= box.lo.x && p.x <= box.hi.x && p.y >= box.lo.y && p.y <= box.hi.y;
}

double Shape::area() const {
  return kind == Kind::Disk ? std::numbers::pi * radius * radius : box.area();
}

std::string Shape::describe() const {
  std::ostringstream os;
  if (kind == Kind::Disk) {
    os << "disk(center=(" << center.x << "," << center.y << "), radius=" << radius << ")";
  } else {
    os << "box([" << box.lo.x << "," << box.hi.x << "]x[" << box.lo.y << "," << box.hi.y << "])";
  }
  return os.str();
}

namespace {

Shape disk(double x, double y, double r) { return {Shape::Kind::Disk, {x, y}, r, {}}; }
Shape box(double x0, double x1, double y0, double y1) {
  return {Shape::Kind::Box, {}, 0.0, Rectangle{{x0, y0}, {x1, y1}}};
}

// Supports are given on the unit square; other rectangles are mapped affinely.
Point to_unit(const Mesh& mesh, const Point& p) {
  const auto& r = mesh.domain();
  return {(p.x - r.lo.x) / r.width(), (p.y - r.lo.y) / r.height()};
}

}  // namespace

const std::vector<std::string>& phantom_names() {
  static const std::vector<std::string> names{"single-pair", "complex-pair", "separated", "near",
                                              "overlapping"};
  return names;
}

std::vector<BoundaryField> make_excitations(const Mesh& mesh) {
  std::vector<BoundaryField> out;
  const auto& arc = mesh.arc_positions();
  const int nb = mesh.num_boundary_nodes();
  for (Side side : kAllSides) {
    const auto edges = boundary_edges_of(mesh, side);
    const int first = edges.front().position;
    double side_length = 0.0;
    for (const auto& e : edges) side_length += mesh.edge_length(e);
    BoundaryField g = BoundaryField::Zero(nb);
    for (std::size_t k = 0; k <= edges.size(); ++k) {
      const int p = (first + static_cast<int>(k)) % nb;
      const double along = (k == edges.size()) ? side_length : arc[p] - arc[first];
      const double t = along / side_length;
      const double tol = 1e-12;
      if (std::abs(t - 0.25) <= tol || std::abs(t - 0.75) <= tol) {
        g[p] = 0.5;
      } else if (t > 0.25 && t < 0.75) {
        g[p] = 1.0;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

Phantom make_phantom(const std::string& name, const Mesh& mesh) {
  Phantom ph;
  ph.name = name;
  ph.levels = ContrastLevels{10.0, 1.0, 10.0, 1.0};
  if (name == "single-pair") {
    ph.a_support = {disk(0.3, 0.7, 0.15)};
    ph.c_support = {disk(0.7, 0.3, 0.15)};
  } else if (name == "complex-pair") {
    ph.a_support = {disk(0.3, 0.7, 0.15)};
    ph.c_support = {box(0.55, 0.85, 0.15, 0.3), box(0.7, 0.85, 0.15, 0.55)};
  } else if (name == "separated") {
    ph.a_support = {disk(0.3, 0.3, 0.15)};
    ph.c_support = {disk(0.7, 0.7, 0.15)};
  } else if (name == "near") {
    ph.a_support = {disk(0.35, 0.5, 0.15)};
    ph.c_support = {disk(0.66, 0.5, 0.13)};
  } else if (name == "overlapping") {
    ph.a_support = {disk(0.42, 0.5, 0.15)};
    ph.c_support = {disk(0.6, 0.5, 0.15)};
  } else {
    throw std::invalid_argument("unknown phantom '" + name + "'");
  }
  return resample(ph, mesh);
}

Phantom resample(const Phantom& phantom, const Mesh& mesh) {
  Phantom out = phantom;
  const auto& lv = phantom.levels;
  auto in_support = [&](const std::vector<Shape>& support, const Point& p) {
    const Point q = to_unit(mesh, p);
    for (const auto& s : support) {
      if (s.contains(q)) return true;
    }
    return false;
  };
  out.a_true = interpolate(mesh, [&](const Point& p) {
    return in_support(phantom.a_support, p) ? lv.a1 : lv.a2;
  });
  out.c_true = interpolate(mesh, [&](const Point& p) {
    return in_support(phantom.c_support, p) ? lv.c1 : lv.c2;
  });
  return out;
}

ExperimentSet synthesize_data(const Phantom& phantom, const std::vector<BoundaryField>& excitations,
                              const Mesh& mesh, int refine, double delta, std::uint64_t seed,
                              const SolverSettings& settings) {
  if (refine < 1) throw std::invalid_argument("refine factor must be >= 1");
  if (!(delta >= 0.0)) throw std::invalid_argument("noise level delta must be >= 0");
  const int nb = mesh.num_boundary_nodes();
  for (const auto& g : excitations) {
    if (g.size() != nb) throw std::invalid_argument("excitation is not sized to the mesh boundary");
  }

  ExperimentSet out;
  out.excitations = excitations;
  out.delta = delta;

  const Mesh fine((mesh.nx() - 1) * refine + 1, (mesh.ny() - 1) * refine + 1, mesh.domain());
  const Phantom truth = refine == 1 ? phantom : resample(phantom, fine);
  const SpdSolver solver(assemble_system(fine, truth.a_true, truth.c_true), settings);

  for (std::size_t m = 0; m < excitations.size(); ++m) {
    // Coarse boundary position p sits at fine position p·refine; the P1 trace of
    // g is prolonged linearly along each coarse edge.
    BoundaryField g_fine(fine.num_boundary_nodes());
    for (int p = 0; p < nb; ++p) {
      const double g0 = excitations[m][p];
      const double g1 = excitations[m][(p + 1) % nb];
      for (int j = 0; j < refine; ++j) {
        const double t = static_cast<double>(j) / refine;
        g_fine[p * refine + j] = (1.0 - t) * g0 + t * g1;
      }
    }
    const BoundaryField h_fine = forward_solve(fine, solver, g_fine).h;
    BoundaryField h(nb);
    for (int p = 0; p < nb; ++p) h[p] = h_fine[p * refine];
    out.measurements.push_back(add_noise(mesh, h, delta, seed + m));
  }
  return out;
}

}  // namespace lsdot

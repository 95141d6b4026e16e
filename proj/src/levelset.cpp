#include "lsdot/levelset.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lsdot {

namespace {

void require_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("smoothing width eps must be positive, got " + std::to_string(eps));
  }
}

// Element gradient of a P1 field.
Point element_gradient(const Mesh& mesh, int t, const NodalField& f) {
  const auto& tri = mesh.triangles()[t];
  const auto& g = mesh.basis_gradients(t);
  Point out;
  for (int p = 0; p < 3; ++p) {
    out.x += f[tri[p]] * g[p].x;
    out.y += f[tri[p]] * g[p].y;
  }
  return out;
}

}  // namespace

void ContrastLevels::validate() const {
  for (double v : {a1, a2, c1, c2}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("contrast levels must be positive finite values");
    }
  }
  if (a1 == a2) throw std::invalid_argument("contrast levels need a1 != a2");
  if (c1 == c2) throw std::invalid_argument("contrast levels need c1 != c2");
}

void LevelSetPair::validate() const {
  levels.validate();
  require_eps(eps);
  if (phi_a.size() != phi_c.size()) throw std::invalid_argument("level set size mismatch");
  if (!phi_a.allFinite() || !phi_c.allFinite()) {
    throw std::invalid_argument("level set functions must be finite");
  }
}

double heaviside(double t) { return t >= 0.0 ? 1.0 : 0.0; }

double heaviside_eps(double t, double eps) {
  require_eps(eps);
  if (t > 0.0) return 1.0;
  if (t < -eps) return 0.0;
  return 1.0 + t / eps;
}

double heaviside_eps_prime(double t, double eps) {
  require_eps(eps);
  return (t > -eps && t < 0.0) ? 1.0 / eps : 0.0;
}

NodalField heaviside_eps(const NodalField& phi, double eps) {
  require_eps(eps);
  return phi.unaryExpr([eps](double t) { return heaviside_eps(t, eps); });
}

NodalField heaviside_eps_prime(const NodalField& phi, double eps) {
  require_eps(eps);
  return phi.unaryExpr([eps](double t) { return heaviside_eps_prime(t, eps); });
}

NodalField project_smooth(const NodalField& phi, double v1, double v2, double eps) {
  const NodalField h = heaviside_eps(phi, eps);
  return (v1 * h.array() + v2 * (1.0 - h.array())).matrix();
}

NodalField project_sharp(const NodalField& phi, double v1, double v2) {
  return phi.unaryExpr([v1, v2](double t) { return t >= 0.0 ? v1 : v2; });
}

CoefficientPair project_sharp(const LevelSetPair& ls) {
  return {project_sharp(ls.phi_a, ls.levels.a1, ls.levels.a2),
          project_sharp(ls.phi_c, ls.levels.c1, ls.levels.c2)};
}

CoefficientPair project_smooth(const LevelSetPair& ls) {
  return {project_smooth(ls.phi_a, ls.levels.a1, ls.levels.a2, ls.eps),
          project_smooth(ls.phi_c, ls.levels.c1, ls.levels.c2, ls.eps)};
}

NodalField curvature_term(const Mesh& mesh, const NodalField& phi, double eps, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("gradient-norm floor eta must be positive");
  const NodalField band = heaviside_eps_prime(phi, eps);
  NodalField out = NodalField::Zero(mesh.num_nodes());
  if (band.isZero(0.0)) return out;

  const NodalField h = heaviside_eps(phi, eps);
  NodalField weak_div = NodalField::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Point grad = element_gradient(mesh, t, h);
    const double norm = std::sqrt(grad.x * grad.x + grad.y * grad.y + eta * eta);
    const Point n{grad.x / norm, grad.y / norm};
    const auto& tri = mesh.triangles()[t];
    const auto& g = mesh.basis_gradients(t);
    for (int p = 0; p < 3; ++p) {
      weak_div[tri[p]] -= mesh.area(t) * (g[p].x * n.x + g[p].y * n.y);
    }
  }
  out = band.cwiseProduct(weak_div.cwiseQuotient(mesh.lumped_weights()));
  return out;
}

double perimeter_estimate(const Mesh& mesh, const NodalField& phi, double eps) {
  const NodalField h = heaviside_eps(phi, eps);
  double total = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const Point grad = element_gradient(mesh, t, h);
    total += mesh.area(t) * std::hypot(grad.x, grad.y);
  }
  return total;
}

NodalField init_paraboloid(const Mesh& mesh, Point center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("paraboloid radius must be positive");
  }
  return interpolate(mesh, [&](const Point& p) {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    return radius * radius - (dx * dx + dy * dy);
  });
}

}  // namespace lsdot

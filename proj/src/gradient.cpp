#include "lsdot/gradient.hpp"

#include <cmath>
#include <stdexcept>

namespace lsdot {

NodalField adjoint_solve(const Mesh& mesh, const NodalField& a, const NodalField& c,
                         const BoundaryField& r_m, const SolverSettings& settings) {
  return SpdSolver(assemble_system(mesh, a, c), settings).solve(assemble_neumann_load(mesh, r_m));
}

NodalField adjoint_solve(const Mesh& mesh, const SpdSolver& solver, const BoundaryField& r_m) {
  return solver.solve(assemble_neumann_load(mesh, r_m));
}

ShapeDerivative shape_derivative_fields(const Mesh& mesh, const NodalField& u,
                                        const NodalField& w) {
  if (u.size() != mesh.num_nodes() || w.size() != mesh.num_nodes()) {
    throw std::invalid_argument("shape derivative: field size mismatch");
  }
  NodalField da = NodalField::Zero(mesh.num_nodes());
  NodalField dc = NodalField::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& g = mesh.basis_gradients(t);
    const double area = mesh.area(t);
    double gux = 0.0, guy = 0.0, gwx = 0.0, gwy = 0.0;
    for (int p = 0; p < 3; ++p) {
      gux += u[tri[p]] * g[p].x;
      guy += u[tri[p]] * g[p].y;
      gwx += w[tri[p]] * g[p].x;
      gwy += w[tri[p]] * g[p].y;
    }
    const double grad_product = gux * gwx + guy * gwy;
    // u·w at the edge midpoints, where the endpoint basis functions equal 1/2.
    double uw_mid[3];
    for (int p = 0; p < 3; ++p) {
      const int q = (p + 1) % 3;
      uw_mid[p] = 0.25 * (u[tri[p]] + u[tri[q]]) * (w[tri[p]] + w[tri[q]]);
    }
    for (int p = 0; p < 3; ++p) {
      da[tri[p]] -= area / 3.0 * grad_product;
      // midpoint p joins vertices p, p+1; midpoint p+2 joins vertices p+2, p
      dc[tri[p]] -= area / 6.0 * (uw_mid[p] + uw_mid[(p + 2) % 3]);
    }
  }
  const auto& lumped = mesh.lumped_weights();
  return {da.cwiseQuotient(lumped), dc.cwiseQuotient(lumped)};
}

GradientTerms assemble_L(const Mesh& mesh, const LevelSetPair& ls, const NodalField& sum_da,
                         const NodalField& sum_dc, double alpha, double beta_a, double beta_c,
                         double eta) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(beta_a >= 0.0) || !(beta_c >= 0.0)) throw std::invalid_argument("betas must be >= 0");
  const auto& lv = ls.levels;
  GradientTerms out;
  out.data_part_a = (lv.a1 - lv.a2) * heaviside_eps_prime(ls.phi_a, ls.eps).cwiseProduct(sum_da);
  out.data_part_c = (lv.c1 - lv.c2) * heaviside_eps_prime(ls.phi_c, ls.eps).cwiseProduct(sum_dc);
  out.L_a = out.data_part_a;
  out.L_c = out.data_part_c;
  if (beta_a > 0.0) out.L_a -= alpha * beta_a * curvature_term(mesh, ls.phi_a, ls.eps, eta);
  if (beta_c > 0.0) out.L_c -= alpha * beta_c * curvature_term(mesh, ls.phi_c, ls.eps, eta);
  return out;
}

namespace {

SparseSpdSystem unit_system(const Mesh& mesh) {
  const NodalField ones = NodalField::Ones(mesh.num_nodes());
  return assemble_system(mesh, ones, ones);
}

}  // namespace

UpdateSolver::UpdateSolver(const Mesh& mesh, const SolverSettings& settings)
    : mesh_(&mesh), solver_(unit_system(mesh), settings) {}

NodalField UpdateSolver::solve(const NodalField& L) const {
  if (!L.allFinite()) throw std::invalid_argument("update right-hand side is not finite");
  return -solver_.solve(assemble_lumped_load(*mesh_, L));
}

NodalField update_solve(const Mesh& mesh, const NodalField& L, const SolverSettings& settings) {
  return UpdateSolver(mesh, settings).solve(L);
}

NodalField apply_update(const NodalField& phi, const NodalField& dphi, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (phi.size() != dphi.size()) throw std::invalid_argument("update size mismatch");
  return phi + dphi / alpha;
}

}  // namespace lsdot

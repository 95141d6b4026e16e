#pragma once

#include "lsdot/fem.hpp"
#include "lsdot/forward_model.hpp"
#include "lsdot/levelset.hpp"

namespace lsdot {

/// Right-hand sides of the level-set optimality system.
///
/// L = data_part − α·β·curvature_term. The data parts are nodal fields whose
/// lumped-mass inner product with a direction v equals one half of the
/// directional derivative of the misfit Σ‖r_m‖² through P_ε.
struct GradientTerms {
  NodalField L_a;
  NodalField L_c;
  NodalField data_part_a;
  NodalField data_part_c;
};

/// Solves the state equation with Neumann flux r_m.
NodalField adjoint_solve(const Mesh& mesh, const NodalField& a, const NodalField& c,
                         const BoundaryField& r_m, const SolverSettings& settings);
NodalField adjoint_solve(const Mesh& mesh, const SpdSolver& solver, const BoundaryField& r_m);

/// Nodal fields of the adjoint derivatives (∂F_m/∂a)* r_m and (∂F_m/∂c)* r_m.
struct ShapeDerivative {
  NodalField da;
  NodalField dc;
};

/// da = −(area-weighted nodal average of the element-constant ∇u·∇w),
/// dc = −(lumped projection of u·w under the mass quadrature).
///
/// Both are the exact sensitivities of the assembled operator: for any nodal
/// perturbation δa, w·K(δa)·u = −Σ_k lumped_k δa_k da_k, and likewise for c.
ShapeDerivative shape_derivative_fields(const Mesh& mesh, const NodalField& u, const NodalField& w);

GradientTerms assemble_L(const Mesh& mesh, const LevelSetPair& ls, const NodalField& sum_da,
                         const NodalField& sum_dc, double alpha, double beta_a, double beta_c,
                         double eta);

/// Solver for (Δ − I) δφ = L with homogeneous Neumann data, i.e.
/// (K(1) + M(1)) δφ = −(lumped load of L). A constant L = κ gives δφ = −κ.
class UpdateSolver {
 public:
  UpdateSolver(const Mesh& mesh, const SolverSettings& settings);
  NodalField solve(const NodalField& L) const;

 private:
  const Mesh* mesh_;
  SpdSolver solver_;
};

NodalField update_solve(const Mesh& mesh, const NodalField& L, const SolverSettings& settings);

/// φ + δφ/α.
NodalField apply_update(const NodalField& phi, const NodalField& dphi, double alpha);

}  // namespace lsdot

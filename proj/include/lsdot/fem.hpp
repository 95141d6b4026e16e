#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "lsdot/mesh.hpp"

namespace lsdot {

/// One value per mesh node (P1 coefficients).
using NodalField = Eigen::VectorXd;
/// One value per boundary node, in counterclockwise boundary order.
using BoundaryField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Assembled K(a) + M(c). Symmetric; positive definite for positive a and c.
struct SparseSpdSystem {
  SparseMatrix matrix;
};

enum class SolverMethod { ConjugateGradient, DirectFactorization };

struct SolverSettings {
  SolverMethod method = SolverMethod::ConjugateGradient;
  double rel_tol = 1e-10;
  /// 0 selects 10 × (number of unknowns).
  int max_iter = 0;

  void validate() const;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double achieved_residual, int iterations)
      : std::runtime_error(what), achieved_residual_(achieved_residual), iterations_(iterations) {}

  double achieved_residual() const { return achieved_residual_; }
  int iterations() const { return iterations_; }

 private:
  double achieved_residual_;
  int iterations_;
};

/// Stiffness ∫ a ∇ψ_i·∇ψ_j with P1 a (exact with the edge-midpoint rule).
SparseMatrix assemble_stiffness(const Mesh& mesh, const NodalField& a);
/// Mass ∫ c ψ_i ψ_j with P1 c, three-point edge-midpoint quadrature.
SparseMatrix assemble_mass(const Mesh& mesh, const NodalField& c);

/// K(a) + M(c). Throws std::invalid_argument for non-finite or non-positive coefficients.
SparseSpdSystem assemble_system(const Mesh& mesh, const NodalField& a, const NodalField& c);

/// Entry i = ∫_Γ g ψ_i dσ (edge trapezoid rule); zero at interior nodes.
NodalField assemble_neumann_load(const Mesh& mesh, const BoundaryField& g);
/// Entry i = ∫_Ω f ψ_i dx with P1 f.
NodalField assemble_source_load(const Mesh& mesh, const NodalField& f);
/// Entry i = f_i ∫_Ω ψ_i dx (vertex quadrature).
NodalField assemble_lumped_load(const Mesh& mesh, const NodalField& f);

/// Solver bound to one system. Holds the preconditioner or factorization so
/// that repeated right-hand sides reuse it.
class SpdSolver {
 public:
  SpdSolver(const SparseSpdSystem& system, SolverSettings settings);
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  NodalField solve(const NodalField& rhs) const;
  const SparseMatrix& matrix() const;
  const SolverSettings& settings() const { return settings_; }

 private:
  struct Impl;
  SolverSettings settings_;
  std::unique_ptr<Impl> impl_;
};

NodalField solve_spd(const SparseSpdSystem& system, const NodalField& rhs,
                     const SolverSettings& settings);

/// Restriction of nodal values to boundary nodes in boundary order.
BoundaryField trace(const Mesh& mesh, const NodalField& u);

/// Field sampled at the mesh nodes.
template <typename F>
NodalField interpolate(const Mesh& mesh, F&& f) {
  NodalField out(mesh.num_nodes());
  for (int k = 0; k < mesh.num_nodes(); ++k) out[k] = f(mesh.node(k));
  return out;
}

// Discrete norms. L² and H¹ use the consistent unit-coefficient matrices,
// L¹ and Lˢ use lumped (vertex) weights.
double l2_norm(const Mesh& mesh, const NodalField& f);
double h1_norm(const Mesh& mesh, const NodalField& f);
double h1_seminorm(const Mesh& mesh, const NodalField& f);
double l1_norm(const Mesh& mesh, const NodalField& f);
double ls_norm(const Mesh& mesh, const NodalField& f, double s);

}  // namespace lsdot

#include "lsdot/fem.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

namespace lsdot {

namespace {

using Triplet = Eigen::Triplet<double>;

void check_size(const Mesh& mesh, const NodalField& f, const char* name) {
  if (f.size() != mesh.num_nodes()) {
    throw std::invalid_argument(std::string(name) + ": expected " +
                                std::to_string(mesh.num_nodes()) + " nodal values, got " +
                                std::to_string(f.size()));
  }
}

void check_positive(const NodalField& f, const char* name) {
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    if (!std::isfinite(f[k]) || !(f[k] > 0.0)) {
      throw std::invalid_argument(std::string("coefficient ") + name + " at node " +
                                  std::to_string(k) + " is not a positive finite value (" +
                                  std::to_string(f[k]) + ")");
    }
  }
}

// Appends K(a) and M(c) element contributions; either coefficient may be absent.
SparseMatrix assemble(const Mesh& mesh, const NodalField* a, const NodalField* c) {
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9 * ((a && c) ? 2 : 1));
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double area = mesh.area(t);
    if (a) {
      const auto& g = mesh.basis_gradients(t);
      const double a_mean = ((*a)[tri[0]] + (*a)[tri[1]] + (*a)[tri[2]]) / 3.0;
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) {
          const double v = a_mean * area * (g[p].x * g[q].x + g[p].y * g[q].y);
          triplets.emplace_back(tri[p], tri[q], v);
        }
      }
    }
    if (c) {
      // c at the edge midpoints; the basis functions there are 1/2 on the edge's
      // endpoints and 0 on the opposite vertex.
      double cm[3][3];
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) cm[p][q] = 0.5 * ((*c)[tri[p]] + (*c)[tri[q]]);
      }
      const double w = area / 12.0;
      for (int p = 0; p < 3; ++p) {
        const int q = (p + 1) % 3;
        const int r = (p + 2) % 3;
        triplets.emplace_back(tri[p], tri[p], w * (cm[p][q] + cm[p][r]));
        triplets.emplace_back(tri[p], tri[q], w * cm[p][q]);
        triplets.emplace_back(tri[q], tri[p], w * cm[p][q]);
      }
    }
  }
  SparseMatrix m(mesh.num_nodes(), mesh.num_nodes());
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

void SolverSettings::validate() const {
  if (!(rel_tol > 0.0) || !std::isfinite(rel_tol)) {
    throw std::invalid_argument("solver rel_tol must be positive, got " + std::to_string(rel_tol));
  }
  if (max_iter < 0) {
    throw std::invalid_argument("solver max_iter must be >= 1 (or 0 for the default), got " +
                                std::to_string(max_iter));
  }
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const NodalField& a) {
  check_size(mesh, a, "a");
  return assemble(mesh, &a, nullptr);
}

SparseMatrix assemble_mass(const Mesh& mesh, const NodalField& c) {
  check_size(mesh, c, "c");
  return assemble(mesh, nullptr, &c);
}

SparseSpdSystem assemble_system(const Mesh& mesh, const NodalField& a, const NodalField& c) {
  check_size(mesh, a, "a");
  check_size(mesh, c, "c");
  check_positive(a, "a");
  check_positive(c, "c");
  return {assemble(mesh, &a, &c)};
}

NodalField assemble_neumann_load(const Mesh& mesh, const BoundaryField& g) {
  if (g.size() != mesh.num_boundary_nodes()) {
    throw std::invalid_argument("Neumann data: expected " +
                                std::to_string(mesh.num_boundary_nodes()) +
                                " boundary values, got " + std::to_string(g.size()));
  }
  NodalField load = NodalField::Zero(mesh.num_nodes());
  const auto& nodes = mesh.boundary_nodes();
  const auto& w = mesh.boundary_weights();
  for (int p = 0; p < mesh.num_boundary_nodes(); ++p) load[nodes[p]] += w[p] * g[p];
  return load;
}

NodalField assemble_source_load(const Mesh& mesh, const NodalField& f) {
  check_size(mesh, f, "source");
  NodalField load = NodalField::Zero(mesh.num_nodes());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double w = mesh.area(t) / 12.0;
    const double sum = f[tri[0]] + f[tri[1]] + f[tri[2]];
    for (int p = 0; p < 3; ++p) load[tri[p]] += w * (sum + f[tri[p]]);
  }
  return load;
}

NodalField assemble_lumped_load(const Mesh& mesh, const NodalField& f) {
  check_size(mesh, f, "source");
  return mesh.lumped_weights().cwiseProduct(f);
}

struct SpdSolver::Impl {
  SparseMatrix matrix;
  std::optional<Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                         Eigen::DiagonalPreconditioner<double>>>
      cg;
  std::optional<Eigen::SimplicialLDLT<SparseMatrix>> ldlt;
};

SpdSolver::SpdSolver(const SparseSpdSystem& system, SolverSettings settings)
    : settings_(settings), impl_(std::make_unique<Impl>()) {
  settings_.validate();
  impl_->matrix = system.matrix;
  const auto n = impl_->matrix.rows();
  if (settings_.method == SolverMethod::ConjugateGradient) {
    auto& cg = impl_->cg.emplace();
    cg.setTolerance(settings_.rel_tol);
    cg.setMaxIterations(settings_.max_iter > 0 ? settings_.max_iter : static_cast<int>(10 * n));
    cg.compute(impl_->matrix);
  } else {
    auto& ldlt = impl_->ldlt.emplace();
    ldlt.compute(impl_->matrix);
    if (ldlt.info() != Eigen::Success || (n > 0 && ldlt.vectorD().minCoeff() <= 0.0)) {
      throw SolverError("direct factorization failed: matrix is not positive definite", 0.0, 0);
    }
  }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

const SparseMatrix& SpdSolver::matrix() const { return impl_->matrix; }

NodalField SpdSolver::solve(const NodalField& rhs) const {
  if (rhs.size() != impl_->matrix.rows()) {
    throw std::invalid_argument("right-hand side size mismatch");
  }
  if (!rhs.allFinite()) throw std::invalid_argument("right-hand side is not finite");
  if (rhs.squaredNorm() == 0.0) return NodalField::Zero(rhs.size());
  if (impl_->ldlt) return impl_->ldlt->solve(rhs);

  auto& cg = *impl_->cg;
  NodalField x = cg.solve(rhs);
  if (cg.info() != Eigen::Success) {
    throw SolverError("conjugate gradient did not converge in " + std::to_string(cg.iterations()) +
                          " iterations (relative residual " + std::to_string(cg.error()) + ")",
                      cg.error(), static_cast<int>(cg.iterations()));
  }
  return x;
}

NodalField solve_spd(const SparseSpdSystem& system, const NodalField& rhs,
                     const SolverSettings& settings) {
  return SpdSolver(system, settings).solve(rhs);
}

BoundaryField trace(const Mesh& mesh, const NodalField& u) {
  check_size(mesh, u, "trace");
  BoundaryField h(mesh.num_boundary_nodes());
  const auto& nodes = mesh.boundary_nodes();
  for (int p = 0; p < mesh.num_boundary_nodes(); ++p) h[p] = u[nodes[p]];
  return h;
}

double l2_norm(const Mesh& mesh, const NodalField& f) {
  const SparseMatrix m = assemble_mass(mesh, NodalField::Ones(mesh.num_nodes()));
  return std::sqrt(std::max(0.0, f.dot(m * f)));
}

double h1_seminorm(const Mesh& mesh, const NodalField& f) {
  const SparseMatrix k = assemble_stiffness(mesh, NodalField::Ones(mesh.num_nodes()));
  return std::sqrt(std::max(0.0, f.dot(k * f)));
}

double h1_norm(const Mesh& mesh, const NodalField& f) {
  return std::hypot(l2_norm(mesh, f), h1_seminorm(mesh, f));
}

double l1_norm(const Mesh& mesh, const NodalField& f) {
  check_size(mesh, f, "l1_norm");
  return mesh.lumped_weights().dot(f.cwiseAbs());
}

double ls_norm(const Mesh& mesh, const NodalField& f, double s) {
  check_size(mesh, f, "ls_norm");
  if (!(s >= 1.0)) throw std::invalid_argument("L^s norm needs s >= 1");
  const double integral = mesh.lumped_weights().dot(f.cwiseAbs().array().pow(s).matrix());
  return std::pow(integral, 1.0 / s);
}

}  // namespace lsdot

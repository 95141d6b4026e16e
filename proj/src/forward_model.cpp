#include "lsdot/forward_model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace lsdot {

void ParameterBox::validate() const {
  if (!(a_lo > 0.0) || !(a_lo <= a_hi) || !(c_lo > 0.0) || !(c_lo <= c_hi) ||
      !std::isfinite(a_hi) || !std::isfinite(c_hi)) {
    throw std::invalid_argument("parameter box needs 0 < a_lo <= a_hi and 0 < c_lo <= c_hi");
  }
}

bool ParameterBox::contains(const NodalField& a, const NodalField& c) const {
  return a.allFinite() && c.allFinite() && a.minCoeff() >= a_lo && a.maxCoeff() <= a_hi &&
         c.minCoeff() >= c_lo && c.maxCoeff() <= c_hi;
}

void ParameterBox::require(const NodalField& a, const NodalField& c) const {
  auto check = [](const NodalField& f, double lo, double hi, const char* name) {
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      if (!std::isfinite(f[k]) || f[k] < lo || f[k] > hi) {
        throw std::invalid_argument(std::string("coefficient ") + name + " = " +
                                    std::to_string(f[k]) + " at node " + std::to_string(k) +
                                    " lies outside [" + std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
      }
    }
  };
  check(a, a_lo, a_hi, "a");
  check(c, c_lo, c_hi, "c");
}

void ExperimentSet::validate(const Mesh& mesh) const {
  if (excitations.empty()) throw std::invalid_argument("experiment set is empty");
  if (excitations.size() != measurements.size()) {
    throw std::invalid_argument("experiment set has " + std::to_string(excitations.size()) +
                                " excitations but " + std::to_string(measurements.size()) +
                                " measurements");
  }
  for (std::size_t m = 0; m < size(); ++m) {
    if (excitations[m].size() != mesh.num_boundary_nodes() ||
        measurements[m].size() != mesh.num_boundary_nodes()) {
      throw std::invalid_argument("experiment " + std::to_string(m) +
                                  " is not sized to the mesh boundary");
    }
  }
  if (!(delta >= 0.0)) throw std::invalid_argument("noise level delta must be >= 0");
}

ForwardSolution forward_solve(const Mesh& mesh, const NodalField& a, const NodalField& c,
                              const BoundaryField& g, const SolverSettings& settings,
                              const std::optional<ParameterBox>& box) {
  if (box) box->require(a, c);
  const SpdSolver solver(assemble_system(mesh, a, c), settings);
  return forward_solve(mesh, solver, g);
}

ForwardSolution forward_solve(const Mesh& mesh, const SpdSolver& solver, const BoundaryField& g) {
  ForwardSolution out;
  out.u = solver.solve(assemble_neumann_load(mesh, g));
  out.h = trace(mesh, out.u);
  return out;
}

ResidualSet residuals(const Mesh& mesh, const NodalField& a, const NodalField& c,
                      const ExperimentSet& experiments, const SolverSettings& settings) {
  const SpdSolver solver(assemble_system(mesh, a, c), settings);
  return residuals(mesh, solver, experiments);
}

ResidualSet residuals(const Mesh& mesh, const SpdSolver& solver, const ExperimentSet& experiments) {
  experiments.validate(mesh);
  ResidualSet out;
  out.r.reserve(experiments.size());
  out.u.reserve(experiments.size());
  for (std::size_t m = 0; m < experiments.size(); ++m) {
    auto sol = forward_solve(mesh, solver, experiments.excitations[m]);
    out.r.push_back(sol.h - experiments.measurements[m]);
    out.u.push_back(std::move(sol.u));
  }
  return out;
}

double misfit(const Mesh& mesh, const std::vector<BoundaryField>& r) {
  double total = 0.0;
  for (const auto& rm : r) total += boundary_l2_inner(mesh, rm, rm);
  return total;
}

BoundaryField add_noise(const Mesh& mesh, const BoundaryField& h, double delta,
                        std::uint64_t seed) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw std::invalid_argument("noise level delta must be a finite value >= 0");
  }
  if (h.size() != mesh.num_boundary_nodes()) {
    throw std::invalid_argument("add_noise: boundary field size mismatch");
  }
  if (delta == 0.0) return h;
  if (h.size() == 0) throw std::invalid_argument("add_noise: cannot perturb an empty boundary");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  BoundaryField e(h.size());
  for (Eigen::Index p = 0; p < e.size(); ++p) e[p] = unit(rng);
  const double norm = std::sqrt(boundary_l2_inner(mesh, e, e));
  if (!(norm > 0.0)) throw std::runtime_error("add_noise: degenerate perturbation draw");
  return h + (delta / norm) * e;
}

double holder_exponent(double p) {
  if (!(p > 2.0)) throw std::invalid_argument("Meyers exponent p must exceed 2");
  return 2.0 * p / (p - 2.0);
}

HolderProbe holder_probe(const Mesh& mesh, const NodalField& a, const NodalField& c,
                         const NodalField& a_pert, const NodalField& c_pert,
                         const BoundaryField& g, double exponent_s, const SolverSettings& settings,
                         const ParameterBox& box) {
  if (!(exponent_s > 2.0)) throw std::invalid_argument("holder_probe needs exponent s > 2");
  box.require(a, c);
  box.require(a_pert, c_pert);
  const auto u = forward_solve(mesh, a, c, g, settings).u;
  const auto u_pert = forward_solve(mesh, a_pert, c_pert, g, settings).u;
  HolderProbe out;
  out.lhs = h1_norm(mesh, u - u_pert);
  const double l1 = l1_norm(mesh, a - a_pert) + l1_norm(mesh, c - c_pert);
  out.rhs_core = std::pow(l1, 1.0 / exponent_s);
  return out;
}

InterpolationCheck lemma_interpolation_check(const Mesh& mesh, const NodalField& field,
                                             double bound_m, double s) {
  if (!(s >= 1.0)) throw std::invalid_argument("interpolation check needs s >= 1");
  if (!(bound_m > 0.0)) throw std::invalid_argument("interpolation check needs M > 0");
  if (field.size() != mesh.num_nodes()) {
    throw std::invalid_argument("interpolation check: field size mismatch");
  }
  const double max_abs = field.size() > 0 ? field.cwiseAbs().maxCoeff() : 0.0;
  if (!std::isfinite(max_abs) || max_abs > bound_m * (1.0 + 1e-12)) {
    throw std::invalid_argument("field exceeds the bound M = " + std::to_string(bound_m));
  }
  InterpolationCheck out;
  out.lhs = ls_norm(mesh, field, s);
  out.rhs = std::pow(bound_m, (s - 1.0) / s) * std::pow(l1_norm(mesh, field), 1.0 / s);
  return out;
}

}  // namespace lsdot

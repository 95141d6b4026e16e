#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lsdot/fem.hpp"

namespace lsdot {

/// Admissible box a_lo ≤ a ≤ a_hi, c_lo ≤ c ≤ c_hi.
struct ParameterBox {
  double a_lo = 1.0;
  double a_hi = 10.0;
  double c_lo = 1.0;
  double c_hi = 10.0;

  void validate() const;
  bool contains(const NodalField& a, const NodalField& c) const;
  /// Throws std::invalid_argument naming the first offending node.
  void require(const NodalField& a, const NodalField& c) const;
};

/// ℓ Neumann excitations with their (possibly noisy) Dirichlet measurements.
struct ExperimentSet {
  std::vector<BoundaryField> excitations;
  std::vector<BoundaryField> measurements;
  double delta = 0.0;

  std::size_t size() const { return excitations.size(); }
  void validate(const Mesh& mesh) const;
};

struct ForwardSolution {
  NodalField u;
  BoundaryField h;
};

ForwardSolution forward_solve(const Mesh& mesh, const NodalField& a, const NodalField& c,
                              const BoundaryField& g, const SolverSettings& settings,
                              const std::optional<ParameterBox>& box = std::nullopt);

/// Forward solve reusing an already factored/preconditioned system.
ForwardSolution forward_solve(const Mesh& mesh, const SpdSolver& solver, const BoundaryField& g);

struct ResidualSet {
  std::vector<BoundaryField> r;
  std::vector<NodalField> u;
};

/// r_m = trace(u_m) − h_m^δ for every experiment.
ResidualSet residuals(const Mesh& mesh, const NodalField& a, const NodalField& c,
                      const ExperimentSet& experiments, const SolverSettings& settings);
ResidualSet residuals(const Mesh& mesh, const SpdSolver& solver, const ExperimentSet& experiments);

/// Σ_m ‖r_m‖²_{L²(Γ)}.
double misfit(const Mesh& mesh, const std::vector<BoundaryField>& r);

/// h + e with e uniform(−1,1) per boundary node, rescaled to ‖e‖_{L²(Γ)} = delta.
BoundaryField add_noise(const Mesh& mesh, const BoundaryField& h, double delta, std::uint64_t seed);

/// s = 2p/(p−2), the exponent of the L¹-Hölder estimate for a Meyers exponent p > 2.
double holder_exponent(double p);

struct HolderProbe {
  double lhs = 0.0;        ///< ‖u − u′‖_{H¹}
  double rhs_core = 0.0;   ///< (‖a − a′‖_{L¹} + ‖c − c′‖_{L¹})^{1/s}
  double ratio() const { return rhs_core > 0.0 ? lhs / rhs_core : 0.0; }
};

HolderProbe holder_probe(const Mesh& mesh, const NodalField& a, const NodalField& c,
                         const NodalField& a_pert, const NodalField& c_pert,
                         const BoundaryField& g, double exponent_s, const SolverSettings& settings,
                         const ParameterBox& box);

struct InterpolationCheck {
  double lhs = 0.0;  ///< ‖f‖_{Lˢ}
  double rhs = 0.0;  ///< M^{(s−1)/s} ‖f‖_{L¹}^{1/s}
  bool holds() const { return lhs <= rhs * (1.0 + 1e-8); }
};

/// Lˢ–L¹ interpolation bound for fields with |f| ≤ M.
InterpolationCheck lemma_interpolation_check(const Mesh& mesh, const NodalField& field,
                                             double bound_m, double s);

}  // namespace lsdot

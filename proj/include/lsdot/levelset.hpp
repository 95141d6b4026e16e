#pragma once

#include "lsdot/fem.hpp"
#include "lsdot/mesh.hpp"

namespace lsdot {

/// The two values each coefficient may take. Index 1 marks the region {φ ≥ 0}.
struct ContrastLevels {
  double a1 = 10.0;
  double a2 = 1.0;
  double c1 = 10.0;
  double c2 = 1.0;

  void validate() const;
};

struct LevelSetPair {
  NodalField phi_a;
  NodalField phi_c;
  ContrastLevels levels;
  double eps = 0.1;

  void validate() const;
};

struct CoefficientPair {
  NodalField a;
  NodalField c;
};

/// Sharp step: 1 for t ≥ 0, else 0.
double heaviside(double t);
/// Piecewise-linear ramp of width eps: 1 + t/eps on [−eps, 0].
double heaviside_eps(double t, double eps);
/// Derivative of the ramp: 1/eps on the open interval (−eps, 0), else 0.
double heaviside_eps_prime(double t, double eps);

NodalField heaviside_eps(const NodalField& phi, double eps);
NodalField heaviside_eps_prime(const NodalField& phi, double eps);

CoefficientPair project_sharp(const LevelSetPair& ls);
CoefficientPair project_smooth(const LevelSetPair& ls);

/// Two-valued blend v2 + (v1 − v2)·H_ε(φ) of a single level set.
NodalField project_smooth(const NodalField& phi, double v1, double v2, double eps);
NodalField project_sharp(const NodalField& phi, double v1, double v2);

/// H′_ε(φ) · div(∇H_ε(φ) / sqrt(|∇H_ε(φ)|² + η²)).
///
/// The gradient of the nodal field H_ε(φ) is constant per element; the
/// divergence is the weak one, −Σ_T |T| ∇ψ_k · n_T, divided by the lumped
/// mass. No boundary flux term is added.
NodalField curvature_term(const Mesh& mesh, const NodalField& phi, double eps, double eta);

/// ∫_Ω |∇H_ε(φ)| dx, the total variation of the smoothed indicator.
double perimeter_estimate(const Mesh& mesh, const NodalField& phi, double eps);

/// radius² − ‖x − center‖², positive inside the disk.
NodalField init_paraboloid(const Mesh& mesh, Point center, double radius);

}  // namespace lsdot

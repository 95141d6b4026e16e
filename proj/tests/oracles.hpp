#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's assembly or quadrature; only the node numbering convention
// (row-major, cells split along the bottom-left to top-right diagonal) is shared.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

struct Grid {
  int nx, ny;
  double x0, y0, x1, y1;

  int nodes() const { return nx * ny; }
  double hx() const { return (x1 - x0) / (nx - 1); }
  double hy() const { return (y1 - y0) / (ny - 1); }
  std::array<double, 2> xy(int k) const {
    return {x0 + (k % nx) * hx(), y0 + (k / nx) * hy()};
  }
  std::vector<std::array<int, 3>> triangles() const {
    std::vector<std::array<int, 3>> out;
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        const int n00 = j * nx + i, n10 = n00 + 1, n01 = n00 + nx, n11 = n01 + 1;
        out.push_back({n00, n10, n11});
        out.push_back({n00, n11, n01});
      }
    }
    return out;
  }
};

struct Element {
  double area;
  std::array<std::array<double, 2>, 3> grad;
};

inline Element element(const Grid& g, const std::array<int, 3>& t) {
  const auto p0 = g.xy(t[0]), p1 = g.xy(t[1]), p2 = g.xy(t[2]);
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  Element e;
  e.area = 0.5 * std::abs(det);
  // ∇λ_i = rot(p_{i+2} − p_{i+1}) / det
  const std::array<std::array<double, 2>, 3> p{p0, p1, p2};
  for (int i = 0; i < 3; ++i) {
    const auto& a = p[(i + 1) % 3];
    const auto& b = p[(i + 2) % 3];
    e.grad[i] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
  }
  return e;
}

/// Dense K(a) + M(c): mean-of-vertices a per element, edge-midpoint rule for c ψ_i ψ_j.
inline Eigen::MatrixXd dense_system(const Grid& g, const Eigen::VectorXd& a,
                                    const Eigen::VectorXd& c) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.nodes(), g.nodes());
  for (const auto& t : g.triangles()) {
    const Element e = element(g, t);
    const double abar = (a[t[0]] + a[t[1]] + a[t[2]]) / 3.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        A(t[i], t[j]) += abar * e.area *
                         (e.grad[i][0] * e.grad[j][0] + e.grad[i][1] * e.grad[j][1]);
      }
    }
    // midpoints m_q of edge (q, q+1); barycentric values there are 1/2, 1/2, 0
    for (int q = 0; q < 3; ++q) {
      std::array<double, 3> lam{0, 0, 0};
      lam[q] = 0.5;
      lam[(q + 1) % 3] = 0.5;
      const double cm = lam[0] * c[t[0]] + lam[1] * c[t[1]] + lam[2] * c[t[2]];
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) A(t[i], t[j]) += e.area / 3.0 * cm * lam[i] * lam[j];
      }
    }
  }
  return A;
}

/// ∫_T f over all triangles with a 7-point degree-5 rule.
inline double integrate(const Grid& g, const std::function<double(const std::array<int, 3>&,
                                                                  double, double, double)>& f) {
  static const double a1 = 0.059715871789770, b1 = 0.470142064105115;
  static const double a2 = 0.797426985353087, b2 = 0.101286507323456;
  static const double w0 = 0.225, w1 = 0.132394152788506, w2 = 0.125939180544827;
  const std::array<std::array<double, 4>, 7> rule{{{1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
                                                   {a1, b1, b1, w1},
                                                   {b1, a1, b1, w1},
                                                   {b1, b1, a1, w1},
                                                   {a2, b2, b2, w2},
                                                   {b2, a2, b2, w2},
                                                   {b2, b2, a2, w2}}};
  double total = 0.0;
  for (const auto& t : g.triangles()) {
    const Element e = element(g, t);
    for (const auto& q : rule) total += e.area * q[3] * f(t, q[0], q[1], q[2]);
  }
  return total;
}

/// L² and H¹-seminorm errors of a P1 nodal field against an exact solution.
inline std::pair<double, double> p1_errors(
    const Grid& g, const Eigen::VectorXd& uh, const std::function<double(double, double)>& u,
    const std::function<std::array<double, 2>(double, double)>& grad_u) {
  auto point = [&](const std::array<int, 3>& t, double l0, double l1, double l2) {
    const auto p0 = g.xy(t[0]), p1 = g.xy(t[1]), p2 = g.xy(t[2]);
    return std::array<double, 2>{l0 * p0[0] + l1 * p1[0] + l2 * p2[0],
                                 l0 * p0[1] + l1 * p1[1] + l2 * p2[1]};
  };
  const double e0 = integrate(g, [&](const std::array<int, 3>& t, double l0, double l1, double l2) {
    const auto p = point(t, l0, l1, l2);
    const double d = l0 * uh[t[0]] + l1 * uh[t[1]] + l2 * uh[t[2]] - u(p[0], p[1]);
    return d * d;
  });
  const double e1 = integrate(g, [&](const std::array<int, 3>& t, double l0, double l1, double l2) {
    const Element e = element(g, t);
    double gx = 0.0, gy = 0.0;
    for (int i = 0; i < 3; ++i) {
      gx += uh[t[i]] * e.grad[i][0];
      gy += uh[t[i]] * e.grad[i][1];
    }
    const auto p = point(t, l0, l1, l2);
    const auto ge = grad_u(p[0], p[1]);
    return (gx - ge[0]) * (gx - ge[0]) + (gy - ge[1]) * (gy - ge[1]);
  });
  return {std::sqrt(e0), std::sqrt(e1)};
}

/// Boundary node indices counterclockwise from the bottom-left corner.
inline std::vector<int> boundary_ring(const Grid& g) {
  std::vector<int> out;
  for (int i = 0; i < g.nx - 1; ++i) out.push_back(i);
  for (int j = 0; j < g.ny - 1; ++j) out.push_back(j * g.nx + g.nx - 1);
  for (int i = g.nx - 1; i > 0; --i) out.push_back((g.ny - 1) * g.nx + i);
  for (int j = g.ny - 1; j > 0; --j) out.push_back(j * g.nx);
  return out;
}

/// Trapezoid weights along the ring: half of each adjacent edge length.
inline Eigen::VectorXd ring_weights(const Grid& g) {
  const auto ring = boundary_ring(g);
  const int nb = static_cast<int>(ring.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nb);
  for (int p = 0; p < nb; ++p) {
    const auto a = g.xy(ring[p]);
    const auto b = g.xy(ring[(p + 1) % nb]);
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    w[p] += len / 2;
    w[(p + 1) % nb] += len / 2;
  }
  return w;
}

}  // namespace oracle

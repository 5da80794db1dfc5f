#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <span>

#include "saddle/errors.hpp"

namespace saddle {

// Nodal coefficients on the interior mesh nodes; the boundary values at
// x = 0 and x = 1 are implicitly zero.
using Field = Eigen::VectorXd;

// Uniform P1 discretization of (0,1) with homogeneous Dirichlet conditions.
// n interior nodes at x_i = i*h, h = 1/(n+1), n+1 elements.
struct Mesh {
  int n = 0;
  double h = 0.0;
  int quad_order = 3;
};

// Gauss-Legendre rule on [-1, 1].
struct QuadRule {
  std::span<const double> points;
  std::span<const double> weights;
};

QuadRule gauss_rule(int order);

Mesh build_mesh(int n, int quad_order = 3);

// K_ii = 2/h, K_{i,i+-1} = -1/h (exact for P1 hat functions).
Eigen::MatrixXd stiffness(const Mesh& mesh);

// M_ii = 2h/3, M_{i,i+-1} = h/6.
Eigen::MatrixXd mass(const Mesh& mesh);

namespace detail {

inline void check_field(const Mesh& mesh, const Field& u) {
  if (u.size() != mesh.n) {
    throw PreconditionError("mesh:FieldSize",
                            "field has " + std::to_string(u.size()) +
                                " coefficients, mesh has " + std::to_string(mesh.n) +
                                " interior nodes");
  }
}

}  // namespace detail

// Composite Gauss quadrature of f(x, u_h(x)) over (0,1) with u_h the P1
// interpolant of the nodal values u.
template <typename F>
double integrate(const Mesh& mesh, const Field& u, F&& f) {
  detail::check_field(mesh, u);
  const QuadRule rule = gauss_rule(mesh.quad_order);
  const double h = mesh.h;
  double total = 0.0;
  for (int e = 0; e <= mesh.n; ++e) {
    const double x_left = e * h;
    const double u_left = (e == 0) ? 0.0 : u[e - 1];
    const double u_right = (e == mesh.n) ? 0.0 : u[e];
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const double theta = 0.5 * (rule.points[g] + 1.0);
      const double x = x_left + h * theta;
      const double uh = u_left * (1.0 - theta) + u_right * theta;
      const double value = f(x, uh);
      if (!std::isfinite(value)) {
        throw NumericError("mesh:NonFiniteIntegrand",
                           "integrand is not finite at x = " + std::to_string(x));
      }
      total += 0.5 * h * rule.weights[g] * value;
    }
  }
  return total;
}

// Assembled load vector of the form b_i = \int f(x, u_h(x)) phi_i(x) dx.
template <typename F>
Field assemble_form(const Mesh& mesh, const Field& u, F&& f) {
  detail::check_field(mesh, u);
  const QuadRule rule = gauss_rule(mesh.quad_order);
  const double h = mesh.h;
  Field b = Field::Zero(mesh.n);
  for (int e = 0; e <= mesh.n; ++e) {
    const double x_left = e * h;
    const double u_left = (e == 0) ? 0.0 : u[e - 1];
    const double u_right = (e == mesh.n) ? 0.0 : u[e];
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const double theta = 0.5 * (rule.points[g] + 1.0);
      const double x = x_left + h * theta;
      const double uh = u_left * (1.0 - theta) + u_right * theta;
      const double value = f(x, uh);
      if (!std::isfinite(value)) {
        throw NumericError("mesh:NonFiniteIntegrand",
                           "integrand is not finite at x = " + std::to_string(x));
      }
      const double w = 0.5 * h * rule.weights[g] * value;
      if (e > 0) b[e - 1] += w * (1.0 - theta);
      if (e < mesh.n) b[e] += w * theta;
    }
  }
  return b;
}

// Assembled tridiagonal matrix A_ij = \int f(x, u_h(x)) phi_i phi_j dx.
template <typename F>
Eigen::MatrixXd assemble_bilinear(const Mesh& mesh, const Field& u, F&& f) {
  detail::check_field(mesh, u);
  const QuadRule rule = gauss_rule(mesh.quad_order);
  const double h = mesh.h;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(mesh.n, mesh.n);
  for (int e = 0; e <= mesh.n; ++e) {
    const double x_left = e * h;
    const double u_left = (e == 0) ? 0.0 : u[e - 1];
    const double u_right = (e == mesh.n) ? 0.0 : u[e];
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const double theta = 0.5 * (rule.points[g] + 1.0);
      const double x = x_left + h * theta;
      const double uh = u_left * (1.0 - theta) + u_right * theta;
      const double value = f(x, uh);
      if (!std::isfinite(value)) {
        throw NumericError("mesh:NonFiniteIntegrand",
                           "integrand is not finite at x = " + std::to_string(x));
      }
      const double w = 0.5 * h * rule.weights[g] * value;
      const double s_left = 1.0 - theta;
      if (e > 0) a(e - 1, e - 1) += w * s_left * s_left;
      if (e < mesh.n) a(e, e) += w * theta * theta;
      if (e > 0 && e < mesh.n) {
        a(e - 1, e) += w * s_left * theta;
        a(e, e - 1) += w * s_left * theta;
      }
    }
  }
  return a;
}

// Nodal interpolant of a scalar function on the interior nodes.
template <typename F>
Field interpolate(const Mesh& mesh, F&& f) {
  Field u(mesh.n);
  for (int i = 0; i < mesh.n; ++i) u[i] = f((i + 1) * mesh.h);
  return u;
}

}  // namespace saddle

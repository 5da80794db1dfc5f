// Independent reference computations for the test suites. Everything here
// deliberately avoids the library's quadrature and spectral code paths so
// that agreement is evidence rather than tautology.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "saddle/mesh.hpp"
#include "saddle/rng.hpp"

namespace oracle {

// Aligned composite midpoint rule over (0,1) applied to f(x, u_h(x)) with
// u_h the P1 interpolant of the nodal values. Subintervals never straddle
// element boundaries, so the only error is the O(dx^2) midpoint error of a
// smooth integrand within each element.
template <typename F>
double riemann_p1(const saddle::Mesh& mesh, const saddle::Field& u, F&& f,
                  int total_points = 100000) {
  const int elements = mesh.n + 1;
  const int sub = std::max(1, total_points / elements);
  const double dx = mesh.h / sub;
  double acc = 0.0;
  for (int e = 0; e < elements; ++e) {
    const double u_left = (e == 0) ? 0.0 : u[e - 1];
    const double u_right = (e == mesh.n) ? 0.0 : u[e];
    for (int i = 0; i < sub; ++i) {
      const double theta = (i + 0.5) / sub;
      const double x = e * mesh.h + theta * mesh.h;
      acc += dx * f(x, u_left * (1.0 - theta) + u_right * theta);
    }
  }
  return acc;
}

// Same rule for the piecewise-constant derivative of the interpolant.
template <typename F>
double riemann_p1_deriv(const saddle::Mesh& mesh, const saddle::Field& u, F&& f,
                        int total_points = 100000) {
  const int elements = mesh.n + 1;
  const int sub = std::max(1, total_points / elements);
  const double dx = mesh.h / sub;
  double acc = 0.0;
  for (int e = 0; e < elements; ++e) {
    const double u_left = (e == 0) ? 0.0 : u[e - 1];
    const double u_right = (e == mesh.n) ? 0.0 : u[e];
    const double slope = (u_right - u_left) / mesh.h;
    for (int i = 0; i < sub; ++i) {
      const double x = e * mesh.h + (i + 0.5) / sub * mesh.h;
      acc += dx * f(x, slope);
    }
  }
  return acc;
}

// Exact eigenvalues of the discrete P1 problem K e = lambda M e on a uniform
// mesh: lambda_j = (6/h^2) (1 - cos(j pi h)) / (2 + cos(j pi h)).
inline double discrete_eigenvalue(int n, int j) {
  const double h = 1.0 / (n + 1);
  const double c = std::cos(j * M_PI * h);
  return 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
}

// Derivative-free 1-D maximizer: coarse scan, then bisection on the sign of
// the central-difference slope (a plain value-based ternary search cannot
// localize a smooth maximum beyond ~sqrt(eps), the slope sign can).
template <typename F>
double scan_maximizer(F&& f, double lo, double hi, int scan_points = 40000) {
  double best_x = lo;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan_points; ++i) {
    const double x = lo + (hi - lo) * i / scan_points;
    const double v = f(x);
    if (v > best_val) {
      best_val = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - (hi - lo) / scan_points);
  double b = std::min(hi, best_x + (hi - lo) / scan_points);
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (a + b);
    const double delta = 1e-5 * (1.0 + std::abs(mid));
    const double slope = f(mid + delta) - f(mid - delta);
    if (slope > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
    if (b - a <= 1e-13 * (1.0 + std::abs(mid))) break;
  }
  return 0.5 * (a + b);
}

// Central finite difference of a scalar map along a direction.
template <typename F>
double central_difference(F&& value, double h) {
  return (value(h) - value(-h)) / (2.0 * h);
}

// Smooth deterministic pseudo-random field: low sine modes with decaying
// coefficients, interpolated onto the mesh nodes.
inline saddle::Field smooth_field(const saddle::Mesh& mesh, unsigned seed, double scale = 1.0,
                                  int modes = 6) {
  saddle::Rng rng(seed);
  std::vector<double> amp(modes);
  for (int j = 0; j < modes; ++j) amp[j] = scale * rng.normal() / ((j + 1) * (j + 1));
  saddle::Field u(mesh.n);
  for (int i = 0; i < mesh.n; ++i) {
    const double x = (i + 1) * mesh.h;
    double s = 0.0;
    for (int j = 0; j < modes; ++j) s += amp[j] * std::sin((j + 1) * M_PI * x);
    u[i] = s;
  }
  return u;
}

}  // namespace oracle

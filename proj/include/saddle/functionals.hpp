#pragma once

#include <Eigen/Cholesky>
#include <functional>
#include <string>
#include <vector>

#include "saddle/mesh.hpp"
#include "saddle/spectral.hpp"

namespace saddle {

// Superlinear term g(x,s) with primitive G(x,s) = \int_0^s g(x,t) dt.
// The declared exponents must satisfy:
//   gamma in (2, inf): growth |g| <= C (1 + |s|^{gamma-1}),
//   alpha > 2, R0 > 0: alpha G(x,s) <= g(x,s) s for |s| >= R0, G > 0.
struct Nonlinearity {
  std::function<double(double, double)> g;
  std::function<double(double, double)> G;
  std::function<double(double, double)> dg_ds;
  double gamma = 4.0;
  double alpha = 4.0;
  double R0 = 1.0;
  double c_min = 1.0;
  double c_max = 1.0;
  // epsilon -> C(epsilon) in the bound G(x,s) <= (epsilon/2) s^2 + C(epsilon)|s|^gamma.
  std::function<double(double)> growth_C;
  std::string id = "custom";
};

// g = c(x) |s|^{gamma-2} s, G = c(x) |s|^gamma / gamma. The superlinear
// inequality holds with alpha = gamma, R0 = 1 (equality, in fact).
Nonlinearity pure_power(double gamma, double c = 1.0);
Nonlinearity pure_power(double gamma, std::function<double(double)> c, double c_min,
                        double c_max);

struct AssumptionCheck {
  bool pass = true;
  double worst = 0.0;      // worst value of the monitored quantity
  double witness_x = 0.0;  // grid point attaining it
  double witness_s = 0.0;
  std::string detail;
};

struct AssumptionReport {
  AssumptionCheck a1;  // g(x,0) = 0 and limsup_{s->0} g/s <= 0
  AssumptionCheck a2;  // |g| <= C (1 + |s|^{gamma-1}) with moderate C
  AssumptionCheck a3;  // G > 0 and alpha G <= g s for |s| >= R0
  double limsup_estimate = 0.0;
  double C_estimate = 0.0;
  bool all_pass() const { return a1.pass && a2.pass && a3.pass; }
  std::string summary() const;
};

struct AssumptionTolerances {
  double tol_a1 = 1e-8;
  double C_cap = 1e12;
  double primitive_tol = 1e-6;  // |G(x,s) - \int_0^s g| on the test grid
};

AssumptionReport check_assumptions(const Nonlinearity& nl, const std::vector<double>& s_grid,
                                   const std::vector<double>& x_grid,
                                   const AssumptionTolerances& tol = {});

// Immutable problem data: discretization, lambda in an open spectral gap,
// sublinear exponent q in (1,2) and the superlinear term.
struct ProblemSpec {
  Mesh mesh;
  double lambda = 0.0;
  double q = 1.5;
  Nonlinearity nl;
  Eigen::MatrixXd K;
  Eigen::MatrixXd M;
  SpectralData spectral;
  Eigen::LLT<Eigen::MatrixXd> K_llt;  // Riesz solves and dual norms
};

ProblemSpec make_problem(const Mesh& mesh, double lambda, double q, Nonlinearity nl);

struct TruncationParams {
  double rho = 1.0;
};

// C-infinity cutoff: 0 for |s| <= rho/2, 1 for |s| >= rho, exp(-1/x)-based
// smoothstep in between.
double phi_rho(double rho, double s);
double phi_rho_prime(double rho, double s);

// E_mu(u) = 1/2 H_lambda(u) - (mu/q) |u|_{L^q}^q - \int G(x,u) dx.
double energy(const ProblemSpec& p, const Field& u, double mu);

// R^E(u) = [1/2 H_lambda(u) - \int G(x,u) dx - E] / [(1/q)|u|_{L^q}^q].
double rayleigh(const ProblemSpec& p, const Field& u, double E);

// R^E_rho(u) = phi_rho(||u||_1) R^E(u), with value 0 at u = 0.
double rayleigh_trunc(const ProblemSpec& p, const Field& u, double E,
                      const TruncationParams& tp);

// Assembled directional-derivative form F and its Riesz representative
// w = K^{-1} F in the H^1_0 inner product; dual_residual = sqrt(F^T w) is the
// W* norm of the derivative.
struct Gradient {
  Field direction;  // Riesz representative (metric gradient)
  Field dual;       // assembled form F
  double dual_residual = 0.0;
};

Gradient grad_energy(const ProblemSpec& p, const Field& u, double mu);
Gradient grad_rayleigh(const ProblemSpec& p, const Field& u, double E);
Gradient grad_rayleigh_trunc(const ProblemSpec& p, const Field& u, double E,
                             const TruncationParams& tp);

// Building blocks shared with the Newton refinement.
double lq_integral(const ProblemSpec& p, const Field& u);        // \int |u|^q
double g_integral(const ProblemSpec& p, const Field& u);         // \int G(x,u)
Field lq_form(const ProblemSpec& p, const Field& u);             // \int sgn(u)|u|^{q-1} phi_i
Field g_form(const ProblemSpec& p, const Field& u);              // \int g(x,u) phi_i
Field energy_form(const ProblemSpec& p, const Field& u, double mu);  // assembled DE_mu(u)
double dual_norm(const ProblemSpec& p, const Field& form);

}  // namespace saddle

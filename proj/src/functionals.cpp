#include "saddle/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "saddle/errors.hpp"

namespace saddle {

namespace {

constexpr double kLqFloor = 1e-14;

double sgn_pow(double s, double exponent) {
  if (s == 0.0) return 0.0;
  const double mag = std::pow(std::abs(s), exponent);
  return s > 0.0 ? mag : -mag;
}

}  // namespace

Nonlinearity pure_power(double gamma, double c) {
  return pure_power(
      gamma, [c](double) { return c; }, c, c);
}

Nonlinearity pure_power(double gamma, std::function<double(double)> c, double c_min,
                        double c_max) {
  if (gamma <= 2.0) {
    throw PreconditionError("functionals:BadGamma",
                            "pure power exponent must exceed 2, got " + std::to_string(gamma));
  }
  if (c_min <= 0.0) {
    throw PreconditionError("functionals:BadCoefficient",
                            "pure power coefficient must be positive");
  }
  Nonlinearity nl;
  nl.gamma = gamma;
  nl.alpha = gamma;
  nl.R0 = 1.0;
  nl.c_min = c_min;
  nl.c_max = c_max;
  nl.id = "pure_power";
  nl.g = [c, gamma](double x, double s) { return c(x) * sgn_pow(s, gamma - 1.0); };
  nl.G = [c, gamma](double x, double s) {
    return c(x) * std::pow(std::abs(s), gamma) / gamma;
  };
  nl.dg_ds = [c, gamma](double x, double s) {
    return c(x) * (gamma - 1.0) * std::pow(std::abs(s), gamma - 2.0);
  };
  // G = c|s|^gamma / gamma, so the two-term growth bound holds with
  // C(eps) = c_max/gamma for every eps >= 0.
  nl.growth_C = [c_max, gamma](double) { return c_max / gamma; };
  return nl;
}

std::string AssumptionReport::summary() const {
  std::ostringstream out;
  auto line = [&out](const char* name, const AssumptionCheck& c) {
    out << name << ": " << (c.pass ? "pass" : "FAIL") << "  worst=" << c.worst
        << " at (x=" << c.witness_x << ", s=" << c.witness_s << ")";
    if (!c.detail.empty()) out << "  [" << c.detail << "]";
    out << "\n";
  };
  line("(A1)", a1);
  line("(A2)", a2);
  line("(A3)", a3);
  out << "limsup g(x,s)/s estimate near 0: " << limsup_estimate << "\n";
  out << "growth constant estimate C: " << C_estimate << "\n";
  return out.str();
}

AssumptionReport check_assumptions(const Nonlinearity& nl, const std::vector<double>& s_grid,
                                   const std::vector<double>& x_grid,
                                   const AssumptionTolerances& tol) {
  AssumptionReport rep;

  // (A1): g(x,0) = 0 and limsup_{s->0} g(x,s)/s <= 0, uniformly in x. The
  // limsup is estimated on a shrinking grid of scales: the ratio must either
  // fall below the tolerance, become nonpositive, or decay visibly decade by
  // decade (e.g. pure powers with gamma near 2 vanish slowly).
  bool origin_ok = true;
  double origin_worst = 0.0, origin_x = 0.0;
  rep.limsup_estimate = -std::numeric_limits<double>::infinity();
  bool trend_ok = true;
  for (double x : x_grid) {
    const double g0 = nl.g(x, 0.0);
    if (std::abs(g0) > std::abs(origin_worst)) {
      origin_worst = g0;
      origin_x = x;
      if (std::abs(g0) > tol.tol_a1) origin_ok = false;
    }
    static constexpr double kScales[] = {1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
    double ratios[std::size(kScales)];
    for (std::size_t j = 0; j < std::size(kScales); ++j) {
      ratios[j] = std::max(nl.g(x, kScales[j]) / kScales[j],
                           nl.g(x, -kScales[j]) / -kScales[j]);
    }
    const double limit = ratios[std::size(kScales) - 1];
    if (limit > rep.limsup_estimate) {
      rep.limsup_estimate = limit;
      rep.a1.worst = limit;
      rep.a1.witness_x = x;
      rep.a1.witness_s = kScales[std::size(kScales) - 1];
    }
    if (limit > tol.tol_a1) {
      // Accept a clearly decaying positive tail, reject a stabilized one.
      constexpr std::size_t last = std::size(kScales) - 1;
      if (!(ratios[last] <= 0.7 * ratios[last - 1] &&
            ratios[last - 1] <= 0.7 * ratios[last - 2])) {
        trend_ok = false;
      }
    }
  }
  if (!origin_ok) {
    rep.a1 = {false, origin_worst, origin_x, 0.0, "g(x,0) != 0"};
  } else {
    rep.a1.pass = rep.limsup_estimate <= tol.tol_a1 || trend_ok;
    if (!rep.a1.pass) rep.a1.detail = "limsup g/s > 0 near s = 0";
  }

  // (A2): |g(x,s)| <= C (1 + |s|^{gamma-1}); report the smallest C on the grid.
  rep.a2.worst = 0.0;
  for (double x : x_grid) {
    for (double s : s_grid) {
      const double bound = 1.0 + std::pow(std::abs(s), nl.gamma - 1.0);
      const double ratio = std::abs(nl.g(x, s)) / bound;
      if (!std::isfinite(ratio)) {
        rep.a2 = {false, ratio, x, s, "non-finite g"};
        break;
      }
      if (ratio > rep.a2.worst) {
        rep.a2.worst = ratio;
        rep.a2.witness_x = x;
        rep.a2.witness_s = s;
      }
    }
  }
  rep.C_estimate = rep.a2.worst;
  if (rep.a2.detail.empty()) {
    rep.a2.pass = rep.a2.worst <= tol.C_cap;
    if (!rep.a2.pass) rep.a2.detail = "growth constant exceeds cap";
  }

  // (A3): G(x,s) > 0 for s != 0, and alpha G <= g s for |s| >= R0.
  // Also cross-check that G is the primitive of g on the grid.
  rep.a3.worst = 0.0;
  for (double x : x_grid) {
    for (double s : s_grid) {
      if (s == 0.0) continue;
      const double G = nl.G(x, s);
      if (G <= 0.0) {
        rep.a3 = {false, G, x, s, "G(x,s) <= 0"};
        break;
      }
      if (std::abs(s) >= nl.R0) {
        const double defect = nl.alpha * G - nl.g(x, s) * s;  // must be <= 0
        if (defect > rep.a3.worst) {
          rep.a3.worst = defect;
          rep.a3.witness_x = x;
          rep.a3.witness_s = s;
        }
      }
    }
    if (!rep.a3.pass) break;
  }
  if (rep.a3.detail.empty()) {
    rep.a3.pass = rep.a3.worst <= tol.primitive_tol;
    if (!rep.a3.pass) rep.a3.detail = "alpha G > g s beyond R0";
  }

  // Primitive consistency: G(x,s) vs Simpson quadrature of g from 0 to s.
  for (double x : x_grid) {
    for (double s : s_grid) {
      if (s == 0.0) continue;
      const int steps = 64;
      const double ds = s / steps;
      double acc = 0.0;
      for (int i = 0; i < steps; ++i) {
        const double a = i * ds;
        const double b = a + ds;
        acc += ds / 6.0 * (nl.g(x, a) + 4.0 * nl.g(x, 0.5 * (a + b)) + nl.g(x, b));
      }
      const double defect = std::abs(nl.G(x, s) - acc) / (1.0 + std::abs(acc));
      if (defect > tol.primitive_tol && rep.a3.pass) {
        rep.a3.pass = false;
        rep.a3.worst = defect;
        rep.a3.witness_x = x;
        rep.a3.witness_s = s;
        rep.a3.detail = "G is not the primitive of g";
      }
    }
  }
  return rep;
}

ProblemSpec make_problem(const Mesh& mesh, double lambda, double q, Nonlinearity nl) {
  if (!(q > 1.0 && q < 2.0)) {
    throw PreconditionError("functionals:BadQ",
                            "q must lie in (1,2), got " + std::to_string(q));
  }
  if (!(nl.gamma > 2.0)) {
    throw PreconditionError("functionals:BadGamma",
                            "gamma must exceed 2, got " + std::to_string(nl.gamma));
  }
  ProblemSpec p;
  p.mesh = mesh;
  p.lambda = lambda;
  p.q = q;
  p.nl = std::move(nl);
  p.K = stiffness(mesh);
  p.M = mass(mesh);
  p.spectral = eigendecompose(p.K, p.M, lambda);
  p.K_llt.compute(p.K);
  if (p.K_llt.info() != Eigen::Success) {
    throw NumericError("functionals:StiffnessFactorization", "Cholesky of K failed");
  }
  return p;
}

double phi_rho(double rho, double s) {
  if (rho <= 0.0) {
    throw PreconditionError("functionals:BadRho", "truncation radius must be positive");
  }
  const double t = (std::abs(s) - 0.5 * rho) / (0.5 * rho);
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double phi_rho_prime(double rho, double s) {
  if (rho <= 0.0) {
    throw PreconditionError("functionals:BadRho", "truncation radius must be positive");
  }
  const double sign = (s >= 0.0) ? 1.0 : -1.0;
  const double t = (std::abs(s) - 0.5 * rho) / (0.5 * rho);
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  const double da = a / (t * t);
  const double db = b / ((1.0 - t) * (1.0 - t));
  const double sum = a + b;
  // d/dt [a/(a+b)] = (a' b + a b') / (a+b)^2
  return sign * (da * b + a * db) / (sum * sum) * (2.0 / rho);
}

double lq_integral(const ProblemSpec& p, const Field& u) {
  const double q = p.q;
  return integrate(p.mesh, u, [q](double, double s) { return std::pow(std::abs(s), q); });
}

double g_integral(const ProblemSpec& p, const Field& u) {
  return integrate(p.mesh, u, [&p](double x, double s) { return p.nl.G(x, s); });
}

Field lq_form(const ProblemSpec& p, const Field& u) {
  const double q = p.q;
  return assemble_form(p.mesh, u, [q](double, double s) { return sgn_pow(s, q - 1.0); });
}

Field g_form(const ProblemSpec& p, const Field& u) {
  return assemble_form(p.mesh, u, [&p](double x, double s) { return p.nl.g(x, s); });
}

double energy(const ProblemSpec& p, const Field& u, double mu) {
  const double quadratic = 0.5 * h_lambda(p.K, p.M, p.lambda, u);
  return quadratic - (mu / p.q) * lq_integral(p, u) - g_integral(p, u);
}

double rayleigh(const ProblemSpec& p, const Field& u, double E) {
  const double denom = lq_integral(p, u) / p.q;
  if (denom <= kLqFloor) throw zero_denominator();
  const double numer = 0.5 * h_lambda(p.K, p.M, p.lambda, u) - g_integral(p, u) - E;
  return numer / denom;
}

double rayleigh_trunc(const ProblemSpec& p, const Field& u, double E,
                      const TruncationParams& tp) {
  const double n1 = norm1(p.spectral, u).total;
  const double phi = phi_rho(tp.rho, n1);
  if (phi == 0.0) return 0.0;
  return phi * rayleigh(p, u, E);
}

double dual_norm(const ProblemSpec& p, const Field& form) {
  const Field w = p.K_llt.solve(form);
  return std::sqrt(std::max(0.0, form.dot(w)));
}

Field energy_form(const ProblemSpec& p, const Field& u, double mu) {
  return p.K * u - p.lambda * (p.M * u) - mu * lq_form(p, u) - g_form(p, u);
}

Gradient grad_energy(const ProblemSpec& p, const Field& u, double mu) {
  Gradient g;
  g.dual = energy_form(p, u, mu);
  g.direction = p.K_llt.solve(g.dual);
  g.dual_residual = std::sqrt(std::max(0.0, g.dual.dot(g.direction)));
  return g;
}

Gradient grad_rayleigh(const ProblemSpec& p, const Field& u, double E) {
  const double denom = lq_integral(p, u) / p.q;
  if (denom <= kLqFloor) throw zero_denominator();
  const double value = (0.5 * h_lambda(p.K, p.M, p.lambda, u) - g_integral(p, u) - E) / denom;
  // Quotient rule: DR = (DN - R * DD) / D, and DN - R*DD is exactly the
  // assembled DE_mu form at mu = R(u).
  Gradient g;
  g.dual = energy_form(p, u, value) / denom;
  g.direction = p.K_llt.solve(g.dual);
  g.dual_residual = std::sqrt(std::max(0.0, g.dual.dot(g.direction)));
  return g;
}

Gradient grad_rayleigh_trunc(const ProblemSpec& p, const Field& u, double E,
                             const TruncationParams& tp) {
  const double n1 = norm1(p.spectral, u).total;
  const double phi = phi_rho(tp.rho, n1);
  const double dphi = phi_rho_prime(tp.rho, n1);

  Gradient g;
  if (phi == 0.0 && dphi == 0.0) {
    g.dual = Field::Zero(u.size());
    g.direction = Field::Zero(u.size());
    g.dual_residual = 0.0;
    return g;
  }

  const Gradient inner = grad_rayleigh(p, u, E);
  g.dual = phi * inner.dual;
  if (dphi != 0.0) {
    // d||u||_1 (v) = <u, v>_1 / ||u||_1, assembled through the expansion.
    const Eigen::VectorXd coeffs = p.spectral.coefficients(u);
    const Eigen::VectorXd weighted =
        (p.spectral.norm1_weights.array() * coeffs.array()).matrix() / n1;
    const Field norm1_form = p.M * (p.spectral.eigenvectors * weighted);
    const double value = rayleigh(p, u, E);
    g.dual += dphi * value * norm1_form;
  }
  g.direction = p.K_llt.solve(g.dual);
  g.dual_residual = std::sqrt(std::max(0.0, g.dual.dot(g.direction)));
  return g;
}

}  // namespace saddle

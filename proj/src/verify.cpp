#include "saddle/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saddle/errors.hpp"
#include "saddle/rng.hpp"

namespace saddle {

double fd_gradient_check(const ProblemSpec& p, const FunctionalSelector& sel, const Field& u,
                         const Field& v, double h) {
  if (!(h > 0.0)) {
    throw PreconditionError("verify:BadStep", "finite-difference step must be positive");
  }
  double analytic = 0.0;
  double plus = 0.0, minus = 0.0;
  switch (sel.kind) {
    case FunctionalKind::Energy: {
      analytic = grad_energy(p, u, sel.mu).dual.dot(v);
      plus = energy(p, u + h * v, sel.mu);
      minus = energy(p, u - h * v, sel.mu);
      break;
    }
    case FunctionalKind::Rayleigh: {
      analytic = grad_rayleigh(p, u, sel.E).dual.dot(v);
      plus = rayleigh(p, u + h * v, sel.E);
      minus = rayleigh(p, u - h * v, sel.E);
      break;
    }
    case FunctionalKind::RayleighTruncated: {
      analytic = grad_rayleigh_trunc(p, u, sel.E, sel.tp).dual.dot(v);
      plus = rayleigh_trunc(p, u + h * v, sel.E, sel.tp);
      minus = rayleigh_trunc(p, u - h * v, sel.E, sel.tp);
      break;
    }
  }
  const double fd = (plus - minus) / (2.0 * h);
  return std::abs(analytic - fd) / (std::abs(analytic) + 1e-12);
}

FiberingProfile fibering_profile(const ProblemSpec& p, const Field& u, const Field& v,
                                 double E, const std::vector<double>& t_grid) {
  if (u.norm() == 0.0) {
    throw PreconditionError("verify:ZeroDirection", "fibering direction u must be nonzero");
  }
  FiberingProfile profile;
  profile.t_grid = t_grid;
  profile.values.resize(t_grid.size());
  profile.skipped.assign(t_grid.size(), false);
  profile.peak_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const Field point = t_grid[i] * u + v;
    double value;
    try {
      value = rayleigh(p, point, E);
    } catch (const NumericError&) {
      profile.skipped[i] = true;
      profile.values[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    profile.values[i] = value;
    if (value > profile.peak_value) {
      profile.peak_value = value;
      profile.peak_t = t_grid[i];
    }
  }
  return profile;
}

BallProbe small_ball_negativity(const ProblemSpec& p, double E, double rho_probe,
                                int samples, unsigned seed) {
  if (!(E > 0.0)) {
    throw PreconditionError("verify:RequiresPositiveEnergy",
                            "small-ball negativity probe requires E > 0");
  }
  const SpectralData& spec = p.spectral;
  const int n = spec.size();
  Rng rng(seed);

  BallProbe probe;
  probe.worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    // Random direction with decaying spectral content, random radius.
    Eigen::VectorXd tilde(n);
    for (int i = 0; i < n; ++i) tilde[i] = rng.normal() / (1.0 + i);
    tilde /= tilde.norm();
    const double radius = rho_probe * std::max(rng.uniform_positive(), 1e-3);
    Field u = Field::Zero(n);
    for (int i = 0; i < n; ++i) {
      u += (radius * tilde[i] / std::sqrt(spec.norm1_weights[i])) *
           Field(spec.eigenvectors.col(i));
    }
    const double value = rayleigh(p, u, E);
    if (value > probe.worst) {
      probe.worst = value;
      probe.witness = u;
    }
  }
  return probe;
}

double embedding_constant(const SpectralData& spec, const Mesh& mesh, double r, int restarts,
                          Subspace subspace, unsigned seed) {
  if (!(r >= 1.0)) {
    throw PreconditionError("verify:BadExponent", "Lebesgue exponent must be >= 1");
  }
  if (restarts < 1) {
    throw PreconditionError("verify:BadRestarts", "at least one restart required");
  }
  const int n = spec.size();
  const int k0 = subspace == Subspace::Wplus ? spec.k : 0;
  const Eigen::VectorXd sqrt_w = spec.norm1_weights.array().sqrt().matrix();

  auto synthesize = [&](const Eigen::VectorXd& tilde) {
    return Field(spec.eigenvectors * tilde.cwiseQuotient(sqrt_w));
  };
  auto lr_norm = [&](const Field& u) {
    return std::pow(integrate(mesh, u, [r](double, double s) { return std::pow(std::abs(s), r); }),
                    1.0 / r);
  };

  Rng rng(seed);
  double best = 0.0;
  for (int trial = 0; trial < restarts; ++trial) {
    Eigen::VectorXd tilde = Eigen::VectorXd::Zero(n);
    if (trial < std::min(4, n - k0)) {
      tilde[k0 + trial] = 1.0;  // low modes first, then random mixtures
    } else {
      for (int i = k0; i < n; ++i) tilde[i] = rng.normal() / (1.0 + (i - k0));
      tilde /= tilde.norm();
    }

    // Riemannian ascent of |u|_{L^r} on the ||.||_1-unit sphere of the subspace.
    Field u = synthesize(tilde);
    double value = lr_norm(u);
    double step = 0.5;
    for (int it = 0; it < 400; ++it) {
      // d|u|_{L^r}(v) = |u|_{L^r}^{1-r} * \int sgn(u)|u|^{r-1} v.
      const Field form = assemble_form(
          mesh, u, [r](double, double s) {
            if (s == 0.0) return 0.0;
            const double mag = std::pow(std::abs(s), r - 1.0);
            return s > 0.0 ? mag : -mag;
          });
      Eigen::VectorXd grad =
          (spec.eigenvectors.transpose() * form).cwiseQuotient(sqrt_w) *
          std::pow(value, 1.0 - r);
      grad.head(k0).setZero();
      Eigen::VectorXd tangent = grad - grad.dot(tilde) * tilde;
      const double tn = tangent.norm();
      if (tn <= 1e-12 * (1.0 + value)) break;

      bool accepted = false;
      double tau = step / tn;
      for (int bt = 0; bt < 50; ++bt) {
        Eigen::VectorXd tilde_new = tilde + tau * tangent;
        tilde_new.head(k0).setZero();
        tilde_new.normalize();
        const Field u_new = synthesize(tilde_new);
        const double value_new = lr_norm(u_new);
        if (value_new >= value + 1e-6 * tau * tn * tn) {
          tilde = tilde_new;
          u = u_new;
          value = value_new;
          accepted = true;
          if (bt == 0) step = std::min(step * 1.5, 2.0);
          break;
        }
        tau *= 0.5;
        step *= 0.5;
      }
      if (!accepted) break;
    }
    best = std::max(best, value);
  }
  return best;
}

CeramiReport cerami_monitor(const std::vector<TraceRow>& trace) {
  if (trace.empty()) {
    throw PreconditionError("verify:EmptyTrace", "cerami monitor requires a nonempty trace");
  }
  CeramiReport report;
  for (const TraceRow& row : trace) {
    report.sup_norm1 = std::max(report.sup_norm1, row.norm1);
    report.lq_trajectory.push_back(row.lq);
  }
  const TraceRow& last = trace.back();
  report.final_scaled_residual = (1.0 + last.norm1) * last.residual;
  // Flag a collapsing |u|_{L^q} trajectory: final value tiny relative to peak.
  const double lq_peak =
      *std::max_element(report.lq_trajectory.begin(), report.lq_trajectory.end());
  report.lq_collapsing = last.lq < 1e-6 * std::max(lq_peak, 1.0);
  report.bounded = std::isfinite(report.sup_norm1);
  return report;
}

}  // namespace saddle

#include "saddle/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "saddle/errors.hpp"
#include "saddle/rng.hpp"
#include "saddle/verify.hpp"

namespace saddle {

namespace {

constexpr unsigned kEmbedSeed = 77001u;

// ||.||_1-orthonormal spectral coordinates ("tilde" frame): a field with
// M-coefficients c_i maps to c_i * sqrt(|lambda_i - lambda|), in which the
// ||.||_1 geometry is Euclidean.
struct TildeFrame {
  const SpectralData& spec;
  Eigen::VectorXd sqrt_w;

  explicit TildeFrame(const SpectralData& s)
      : spec(s), sqrt_w(s.norm1_weights.array().sqrt().matrix()) {}

  Eigen::VectorXd to_tilde(const Field& u) const {
    return (spec.coeff_map * u).cwiseProduct(sqrt_w);
  }
  Field from_tilde(const Eigen::VectorXd& t) const {
    return spec.eigenvectors * t.cwiseQuotient(sqrt_w);
  }
  // ||.||_1 gradient coordinates of an assembled dual form.
  Eigen::VectorXd grad_tilde(const Field& dual) const {
    return (spec.eigenvectors.transpose() * dual).cwiseQuotient(sqrt_w);
  }
};

double lq_norm(const ProblemSpec& p, const Field& u) {
  return std::pow(lq_integral(p, u), 1.0 / p.q);
}

}  // namespace

double linking_radius(double one_minus_c1eps, double gamma, double C2) {
  if (one_minus_c1eps <= 0.0 || C2 <= 0.0 || gamma <= 2.0) {
    throw PreconditionError("minimax:BadConstants",
                            "linking radius requires 1 - C1*eps > 0, C2 > 0, gamma > 2");
  }
  return std::pow(one_minus_c1eps / (gamma * C2), 1.0 / (gamma - 2.0));
}

double radial_profile(double one_minus_c1eps, double gamma, double C2, double r) {
  return 0.5 * one_minus_c1eps * r * r - C2 * std::pow(r, gamma);
}

double Constants::f(double r) const {
  return radial_profile(1.0 - C1 * epsilon, gamma, C2, r);
}

double Constants::delta_E(double E) const {
  return q * (E_k_lambda - E) / (std::pow(S_q, q) * std::pow(r_k_lambda, q));
}

std::function<double(double)> default_embedding(const ProblemSpec& p, int restarts,
                                                unsigned seed) {
  return [&p, restarts, seed](double r) {
    return embedding_constant(p.spectral, p.mesh, r, restarts, Subspace::Wplus, seed);
  };
}

Constants estimate_constants(const ProblemSpec& p,
                             const std::function<double(double)>& embed) {
  const SpectralData& spec = p.spectral;
  if (spec.k >= spec.size()) {
    throw PreconditionError("minimax:NoGap",
                            "lambda lies above the last discrete eigenvalue; no W+ modes");
  }
  const double gap = spec.eigenvalues[spec.k] - p.lambda;

  Constants c;
  c.q = p.q;
  c.gamma = p.nl.gamma;
  c.C1 = 1.0 / gap;
  c.epsilon = 0.25 * gap;  // C1 * epsilon = 1/4

  double growth = 0.0;
  if (p.nl.growth_C) {
    growth = p.nl.growth_C(c.epsilon);
  } else {
    // Grid estimate of C(eps) = sup_s (G(x,s) - eps/2 s^2)_+ / |s|^gamma.
    for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      for (int i = 0; i < 400; ++i) {
        const double s = std::pow(10.0, -3.0 + 5.0 * i / 399.0);
        for (double ss : {s, -s}) {
          const double num = p.nl.G(x, ss) - 0.5 * c.epsilon * ss * ss;
          if (num > 0.0) growth = std::max(growth, num / std::pow(std::abs(ss), c.gamma));
        }
      }
    }
    growth = std::max(growth, 1e-12);
  }

  c.S_gamma = embed(c.gamma);
  c.S_q = embed(c.q);
  c.C2 = growth * std::pow(c.S_gamma, c.gamma);
  c.r_k_lambda = linking_radius(1.0 - c.C1 * c.epsilon, c.gamma, c.C2);
  c.E_k_lambda = c.f(c.r_k_lambda);
  return c;
}

LinkingFrame build_linking_frame(const SpectralData& spec, int k, double T,
                                 const FrameSamples& samples) {
  if (k != spec.k) {
    throw PreconditionError("minimax:FrameMismatch",
                            "frame splitting index " + std::to_string(k) +
                                " does not match the spectral splitting " +
                                std::to_string(spec.k));
  }
  if (k >= spec.size()) {
    throw PreconditionError("minimax:NoGap", "no W+ mode available for u_bar_plus");
  }
  LinkingFrame frame;
  frame.k = k;
  frame.T = T;
  frame.samples = samples;
  frame.u_bar_plus = spec.unit_mode(k);

  if (k >= 1) {
    Rng rng(samples.seed);
    frame.v_sphere.reserve(samples.v_count);
    for (int i = 0; i < samples.v_count; ++i) {
      if (i < 2 * k) {
        const int mode = i / 2;
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        frame.v_sphere.push_back(sign * spec.unit_mode(mode));
      } else {
        Eigen::VectorXd coeffs(k);
        for (int j = 0; j < k; ++j) coeffs[j] = rng.normal();
        const double norm = coeffs.norm();
        Field v = Field::Zero(spec.eigenvectors.rows());
        for (int j = 0; j < k; ++j) v += (coeffs[j] / norm) * spec.unit_mode(j);
        frame.v_sphere.push_back(std::move(v));
      }
    }
  }
  return frame;
}

LinkingValues sample_linking_values(const ProblemSpec& p, const LinkingFrame& frame,
                                    const Constants& consts, double E,
                                    const TruncationParams& tp) {
  const SpectralData& spec = p.spectral;
  LinkingValues out;
  std::ostringstream b_witness;

  auto value_at = [&](const Field& u) { return rayleigh_trunc(p, u, E, tp); };

  double b_c = -std::numeric_limits<double>::infinity();
  double b_d = -std::numeric_limits<double>::infinity();

  if (frame.k == 0) {
    // Degenerate boundary {0, T u_bar_plus}; report its supremum in both slots.
    const double origin = 0.0;
    const double far = value_at(frame.T * frame.u_bar_plus);
    b_d = std::max(origin, far);
    b_c = b_d;
    if (far > 0.0) b_witness << "endpoint t=T value=" << far;
  } else {
    const int tc = frame.samples.t_count;
    for (int vi = 0; vi < static_cast<int>(frame.v_sphere.size()); ++vi) {
      const Field& v = frame.v_sphere[vi];
      // Cap {0 < t < T, s = T}.
      for (int i = 1; i <= tc; ++i) {
        const double t = frame.T * i / (tc + 1.0);
        const double val = value_at(t * frame.u_bar_plus + frame.T * v);
        if (val > b_c) {
          b_c = val;
          if (val > 0.0) b_witness << "cap t=" << t << " v#" << vi << " value=" << val;
        }
      }
      // Walls {t in {0, T}, 0 <= s <= T}.
      const int sc = frame.samples.s_count;
      for (double t : {0.0, frame.T}) {
        for (int j = 0; j < sc; ++j) {
          const double s = frame.T * j / (sc - 1.0);
          Field u = t * frame.u_bar_plus + s * v;
          const double val = (t == 0.0 && j == 0) ? 0.0 : value_at(u);
          if (val > b_d) {
            b_d = val;
            if (val > 0.0) b_witness << "wall t=" << t << " s=" << s << " v#" << vi
                                     << " value=" << val;
          }
        }
      }
    }
  }
  out.b_c = b_c;
  out.b_d = b_d;
  out.b = std::max(b_c, b_d);

  // Sphere S^+_{r_k_lambda}: angle grid over the first two W+ modes, a few
  // higher axes, and random decaying high-mode directions.
  const double radius = consts.r_k_lambda;
  const int k = frame.k;
  const int n = spec.size();
  double a = std::numeric_limits<double>::infinity();
  std::ostringstream a_witness;
  auto probe = [&](const Field& direction, const char* tag, int idx) {
    const double val = value_at(radius * direction);
    if (val < a) {
      a = val;
      if (val <= 0.0) {
        a_witness.str("");
        a_witness << "sphere " << tag << " #" << idx << " value=" << val;
      }
    }
  };

  if (n - k >= 2) {
    for (int j = 0; j < frame.samples.sphere_angles; ++j) {
      const double theta = 2.0 * M_PI * j / frame.samples.sphere_angles;
      probe(std::cos(theta) * spec.unit_mode(k) + std::sin(theta) * spec.unit_mode(k + 1),
            "angle", j);
    }
  } else {
    probe(spec.unit_mode(k), "axis", 0);
    probe(-spec.unit_mode(k), "axis", 1);
  }
  for (int j = 2; j < std::min(8, n - k); ++j) {
    probe(spec.unit_mode(k + j), "axis", j);
    probe(-spec.unit_mode(k + j), "axis", -j);
  }
  Rng rng(frame.samples.seed + 1);
  const int top_mode = std::min(n, k + 16);
  for (int r = 0; r < frame.samples.sphere_randoms; ++r) {
    Eigen::VectorXd tilde = Eigen::VectorXd::Zero(n);
    for (int j = k; j < top_mode; ++j) tilde[j] = rng.normal() / (1.0 + (j - k));
    tilde /= tilde.norm();
    Field direction = Field::Zero(n);
    for (int j = k; j < top_mode; ++j) direction += tilde[j] * spec.unit_mode(j);
    probe(direction, "random", r);
  }
  out.a = a;

  out.ok = (out.b <= 0.0) && (out.a > 0.0);
  out.witness = out.b > 0.0 ? b_witness.str() : a_witness.str();
  return out;
}

LinkingValues verify_linking_values(const ProblemSpec& p, const LinkingFrame& frame,
                                    const Constants& consts, double E,
                                    const TruncationParams& tp) {
  LinkingValues values = sample_linking_values(p, frame, consts, E, tp);
  if (values.b > 0.0) {
    throw GeometryBroken("sampled sup over B0 is positive (b = " + std::to_string(values.b) +
                             "); increase T or decrease E",
                         values.witness);
  }
  if (values.a <= 0.0) {
    throw GeometryBroken("sampled inf over the sphere is not positive (a = " +
                             std::to_string(values.a) + "); decrease E below E_k_lambda",
                         values.witness);
  }
  return values;
}

PeakResult peak_selection(const ProblemSpec& p, const LinkingFrame& frame, const Field& v,
                          double E, const TruncationParams& tp,
                          const Eigen::VectorXd* warm, const PeakOptions& opts) {
  const SpectralData& spec = p.spectral;
  const int k = frame.k;
  const int dim = k + 1;
  const int n = spec.size();

  Eigen::MatrixXd basis(n, dim);
  basis.col(0) = v;
  for (int j = 0; j < k; ++j) basis.col(j + 1) = spec.unit_mode(j);

  auto value_of = [&](const Eigen::VectorXd& z) {
    return rayleigh_trunc(p, basis * z, E, tp);
  };
  auto grad_of = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    const Gradient g = grad_rayleigh_trunc(p, basis * z, E, tp);
    return basis.transpose() * g.dual;
  };

  // Start from the warm coordinates or the v-axis point, whichever is higher.
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
  z[0] = opts.init_t;
  double val = value_of(z);
  bool basin_switched = false;
  if (warm != nullptr && warm->size() == dim) {
    Eigen::VectorXd zw = *warm;
    zw[0] = std::max(zw[0], 0.0);
    const double vw = value_of(zw);
    if (vw > val) {
      z = zw;
      val = vw;
    } else {
      basin_switched = true;
    }
  }

  // BFGS ascent (minimize the negative) with projection t >= 0.
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd g = -grad_of(z);
  int it = 0;
  int stalled = 0;
  for (; it < opts.max_inner; ++it) {
    if (g.norm() <= opts.tol_inner * (1.0 + std::abs(val))) break;
    // Value increments at the roundoff floor: the maximizer is as sharp as
    // the arithmetic allows even if the gradient target was not met.
    if (stalled >= 2 && g.norm() <= 1e-4 * (1.0 + std::abs(val))) break;
    if (std::abs(val) > 1e15 || z.norm() > 1e9) {
      throw ConvergenceError("minimax:UnboundedAscent",
                             "subspace ascent diverged; superlinear decay assumption "
                             "appears violated at the sampled scales");
    }
    Eigen::VectorXd d = -(H * g);
    if (d.dot(g) >= 0.0) {
      H.setIdentity();
      d = -g;
    }
    const double slope = g.dot(d);  // negative
    double alpha = 1.0;
    Eigen::VectorXd z_new;
    double val_new = 0.0;
    bool accepted = false;
    bool clamped = false;
    for (int ls = 0; ls < 60; ++ls) {
      z_new = z + alpha * d;
      if (z_new[0] < 0.0) {
        z_new[0] = 0.0;
        clamped = true;
      }
      val_new = value_of(z_new);
      if (-val_new <= -val + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (g.norm() <= std::sqrt(opts.tol_inner) * (1.0 + std::abs(val))) break;
      throw ConvergenceError("minimax:MaxIterInner",
                             "subspace line search stalled before reaching tolerance");
    }
    Eigen::VectorXd g_new = -grad_of(z_new);
    const Eigen::VectorXd s = z_new - z;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (clamped || sy <= 1e-12 * s.norm() * y.norm()) {
      H.setIdentity();
    } else {
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(dim, dim);
      const Eigen::MatrixXd V = I - (s * y.transpose()) / sy;
      H = V * H * V.transpose() + (s * s.transpose()) / sy;
    }
    if (val_new - val <= 8e-15 * (1.0 + std::abs(val))) {
      ++stalled;
    } else {
      stalled = 0;
    }
    z = z_new;
    val = val_new;
    g = g_new;
  }
  if (it >= opts.max_inner) {
    throw ConvergenceError("minimax:MaxIterInner",
                           "subspace maximizer did not converge in " +
                               std::to_string(opts.max_inner) + " iterations");
  }

  PeakResult out;
  out.coords = z;
  out.u = basis * z;
  out.value = val;
  out.iterations = it;
  out.basin_switched = basin_switched;
  return out;
}

TruncationParams default_truncation(const Constants& consts, double E, double safety) {
  return TruncationParams{safety * std::min(consts.r_k_lambda, consts.rho_est(E))};
}

namespace {

void check_energy_window(double E, const Constants& consts) {
  if (!(E > 0.0 && E < consts.E_k_lambda)) {
    throw PreconditionError("minimax:EnergyOutOfRange",
                            "E must lie in (0, E_k_lambda) = (0, " +
                                std::to_string(consts.E_k_lambda) + "); got E = " +
                                std::to_string(E));
  }
}

// T-doubling policy: grow the frame until the sampled wall supremum is <= 0.
// The S^-_1 sample count is raised to cover at least the 2k axis directions.
LinkingFrame choose_frame(const ProblemSpec& p, const Constants& consts, double E,
                          const TruncationParams& tp, const SolveOptions& opts) {
  FrameSamples samples = opts.samples;
  samples.v_count = std::max(samples.v_count, 2 * p.spectral.k);
  double T = opts.T_initial_factor * consts.r_k_lambda;
  LinkingFrame frame = build_linking_frame(p.spectral, p.spectral.k, T, samples);
  for (int i = 0; i < opts.T_max_doublings; ++i) {
    const LinkingValues values = sample_linking_values(p, frame, consts, E, tp);
    if (values.b_d <= 0.0) return frame;
    T *= 2.0;
    frame = build_linking_frame(p.spectral, p.spectral.k, T, samples);
  }
  return frame;  // verify_linking_values reports the leftover defect
}

struct LmmState {
  Field u;
  double mu_raw = 0.0;
  int iterations = 0;
  std::vector<TraceRow> trace;
};

// Descend the composed map v -> R^E_rho(peak(v)) over the ||.||_1-unit
// sphere of W+ until the dual residual at the peak meets the tolerance.
LmmState lmm_descend(const ProblemSpec& p, double E, const TruncationParams& tp,
                     const LinkingFrame& frame, const Constants& consts,
                     const Eigen::VectorXd& v0_tilde, const Eigen::VectorXd* warm_coords,
                     const SolveOptions& opts) {
  const SpectralData& spec = p.spectral;
  const TildeFrame tilde(spec);
  const int k = spec.k;

  PeakOptions peak_opts;
  peak_opts.tol_inner = opts.tol_inner;
  peak_opts.max_inner = opts.max_inner;
  peak_opts.init_t = consts.r_k_lambda;

  Eigen::VectorXd vt = v0_tilde;
  Field v = tilde.from_tilde(vt);
  PeakResult peak = peak_selection(p, frame, v, E, tp,
                                   warm_coords != nullptr ? warm_coords : nullptr, peak_opts);

  LmmState state;
  double arc_step = 0.25;
  bool converged = false;

  int m = 0;
  for (; m < opts.max_outer; ++m) {
    const Gradient grad = grad_rayleigh_trunc(p, peak.u, E, tp);
    const double n1 = norm1(spec, peak.u).total;
    state.trace.push_back({peak.value, grad.dual_residual, n1, lq_norm(p, peak.u)});
    if (grad.dual_residual <= opts.tol_grad * (1.0 + n1)) {
      converged = true;
      break;
    }

    // Tangent projection of the ||.||_1 gradient at v.
    Eigen::VectorXd gt = tilde.grad_tilde(grad.dual);
    gt.head(k).setZero();
    Eigen::VectorXd tangent = gt - gt.dot(vt) * vt;
    const double tnorm = tangent.norm();
    if (tnorm <= 1e-15) {
      throw ConvergenceError("minimax:MaxIterOuter",
                             "tangent gradient vanished before reaching tolerance");
    }

    double tau = arc_step / tnorm;
    bool accepted = false;
    Eigen::VectorXd vt_best;
    PeakResult peak_best;
    double best_val = std::numeric_limits<double>::infinity();
    int bt = 0;
    for (; bt < opts.max_backtracks; ++bt) {
      Eigen::VectorXd vt_new = vt - tau * tangent;
      vt_new.head(k).setZero();
      vt_new.normalize();
      const Field v_new = tilde.from_tilde(vt_new);
      PeakResult trial;
      try {
        trial = peak_selection(p, frame, v_new, E, tp, &peak.coords, peak_opts);
      } catch (const ConvergenceError&) {
        tau *= opts.backtrack;
        continue;
      }
      if (trial.value < best_val) {
        best_val = trial.value;
        vt_best = vt_new;
        peak_best = trial;
      }
      if (trial.value <= peak.value - opts.armijo_c * tau * tnorm * tnorm) {
        accepted = true;
        vt = vt_new;
        peak = trial;
        break;
      }
      // Tail of the descent: the composed value is flat to roundoff while
      // the residual still contracts. Accept plateau steps that reduce it.
      if (trial.value <= peak.value + 1e-12 * (1.0 + std::abs(peak.value))) {
        const Gradient trial_grad = grad_rayleigh_trunc(p, trial.u, E, tp);
        if (trial_grad.dual_residual <= 0.9 * grad.dual_residual) {
          accepted = true;
          vt = vt_new;
          peak = trial;
          break;
        }
      }
      tau *= opts.backtrack;
    }
    if (accepted) {
      if (bt == 0) arc_step = std::min(arc_step * 1.5, 1.0);
      else arc_step = std::max(arc_step * std::pow(opts.backtrack, bt), 1e-8);
    } else if (best_val < peak.value) {
      vt = vt_best;
      peak = peak_best;
      arc_step = std::max(arc_step * 0.25, 1e-8);
    } else {
      throw ConvergenceError("minimax:MaxIterOuter",
                             "composed-value line search stalled at value " +
                                 std::to_string(peak.value));
    }
  }
  if (!converged) {
    throw ConvergenceError("minimax:MaxIterOuter",
                           "local minimax loop did not reach tolerance in " +
                               std::to_string(opts.max_outer) + " iterations");
  }

  state.u = peak.u;
  state.mu_raw = rayleigh(p, peak.u, E);
  state.iterations = m;
  return state;
}

SaddleResult finalize_result(const ProblemSpec& p, double E, const TruncationParams& tp,
                             const SolveOptions& opts, LmmState&& state) {
  const RefineResult refined = newton_refine(p, state.u, state.mu_raw, E);

  SaddleResult result;
  result.u = refined.u;
  result.mu = refined.mu;
  result.E_target = E;
  result.E_achieved = energy(p, refined.u, refined.mu);
  result.dual_residual = dual_norm(p, energy_form(p, refined.u, refined.mu));
  result.norm1 = norm1(p.spectral, refined.u).total;
  result.iterations = state.iterations;
  result.trace = std::move(state.trace);
  // Final row: the refined state.
  const Gradient refined_grad = grad_rayleigh_trunc(p, refined.u, E, tp);
  result.trace.push_back({rayleigh_trunc(p, refined.u, E, tp), refined_grad.dual_residual,
                          result.norm1, lq_norm(p, refined.u)});

  const double lqn = lq_norm(p, refined.u);
  if (lqn < opts.lq_collapse_tol) {
    throw ConvergenceError("minimax:CollapseToZero",
                           "|u|_{L^q} = " + std::to_string(lqn) +
                               " collapsed; the level cannot be positive there");
  }
  result.converged = result.dual_residual <= opts.tol_grad * (1.0 + result.norm1) &&
                     std::abs(result.E_achieved - E) <= opts.tol_E && result.mu > 0.0 &&
                     result.norm1 > tp.rho;
  return result;
}

}  // namespace

SaddleResult solve_saddle(const ProblemSpec& p, double E, std::optional<TruncationParams> tp_in,
                          const SolveOptions& opts, SolveDiagnostics* diag) {
  const SpectralData& spec = p.spectral;
  const Constants consts = opts.constants != nullptr
                               ? *opts.constants
                               : estimate_constants(p, default_embedding(p, opts.embed_restarts,
                                                                         kEmbedSeed));
  check_energy_window(E, consts);
  const TruncationParams tp = tp_in.value_or(default_truncation(consts, E, opts.rho_safety));
  if (!(tp.rho > 0.0 && tp.rho < std::min(consts.r_k_lambda, consts.rho_est(E)))) {
    throw PreconditionError("minimax:BadRho",
                            "truncation radius must lie in (0, min(r_k_lambda, sqrt(2E)))");
  }

  const LinkingFrame frame =
      opts.frame != nullptr ? *opts.frame : choose_frame(p, consts, E, tp, opts);
  const LinkingValues linking = verify_linking_values(p, frame, consts, E, tp);
  if (diag != nullptr) {
    diag->constants = consts;
    diag->tp = tp;
    diag->frame = frame;
    diag->linking = linking;
  }

  const TildeFrame tilde(spec);
  const int k = spec.k;
  const int n = spec.size();

  // Multi-start directions on the W+ unit sphere.
  std::vector<Eigen::VectorXd> starts;
  std::optional<Eigen::VectorXd> warm_coords;
  if (opts.warm_start != nullptr) {
    Eigen::VectorXd wt = tilde.to_tilde(*opts.warm_start);
    Eigen::VectorXd coords(k + 1);
    coords[0] = wt.tail(n - k).norm();
    for (int j = 0; j < k; ++j) coords[j + 1] = wt[j];
    if (coords[0] > 0.0) {
      Eigen::VectorXd v0 = wt;
      v0.head(k).setZero();
      v0.normalize();
      starts.push_back(v0);
      warm_coords = coords;
    }
  }
  {
    Rng rng(opts.seed);
    int produced = 0;
    auto unit_axis = [&](int mode) {
      Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
      t[mode] = 1.0;
      return t;
    };
    while (static_cast<int>(starts.size()) < std::max(1, opts.multi_start)) {
      Eigen::VectorXd candidate;
      switch (produced) {
        case 0:
          candidate = unit_axis(k);
          break;
        case 1:
          candidate = (n - k >= 2) ? ((unit_axis(k) + unit_axis(k + 1)) / std::sqrt(2.0)).eval()
                                   : unit_axis(k);
          break;
        case 2:
          candidate = (n - k >= 2) ? unit_axis(k + 1) : unit_axis(k);
          break;
        default: {
          candidate = Eigen::VectorXd::Zero(n);
          const int top = std::min(n, k + 8);
          for (int j = k; j < top; ++j) candidate[j] = rng.normal() / (1.0 + (j - k));
          candidate.normalize();
          break;
        }
      }
      ++produced;
      starts.push_back(candidate);
    }
  }

  std::vector<SaddleResult> results;
  std::string last_error;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    try {
      const Eigen::VectorXd* warm =
          (i == 0 && warm_coords.has_value()) ? &warm_coords.value() : nullptr;
      LmmState state = lmm_descend(p, E, tp, frame, consts, starts[i], warm, opts);
      results.push_back(finalize_result(p, E, tp, opts, std::move(state)));
    } catch (const ConvergenceError& err) {
      last_error = err.what();
    }
  }
  if (results.empty()) {
    throw ConvergenceError("minimax:MaxIterOuter",
                           "all starts failed; last error: " + last_error);
  }
  // Merge: lowest dual residual, ties by highest level.
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    const SaddleResult& a = results[i];
    const SaddleResult& b = results[best];
    if (a.dual_residual < b.dual_residual ||
        (a.dual_residual == b.dual_residual && a.mu > b.mu)) {
      best = i;
    }
  }
  return std::move(results[best]);
}

RefineResult newton_refine(const ProblemSpec& p, const Field& u0, double mu0, double E,
                           int max_iter) {
  const int n = p.mesh.n;
  const double q = p.q;
  const double eps_reg = 1e-10;

  Field u = u0;
  double mu = mu0;

  auto assemble = [&](const Field& uu, double mm, Field& F, double& c) {
    F = energy_form(p, uu, mm);
    c = energy(p, uu, mm) - E;
  };

  Field F;
  double c = 0.0;
  assemble(u, mu, F, c);
  auto res_norm = [](const Field& F_, double c_) {
    return std::sqrt(F_.squaredNorm() + c_ * c_);
  };
  double rn = res_norm(F, c);

  int it = 0;
  for (; it < max_iter; ++it) {
    const double tiny = 1e-14 * (1.0 + std::abs(E) + u.norm() / p.mesh.h);
    if (rn <= tiny) break;

    // Jacobian of [DE_mu(u); E_mu(u) - E] in (u, mu); the |u|^{q-2} factor is
    // regularized here only, the residual stays exact.
    const Eigen::MatrixXd Dq = assemble_bilinear(
        p.mesh, u, [q, eps_reg](double, double s) {
          return (q - 1.0) * std::pow(s * s + eps_reg * eps_reg, 0.5 * (q - 2.0));
        });
    const Eigen::MatrixXd Dg =
        assemble_bilinear(p.mesh, u, [&p](double x, double s) { return p.nl.dg_ds(x, s); });
    const Field bq = lq_form(p, u);
    const double Qq = lq_integral(p, u);

    Eigen::MatrixXd J(n + 1, n + 1);
    J.topLeftCorner(n, n) = p.K - p.lambda * p.M - mu * Dq - Dg;
    J.topRightCorner(n, 1) = -bq;
    J.bottomLeftCorner(1, n) = F.transpose();
    J(n, n) = -Qq / q;

    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -F;
    rhs[n] = -c;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) {
      throw ConvergenceError("minimax:SingularJacobian",
                             "extended-system Jacobian is singular");
    }
    const Eigen::VectorXd delta = lu.solve(rhs);

    double alpha = 1.0;
    bool accepted = false;
    Field u_new;
    double mu_new = 0.0, c_new = 0.0, rn_new = 0.0;
    Field F_new;
    for (int ls = 0; ls < 40; ++ls) {
      u_new = u + alpha * delta.head(n);
      mu_new = mu + alpha * delta[n];
      assemble(u_new, mu_new, F_new, c_new);
      rn_new = res_norm(F_new, c_new);
      if (rn_new <= (1.0 - 1e-4 * alpha) * rn) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (rn <= 1e-9 * (1.0 + std::abs(E) + u.norm() / p.mesh.h)) break;
      throw ConvergenceError("minimax:NoProgress",
                             "Newton line search made no progress at residual " +
                                 std::to_string(rn));
    }
    u = u_new;
    mu = mu_new;
    F = F_new;
    c = c_new;
    rn = rn_new;
  }

  RefineResult out;
  out.u = u;
  out.mu = mu;
  out.iterations = it;
  out.dual_residual = dual_norm(p, F);
  out.energy_defect = std::abs(c);
  return out;
}

SaddleResult solve_mountain_pass_path(const ProblemSpec& p, double E,
                                      std::optional<TruncationParams> tp_in,
                                      const SolveOptions& opts, SolveDiagnostics* diag) {
  const SpectralData& spec = p.spectral;
  if (spec.k != 0) {
    throw PreconditionError("minimax:RequiresDefinite",
                            "mountain-pass path algorithm requires lambda < lambda_1");
  }
  const Constants consts = opts.constants != nullptr
                               ? *opts.constants
                               : estimate_constants(p, default_embedding(p, opts.embed_restarts,
                                                                         kEmbedSeed));
  check_energy_window(E, consts);
  const TruncationParams tp = tp_in.value_or(default_truncation(consts, E, opts.rho_safety));
  if (!(tp.rho > 0.0 && tp.rho < std::min(consts.r_k_lambda, consts.rho_est(E)))) {
    throw PreconditionError("minimax:BadRho",
                            "truncation radius must lie in (0, min(r_k_lambda, sqrt(2E)))");
  }

  const TildeFrame tilde(spec);
  const Field u_bar = spec.unit_mode(0);

  // Endpoint with negative quotient, found by doubling along u_bar.
  double t = 2.0 * consts.r_k_lambda;
  int doublings = 0;
  while (rayleigh(p, t * u_bar, E) >= 0.0) {
    t *= 2.0;
    if (++doublings > 48) {
      throw ConvergenceError("minimax:EndpointNotFound",
                             "no negative quotient found along the mountain direction");
    }
  }
  const Field endpoint = t * u_bar;

  if (diag != nullptr) {
    diag->constants = consts;
    diag->tp = tp;
    diag->frame = build_linking_frame(spec, 0, t, opts.samples);
    diag->linking = sample_linking_values(p, diag->frame, consts, E, tp);
  }

  const int P = std::max(5, opts.path_points);
  std::vector<Field> path(P);
  for (int j = 0; j < P; ++j) path[j] = (static_cast<double>(j) / (P - 1)) * endpoint;

  auto respline = [&](std::vector<Field>& pts) {
    std::vector<double> cum(P, 0.0);
    for (int j = 1; j < P; ++j) {
      cum[j] = cum[j - 1] + norm1(spec, pts[j] - pts[j - 1]).total;
    }
    if (cum[P - 1] <= 0.0) return;
    std::vector<Field> fresh(P);
    fresh[0] = pts[0];
    fresh[P - 1] = pts[P - 1];
    int seg = 1;
    for (int i = 1; i < P - 1; ++i) {
      const double target = cum[P - 1] * i / (P - 1);
      while (seg < P - 1 && cum[seg] < target) ++seg;
      const double span = cum[seg] - cum[seg - 1];
      const double w = span > 0.0 ? (target - cum[seg - 1]) / span : 0.0;
      fresh[i] = (1.0 - w) * pts[seg - 1] + w * pts[seg];
    }
    pts = std::move(fresh);
  };

  std::vector<TraceRow> trace;
  bool converged = false;
  Field u;
  int iter = 0;
  double arc_step = 0.5;

  auto value_at = [&](const Field& z) { return rayleigh_trunc(p, z, E, tp); };

  for (; iter < opts.max_path_iter; ++iter) {
    int j_max = 1;
    double val_max = -std::numeric_limits<double>::infinity();
    for (int j = 1; j < P - 1; ++j) {
      const double val = value_at(path[j]);
      if (val > val_max) {
        val_max = val;
        j_max = j;
      }
    }

    // The crest of the continuous polyline can sit between grid points;
    // ternary-refine the two segments adjacent to the discrete maximum.
    Field crest = path[j_max];
    double crest_val = val_max;
    for (int side = 0; side < 2; ++side) {
      const Field& a = side == 0 ? path[j_max - 1] : path[j_max];
      const Field& b = side == 0 ? path[j_max] : path[j_max + 1];
      double lo = 0.0, hi = 1.0;
      for (int r = 0; r < 40; ++r) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (value_at(a + m1 * (b - a)) < value_at(a + m2 * (b - a))) {
          lo = m1;
        } else {
          hi = m2;
        }
      }
      const Field candidate = a + 0.5 * (lo + hi) * (b - a);
      const double cv = value_at(candidate);
      if (cv > crest_val) {
        crest_val = cv;
        crest = candidate;
      }
    }
    u = crest;
    val_max = crest_val;

    const Gradient grad = grad_rayleigh_trunc(p, u, E, tp);
    const double n1 = norm1(spec, u).total;
    trace.push_back({val_max, grad.dual_residual, n1, lq_norm(p, u)});
    if (val_max > 0.0 && grad.dual_residual <= opts.tol_grad * (1.0 + n1)) {
      converged = true;
      break;
    }

    // Relax the crest with a few monotone descent steps.
    Field z = u;
    double val = val_max;
    for (int inner = 0; inner < 5; ++inner) {
      const Gradient gz = grad_rayleigh_trunc(p, z, E, tp);
      const Eigen::VectorXd gt = tilde.grad_tilde(gz.dual);
      const double gn = gt.norm();
      if (gn <= 1e-15) break;
      const Field d = tilde.from_tilde(gt);
      double tau = arc_step / gn;
      bool accepted = false;
      for (int bt = 0; bt < opts.max_backtracks; ++bt) {
        const Field z_new = z - tau * d;
        const double val_new = value_at(z_new);
        if (val_new <= val - opts.armijo_c * tau * gn * gn) {
          z = z_new;
          val = val_new;
          accepted = true;
          if (bt == 0) arc_step = std::min(arc_step * 1.25, 2.0);
          else arc_step = std::max(arc_step * std::pow(opts.backtrack, bt), 1e-8);
          break;
        }
        if (val_new <= val + 1e-12 * (1.0 + std::abs(val))) {
          // Residual descent on the value plateau near the saddle.
          const Gradient trial_grad = grad_rayleigh_trunc(p, z_new, E, tp);
          if (trial_grad.dual_residual <= 0.9 * gz.dual_residual) {
            z = z_new;
            val = val_new;
            accepted = true;
            break;
          }
        }
        tau *= opts.backtrack;
      }
      if (!accepted) break;
    }
    path[j_max] = z;
    // Redistributing every step blends the relaxed point back into the
    // chord and destroys the accumulated descent; respline sparsely.
    if (opts.respline_every > 0 && (iter + 1) % opts.respline_every == 0) {
      respline(path);
    }
  }
  if (!converged) {
    throw ConvergenceError("minimax:MaxIter",
                           "mountain-pass path did not reach tolerance in " +
                               std::to_string(opts.max_path_iter) + " iterations");
  }

  LmmState state;
  state.u = u;
  state.mu_raw = rayleigh(p, u, E);
  state.iterations = iter;
  state.trace = std::move(trace);
  return finalize_result(p, E, tp, opts, std::move(state));
}

}  // namespace saddle

#include "saddle/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "saddle/errors.hpp"

namespace saddle {

namespace {

constexpr double kMonotoneTol = 1e-6;

bool monotone_nonincreasing(const std::vector<SweepRow>& rows) {
  const SweepRow* prev = nullptr;
  for (const SweepRow& row : rows) {  // ascending E
    if (!row.converged) continue;
    if (prev != nullptr && row.mu > prev->mu + kMonotoneTol) return false;
    prev = &row;
  }
  return true;
}

}  // namespace

SweepResult sweep_energy(const ProblemSpec& p, const std::vector<double>& E_list,
                         const SolveOptions& opts) {
  if (E_list.empty()) {
    throw PreconditionError("continuation:EmptySweep", "energy list is empty");
  }
  if (!std::is_sorted(E_list.begin(), E_list.end())) {
    throw PreconditionError("continuation:UnsortedSweep", "energy list must be ascending");
  }

  const Constants consts =
      opts.constants != nullptr
          ? *opts.constants
          : estimate_constants(p, default_embedding(p, opts.embed_restarts));
  for (double E : E_list) {
    if (!(E > 0.0 && E < consts.E_k_lambda)) {
      throw PreconditionError("continuation:EnergyOutOfRange",
                              "sweep energies must lie in (0, E_k_lambda) = (0, " +
                                  std::to_string(consts.E_k_lambda) + "); got E = " +
                                  std::to_string(E));
    }
  }

  // The truncation radius and the linking frame are fixed across the sweep;
  // both are chosen admissible for the smallest (most restrictive) energy.
  const double E_min = E_list.front();
  const TruncationParams tp = default_truncation(consts, E_min, opts.rho_safety);

  SolveOptions row_opts = opts;
  row_opts.constants = &consts;

  LinkingFrame frame = [&] {
    FrameSamples samples = opts.samples;
    samples.v_count = std::max(samples.v_count, 2 * p.spectral.k);
    double T = opts.T_initial_factor * consts.r_k_lambda;
    LinkingFrame f = build_linking_frame(p.spectral, p.spectral.k, T, samples);
    for (int i = 0; i < opts.T_max_doublings; ++i) {
      if (sample_linking_values(p, f, consts, E_min, tp).b_d <= 0.0) break;
      T *= 2.0;
      f = build_linking_frame(p.spectral, p.spectral.k, T, samples);
    }
    return f;
  }();
  row_opts.frame = &frame;

  SweepResult result;
  result.rows.resize(E_list.size());

  Field warm;
  bool have_warm = opts.warm_start != nullptr;
  if (have_warm) warm = *opts.warm_start;

  int converged_count = 0;
  for (int i = static_cast<int>(E_list.size()) - 1; i >= 0; --i) {
    const double E = E_list[i];
    SweepRow row;
    row.E = E;
    try {
      SolveOptions one = row_opts;
      if (have_warm) one.warm_start = &warm;
      const SaddleResult solved = solve_saddle(p, E, tp, one);
      row.mu = solved.mu;
      row.dual_residual = solved.dual_residual;
      row.converged = solved.converged;
      row.iterations = solved.iterations;
      if (solved.converged) {
        warm = solved.u;
        have_warm = true;
        ++converged_count;
      }
    } catch (const SaddleError&) {
      row.mu = std::numeric_limits<double>::quiet_NaN();
      row.dual_residual = std::numeric_limits<double>::quiet_NaN();
      row.converged = false;
    }
    result.rows[i] = row;
  }

  if (converged_count == 0) {
    throw ConvergenceError("continuation:AllFailed", "no sweep row converged");
  }
  result.monotone = monotone_nonincreasing(result.rows);
  return result;
}

ZeroEnergyResult zero_energy_limit(const ProblemSpec& p, const ZeroEnergyOptions& opts) {
  if (p.spectral.k != 0) {
    throw PreconditionError("continuation:RequiresDefinite",
                            "zero-energy limit requires lambda < lambda_1");
  }

  const Constants consts =
      opts.solve.constants != nullptr
          ? *opts.solve.constants
          : estimate_constants(p, default_embedding(p, opts.solve.embed_restarts));
  if (!(opts.E_start > 0.0 && opts.E_start < consts.E_k_lambda)) {
    throw PreconditionError("continuation:EnergyOutOfRange",
                            "E_start must lie in (0, E_k_lambda) = (0, " +
                                std::to_string(consts.E_k_lambda) + ")");
  }

  // Fixed truncation radius and linking frame, admissible for every rung
  // E_m >= E_start * 2^{-M} (the smallest energy is the most restrictive).
  const double E_last = opts.E_start * std::pow(2.0, -opts.max_halvings);
  const TruncationParams tp = default_truncation(consts, E_last, opts.solve.rho_safety);

  SolveOptions solve_opts = opts.solve;
  solve_opts.constants = &consts;

  LinkingFrame frame = [&] {
    FrameSamples samples = solve_opts.samples;
    samples.v_count = std::max(samples.v_count, 2 * p.spectral.k);
    double T = solve_opts.T_initial_factor * consts.r_k_lambda;
    LinkingFrame f = build_linking_frame(p.spectral, p.spectral.k, T, samples);
    for (int i = 0; i < solve_opts.T_max_doublings; ++i) {
      if (sample_linking_values(p, f, consts, E_last, tp).b_d <= 0.0) break;
      T *= 2.0;
      f = build_linking_frame(p.spectral, p.spectral.k, T, samples);
    }
    return f;
  }();
  solve_opts.frame = &frame;

  ZeroEnergyResult out;
  Field prev_u;
  double prev_mu = 0.0;
  bool have_prev = false;

  for (int m = 0; m <= opts.max_halvings; ++m) {
    const double E = opts.E_start * std::pow(2.0, -m);
    SolveOptions one = solve_opts;
    if (have_prev) one.warm_start = &prev_u;
    const SaddleResult solved = solve_saddle(p, E, tp, one);

    SweepRow row;
    row.E = E;
    row.mu = solved.mu;
    row.dual_residual = solved.dual_residual;
    row.converged = solved.converged;
    row.iterations = solved.iterations;
    out.ladder.rows.push_back(row);

    if (have_prev) {
      out.field_diffs.push_back(norm1(p.spectral, solved.u - prev_u).total);
      const double dmu = std::abs(solved.mu - prev_mu);
      if (dmu <= opts.tol_mu && out.field_diffs.back() <= opts.tol_field) {
        prev_u = solved.u;
        prev_mu = solved.mu;
        out.cauchy = true;
        break;
      }
    }
    prev_u = solved.u;
    prev_mu = solved.mu;
    have_prev = true;
  }
  if (!out.cauchy) {
    throw ConvergenceError("continuation:NotCauchy",
                           "mu(E_m) and u_m did not become Cauchy within " +
                               std::to_string(opts.max_halvings) + " halvings");
  }

  // Ladder rows were pushed in descending E; publish ascending.
  std::reverse(out.ladder.rows.begin(), out.ladder.rows.end());
  std::reverse(out.field_diffs.begin(), out.field_diffs.end());
  out.ladder.monotone = monotone_nonincreasing(out.ladder.rows);

  // Refine the last iterate against the untruncated zero-energy system.
  const RefineResult refined = newton_refine(p, prev_u, prev_mu, 0.0);
  SaddleResult zero;
  zero.u = refined.u;
  zero.mu = refined.mu;
  zero.E_target = 0.0;
  zero.E_achieved = energy(p, refined.u, refined.mu);
  zero.dual_residual = dual_norm(p, energy_form(p, refined.u, refined.mu));
  zero.norm1 = norm1(p.spectral, refined.u).total;
  zero.iterations = refined.iterations;
  zero.converged = std::abs(zero.E_achieved) <= 1e-6 && zero.mu > 0.0 &&
                   zero.norm1 > 0.0 &&
                   zero.dual_residual <= solve_opts.tol_grad * (1.0 + zero.norm1);
  out.final = zero;
  out.ladder.mu_bar_0 = refined.mu;
  return out;
}

}  // namespace saddle

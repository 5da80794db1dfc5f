#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "saddle/errors.hpp"
#include "saddle/minimax.hpp"
#include "saddle/verify.hpp"

using namespace saddle;

namespace {

ProblemSpec& mountain_problem() {
  static ProblemSpec p = [] {
    const double lambda = 0.5 * oracle::discrete_eigenvalue(200, 1);
    return make_problem(build_mesh(200, 3), lambda, 1.5, pure_power(4.0, 1.0));
  }();
  return p;
}

ProblemSpec& linking_problem() {
  static ProblemSpec p = [] {
    const double l1 = oracle::discrete_eigenvalue(200, 1);
    const double l2 = oracle::discrete_eigenvalue(200, 2);
    return make_problem(build_mesh(200, 3), l1 + 0.5 * (l2 - l1), 1.5, pure_power(4.0, 1.0));
  }();
  return p;
}

const Constants& mountain_constants() {
  static Constants c = estimate_constants(mountain_problem(), default_embedding(mountain_problem()));
  return c;
}

const Constants& linking_constants() {
  static Constants c = estimate_constants(linking_problem(), default_embedding(linking_problem()));
  return c;
}

struct SolvedCase {
  SaddleResult result;
  SolveDiagnostics diag;
};

const SolvedCase& mountain_solution() {
  static SolvedCase s = [] {
    SolvedCase out;
    SolveOptions opts;
    out.result = solve_saddle(mountain_problem(), 0.01, std::nullopt, opts, &out.diag);
    return out;
  }();
  return s;
}

const SolvedCase& linking_solution() {
  static SolvedCase s = [] {
    SolvedCase out;
    SolveOptions opts;
    const double E = 0.2 * linking_constants().E_k_lambda;
    out.result = solve_saddle(linking_problem(), E, std::nullopt, opts, &out.diag);
    return out;
  }();
  return s;
}

}  // namespace

TEST_CASE("closed-form linking radius matches the 1-D scan maximizer") {
  const double r = linking_radius(0.75, 4.0, 0.25);
  const double scanned = oracle::scan_maximizer(
      [](double x) { return radial_profile(0.75, 4.0, 0.25, x); }, 1e-6, 3.0);
  CHECK(std::abs(r - scanned) <= 1e-9);
  CHECK(std::abs(r - 0.8660254037844386) <= 1e-12);
  const double peak = radial_profile(0.75, 4.0, 0.25, r);
  CHECK(std::abs(peak - 0.140625) <= 1e-9);
  // Global maximum on the scan range.
  for (int i = 1; i <= 300; ++i) {
    CHECK(peak >= radial_profile(0.75, 4.0, 0.25, 0.01 * i) - 1e-12);
  }
}

TEST_CASE("estimated constants satisfy their defining relations") {
  const ProblemSpec& p = mountain_problem();
  const Constants& c = mountain_constants();
  const double gap = p.spectral.eigenvalues[0] - p.lambda;
  CHECK(c.C1 == doctest::Approx(1.0 / gap).epsilon(1e-12));
  CHECK(c.C1 * c.epsilon == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(c.C2 == doctest::Approx((1.0 / 4.0) * std::pow(c.S_gamma, 4.0)).epsilon(1e-12));
  CHECK(c.r_k_lambda == doctest::Approx(linking_radius(0.75, 4.0, c.C2)).epsilon(1e-12));
  CHECK(c.E_k_lambda == doctest::Approx(c.f(c.r_k_lambda)).epsilon(1e-12));
  CHECK(c.E_k_lambda > 0.0);
  CHECK(c.delta_E(0.5 * c.E_k_lambda) > 0.0);
  CHECK(c.rho_est(0.02) == doctest::Approx(std::sqrt(0.04)).epsilon(1e-15));
}

TEST_CASE("growth bound holds on W+ samples with the computed constants") {
  const ProblemSpec& p = mountain_problem();
  const Constants& c = mountain_constants();
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const Field u = oracle::smooth_field(p.mesh, 900 + seed, 2.0);
    const double lhs = g_integral(p, u);
    const double n1 = norm1(p.spectral, u).total;
    const double rhs =
        0.5 * c.epsilon * c.C1 * n1 * n1 + c.C2 * std::pow(n1, p.nl.gamma);
    CHECK(lhs <= rhs * (1.0 + 1e-2));  // embedding constants are ascent estimates
  }
}

TEST_CASE("no W+ mode above lambda is rejected") {
  const Mesh mesh = build_mesh(6, 3);
  const Eigen::MatrixXd K = stiffness(mesh);
  const Eigen::MatrixXd M = mass(mesh);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
  const double above = es.eigenvalues()[5] + 10.0;
  const ProblemSpec p = make_problem(mesh, above, 1.5, pure_power(4.0, 1.0));
  CHECK_THROWS_AS(estimate_constants(p, default_embedding(p)), PreconditionError);
}

TEST_CASE("linking frame construction") {
  const ProblemSpec& p1 = linking_problem();
  const double T = 4.0 * linking_constants().r_k_lambda;

  SUBCASE("k = 1 sphere is the two-point set") {
    const LinkingFrame frame = build_linking_frame(p1.spectral, 1, T);
    REQUIRE(frame.v_sphere.size() == 2);
    const Field expected = p1.spectral.unit_mode(0);
    CHECK((frame.v_sphere[0] - expected).norm() < 1e-12);
    CHECK((frame.v_sphere[1] + expected).norm() < 1e-12);
    CHECK(norm1(p1.spectral, frame.u_bar_plus).total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm1(p1.spectral, frame.u_bar_plus).minus < 1e-12);
  }
  SUBCASE("sample counts are honored exactly") {
    FrameSamples samples;
    samples.v_count = 5;
    const LinkingFrame frame = build_linking_frame(p1.spectral, 1, T, samples);
    CHECK(frame.v_sphere.size() == 5);
    for (const Field& v : frame.v_sphere) {
      CHECK(norm1(p1.spectral, v).total == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(norm1(p1.spectral, v).plus == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
  SUBCASE("k = 0 has no negative directions") {
    const ProblemSpec& p0 = mountain_problem();
    const LinkingFrame frame = build_linking_frame(p0.spectral, 0, T);
    CHECK(frame.v_sphere.empty());
  }
  SUBCASE("mismatched splitting index is rejected") {
    CHECK_THROWS_AS(build_linking_frame(p1.spectral, 0, T), PreconditionError);
  }
}

TEST_CASE("linking values: signs, sphere bound, and T-doubling decay") {
  const ProblemSpec& p = linking_problem();
  const Constants& c = linking_constants();
  const double E = 0.2 * c.E_k_lambda;
  const TruncationParams tp = default_truncation(c, E);

  // The cap supremum is nonpositive for any T and any rho.
  for (double factor : {1.5, 4.0, 16.0}) {
    const LinkingFrame frame = build_linking_frame(p.spectral, 1, factor * c.r_k_lambda);
    for (double rho_scale : {0.2, 0.9}) {
      const TruncationParams tp_probe{rho_scale * std::min(c.r_k_lambda, c.rho_est(E))};
      const LinkingValues values = sample_linking_values(p, frame, c, E, tp_probe);
      CHECK(values.b_c <= 0.0);
    }
  }

  // Sphere infimum respects the delta_E lower bound (up to the estimate slack).
  const LinkingFrame frame = build_linking_frame(p.spectral, 1, 4.0 * c.r_k_lambda);
  const LinkingValues values = sample_linking_values(p, frame, c, E, tp);
  CHECK(values.a > 0.0);
  CHECK(values.a >= 0.95 * c.delta_E(E));

  // Doubling T does not increase the wall supremum once it is nonpositive.
  const LinkingValues doubled = sample_linking_values(
      p, build_linking_frame(p.spectral, 1, 8.0 * c.r_k_lambda), c, E, tp);
  CHECK(doubled.b_d <= values.b_d + 1e-12);

  CHECK(values.ok);
  CHECK_NOTHROW(verify_linking_values(p, frame, c, E, tp));
}

TEST_CASE("peak selection: ray case matches the scan oracle") {
  const ProblemSpec& p = mountain_problem();
  const Constants& c = mountain_constants();
  const double E = 0.01;
  const TruncationParams tp = default_truncation(c, E);
  const LinkingFrame frame = build_linking_frame(p.spectral, 0, 4.0 * c.r_k_lambda);
  const Field v = p.spectral.unit_mode(0);

  PeakOptions opts;
  opts.init_t = c.r_k_lambda;
  const PeakResult peak = peak_selection(p, frame, v, E, tp, nullptr, opts);

  const double t_scan = oracle::scan_maximizer(
      [&](double t) { return rayleigh_trunc(p, Field(t * v), E, tp); }, 1e-3,
      4.0 * c.r_k_lambda, 20000);
  const double val_scan = rayleigh_trunc(p, Field(t_scan * v), E, tp);
  CHECK(peak.value >= val_scan - 1e-8 * (1.0 + std::abs(val_scan)));
  CHECK(peak.coords[0] == doctest::Approx(t_scan).epsilon(1e-4));

  // Ascent returns at least the warm-start value.
  Eigen::VectorXd warm(1);
  warm[0] = 0.4 * c.r_k_lambda;
  const double warm_value = rayleigh_trunc(p, Field(warm[0] * v), E, tp);
  const PeakResult warmed = peak_selection(p, frame, v, E, tp, &warm, opts);
  CHECK(warmed.value >= warm_value - 1e-12);
}

TEST_CASE("peak selection: 2-D case beats the grid oracle and exceeds a") {
  const ProblemSpec& p = linking_problem();
  const Constants& c = linking_constants();
  const double E = 0.2 * c.E_k_lambda;
  const TruncationParams tp = default_truncation(c, E);
  const double T = 4.0 * c.r_k_lambda;
  const LinkingFrame frame = build_linking_frame(p.spectral, 1, T);
  const Field v = frame.u_bar_plus;
  const Field w = p.spectral.unit_mode(0);

  PeakOptions opts;
  opts.init_t = c.r_k_lambda;
  const PeakResult peak = peak_selection(p, frame, v, E, tp, nullptr, opts);

  double grid_max = -1e300;
  for (int i = 0; i <= 100; ++i) {
    for (int j = -100; j <= 100; ++j) {
      const Field u = (T * i / 100.0) * v + (T * j / 100.0) * w;
      grid_max = std::max(grid_max, rayleigh_trunc(p, u, E, tp));
    }
  }
  CHECK(peak.value >= grid_max - 1e-6 * (1.0 + std::abs(grid_max)));

  const LinkingValues values = sample_linking_values(p, frame, c, E, tp);
  CHECK(peak.value >= values.a);
  CHECK(values.a > 0.0);
}

TEST_CASE("mountain case: saddle solve at E = 0.01") {
  const ProblemSpec& p = mountain_problem();
  const SolvedCase& solved = mountain_solution();
  const SaddleResult& r = solved.result;

  CHECK(r.converged);
  CHECK(r.mu > 0.0);
  CHECK(std::abs(r.E_achieved - 0.01) <= 1e-8);
  CHECK(r.dual_residual <= 1e-6 * (1.0 + r.norm1));
  CHECK(r.norm1 > solved.diag.tp.rho);

  // Regression baseline at n = 200 (not ground truth; the mesh limit is
  // 3.3750647, confirmed by an independent collocation solve).
  CHECK(r.mu == doctest::Approx(3.3751513305).epsilon(1e-8));

  // Equivalence at the computed point.
  CHECK(std::abs(rayleigh(p, r.u, 0.01) - r.mu) <= 1e-8 * (1.0 + std::abs(r.mu)));
  CHECK(std::abs(energy(p, r.u, r.mu) - 0.01) <= 1e-8);

  // Truncation is inert at the solution.
  CHECK(rayleigh_trunc(p, r.u, 0.01, solved.diag.tp) ==
        doctest::Approx(rayleigh(p, r.u, 0.01)).epsilon(1e-14));

  // Equivalence both ways: the energy critical point is a quotient critical
  // point and vice versa.
  CHECK(grad_energy(p, r.u, r.mu).dual_residual <= 1e-10);
  CHECK(grad_rayleigh(p, r.u, 0.01).dual_residual <= 1e-10);

  // Minimax ordering: the level sits above the sampled sphere infimum.
  CHECK(r.mu >= solved.diag.linking.a - 1e-6);

  // Composed value is nonincreasing along the LMM iterates.
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    CHECK(r.trace[i].value <= r.trace[i - 1].value + 1e-9);
  }
}

TEST_CASE("linking case: saddle solve converges with indefinite part") {
  const ProblemSpec& p = linking_problem();
  const SolvedCase& solved = linking_solution();
  const SaddleResult& r = solved.result;
  const double E = r.E_target;

  CHECK(r.converged);
  CHECK(r.mu > 0.0);
  CHECK(std::abs(r.E_achieved - E) <= 1e-8);
  CHECK(std::abs(rayleigh(p, r.u, E) - r.mu) <= 1e-8 * (1.0 + std::abs(r.mu)));
  CHECK(r.mu >= solved.diag.linking.a - 1e-6);
  CHECK(r.norm1 > solved.diag.tp.rho);

  // The split components and the indefinite quadratic form are reportable.
  const auto [plus, minus] = split(p.spectral, r.u);
  const double h_plus = h_lambda(p.K, p.M, p.lambda, plus);
  const double h_minus = h_lambda(p.K, p.M, p.lambda, minus);
  CHECK(h_plus >= 0.0);
  CHECK(h_minus <= 1e-12);
}

TEST_CASE("newton refinement: fixed point and basin convergence") {
  const ProblemSpec& p = mountain_problem();
  const SaddleResult& r = mountain_solution().result;

  // Already-converged input: zero Newton steps, returned unchanged.
  const RefineResult again = newton_refine(p, r.u, r.mu, 0.01);
  CHECK(again.iterations == 0);
  CHECK((again.u - r.u).norm() == 0.0);
  CHECK(again.mu == r.mu);

  // A deliberately perturbed start converges back in a few iterations.
  Field u0 = r.u;
  for (int i = 0; i < u0.size(); i += 7) u0[i] *= 1.0 + 1e-3;
  const RefineResult refined = newton_refine(p, u0, r.mu * (1.0 + 1e-3), 0.01);
  CHECK(refined.iterations <= 10);
  CHECK(refined.dual_residual <= 1e-10);
  CHECK(refined.energy_defect <= 1e-10);
  CHECK(std::abs(refined.mu - r.mu) <= 1e-6 * (1.0 + std::abs(r.mu)));
}

TEST_CASE("mountain-pass path agrees with the minimax solve") {
  const ProblemSpec& p = mountain_problem();
  const SaddleResult& lmm = mountain_solution().result;

  SolveDiagnostics diag;
  SolveOptions opts;
  const SaddleResult mpa = solve_mountain_pass_path(p, 0.01, std::nullopt, opts, &diag);
  CHECK(mpa.converged);
  CHECK(std::abs(mpa.mu - lmm.mu) <= 1e-4 * (1.0 + std::abs(lmm.mu)));

  // Endpoint has negative quotient (T is the accepted endpoint amplitude).
  CHECK(rayleigh(p, Field(diag.frame.T * p.spectral.unit_mode(0)), 0.01) < 0.0);

  // The initial path already crosses the positivity sphere.
  CHECK(mpa.trace.front().value >= diag.linking.a - 1e-9);

  // Rejected on an indefinite problem.
  CHECK_THROWS_AS(
      solve_mountain_pass_path(linking_problem(), 0.05, std::nullopt, SolveOptions{}),
      PreconditionError);
}

TEST_CASE("two-dimensional negative subspace (k = 2)") {
  const double l2 = oracle::discrete_eigenvalue(200, 2);
  const double l3 = oracle::discrete_eigenvalue(200, 3);
  const ProblemSpec p =
      make_problem(build_mesh(200, 3), 0.5 * (l2 + l3), 1.5, pure_power(4.0, 1.0));
  REQUIRE(p.spectral.k == 2);
  const Constants c = estimate_constants(p, default_embedding(p));
  SolveDiagnostics diag;
  const SaddleResult r = solve_saddle(p, 0.2 * c.E_k_lambda, std::nullopt, SolveOptions{},
                                      &diag);
  CHECK(r.converged);
  CHECK(r.mu >= diag.linking.a - 1e-6);
  CHECK(diag.linking.b <= 0.0);
  CHECK(diag.frame.v_sphere.size() >= 4);  // the four W- axis directions
  CHECK(std::abs(rayleigh(p, r.u, r.E_target) - r.mu) <= 1e-8 * (1.0 + std::abs(r.mu)));
}

TEST_CASE("broken geometry is reported with a witness") {
  const ProblemSpec& p = linking_problem();
  const Constants& c = linking_constants();
  const LinkingFrame frame = build_linking_frame(p.spectral, 1, 4.0 * c.r_k_lambda);
  // Beyond the admissible energy window the sphere infimum turns negative.
  const double E_bad = 2.0 * c.E_k_lambda;
  const TruncationParams tp{0.5 * c.r_k_lambda};
  const LinkingValues values = sample_linking_values(p, frame, c, E_bad, tp);
  CHECK(values.a <= 0.0);
  CHECK_FALSE(values.ok);
  try {
    verify_linking_values(p, frame, c, E_bad, tp);
    FAIL("expected GeometryBroken");
  } catch (const GeometryBroken& err) {
    CHECK(!err.witness().empty());
  }
}

TEST_CASE("warm starts keep their basin and report switches") {
  const ProblemSpec& p = mountain_problem();
  const Constants& c = mountain_constants();
  const TruncationParams tp = default_truncation(c, 0.01);
  const LinkingFrame frame = build_linking_frame(p.spectral, 0, 4.0 * c.r_k_lambda);
  PeakOptions opts;
  opts.init_t = c.r_k_lambda;

  // A warm start in the attraction basin is kept.
  Eigen::VectorXd warm(1);
  warm[0] = 2.5;
  const PeakResult kept =
      peak_selection(p, frame, p.spectral.unit_mode(0), 0.01, tp, &warm, opts);
  CHECK_FALSE(kept.basin_switched);

  // A warm start with a hopeless value is abandoned for the axis start.
  warm[0] = 1e-4;
  const PeakResult switched =
      peak_selection(p, frame, p.spectral.unit_mode(0), 0.01, tp, &warm, opts);
  CHECK(switched.basin_switched);
  CHECK(switched.value == doctest::Approx(kept.value).epsilon(1e-10));
}

TEST_CASE("energy window preconditions name the computed bound") {
  const ProblemSpec& p = mountain_problem();
  const Constants& c = mountain_constants();
  try {
    solve_saddle(p, 2.0 * c.E_k_lambda, std::nullopt, SolveOptions{});
    FAIL("expected PreconditionError");
  } catch (const PreconditionError& err) {
    CHECK(std::string(err.what()).find("E_k_lambda") != std::string::npos);
  }
  CHECK_THROWS_AS(solve_saddle(p, -0.5, std::nullopt, SolveOptions{}), PreconditionError);
}

TEST_CASE("cerami quantities along the converged trace") {
  const SaddleResult& r = mountain_solution().result;
  REQUIRE(!r.trace.empty());
  const TraceRow& last = r.trace.back();
  CHECK((1.0 + last.norm1) * last.residual <= 1e-6 * (1.0 + last.norm1) * (1.0 + last.norm1));
  double sup = 0.0;
  for (const TraceRow& row : r.trace) sup = std::max(sup, row.norm1);
  CHECK(std::isfinite(sup));
  CHECK(last.lq > 0.0);
}

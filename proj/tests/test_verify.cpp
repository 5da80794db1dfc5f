#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "saddle/errors.hpp"
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

const Constants& constants() {
  static Constants c =
      estimate_constants(mountain_problem(), default_embedding(mountain_problem()));
  return c;
}

// Hierarchical grid search over the first `dim` spectral coordinates for
// sup |u|_{L^r} / ||u||_1: coarse boxes shrinking around the best point.
double grid_embedding_oracle(const ProblemSpec& p, double r, int dim) {
  const SpectralData& spec = p.spectral;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
  center[0] = 1.0;
  double width = 1.0;
  double best = 0.0;
  Eigen::VectorXd best_c = center;

  const auto ratio = [&](const Eigen::VectorXd& c) {
    Field u = Field::Zero(spec.size());
    double norm1_sq = 0.0;
    for (int i = 0; i < dim; ++i) {
      u += c[i] * Field(spec.eigenvectors.col(i));
      norm1_sq += spec.norm1_weights[i] * c[i] * c[i];
    }
    if (norm1_sq <= 1e-14) return 0.0;
    const double lr = std::pow(
        integrate(p.mesh, u, [r](double, double s) { return std::pow(std::abs(s), r); }),
        1.0 / r);
    return lr / std::sqrt(norm1_sq);
  };

  for (int level = 0; level < 10; ++level) {
    Eigen::VectorXd c = center;
    const int steps = 5;
    std::vector<int> idx(dim, 0);
    while (true) {
      for (int i = 0; i < dim; ++i) {
        c[i] = center[i] + width * (idx[i] - steps / 2) / (steps / 2);
      }
      const double value = ratio(c);
      if (value > best) {
        best = value;
        best_c = c;
      }
      int d = 0;
      while (d < dim && ++idx[d] == steps) idx[d++] = 0;
      if (d == dim) break;
    }
    center = best_c;
    width *= 0.5;
  }
  return best;
}

}  // namespace

TEST_CASE("fd_gradient_check on the energy functional") {
  const ProblemSpec& p = mountain_problem();
  FunctionalSelector sel;
  sel.kind = FunctionalKind::Energy;
  sel.mu = 0.8;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Field u = oracle::smooth_field(p.mesh, 50 + seed);
    const Field v = oracle::smooth_field(p.mesh, 150 + seed);
    CHECK(fd_gradient_check(p, sel, u, v, 1e-5) <= 1e-6);
  }
  // Zero direction: both sides vanish.
  CHECK(fd_gradient_check(p, sel, oracle::smooth_field(p.mesh, 3), Field::Zero(200), 1e-5) ==
        0.0);
}

TEST_CASE("fd_gradient_check on the truncated quotient in the band") {
  const ProblemSpec& p = mountain_problem();
  FunctionalSelector sel;
  sel.kind = FunctionalKind::RayleighTruncated;
  sel.E = 0.01;
  sel.tp = TruncationParams{1.0};
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const Field raw = oracle::smooth_field(p.mesh, 250 + seed);
    const Field u = (0.75 / norm1(p.spectral, raw).total) * raw;  // inside the band
    const Field v = oracle::smooth_field(p.mesh, 350 + seed);
    CHECK(fd_gradient_check(p, sel, u, v, 1e-5) <= 1e-5);
  }
}

TEST_CASE("fibering profile along the mountain direction") {
  const ProblemSpec& p = mountain_problem();
  const Field u_bar = p.spectral.unit_mode(0);
  const double E = 0.01;

  SUBCASE("tail dives below -100 at t = 100") {
    const FiberingProfile profile =
        fibering_profile(p, u_bar, Field::Zero(200), E, {100.0});
    CHECK(profile.values[0] <= -100.0);
  }
  SUBCASE("negative near the origin, positive peak in between") {
    std::vector<double> grid;
    for (int i = 1; i <= 120; ++i) grid.push_back(0.05 * i);
    const FiberingProfile profile = fibering_profile(p, u_bar, Field::Zero(200), E, grid);
    CHECK(profile.values.front() < 0.0);  // ||0.05 u_bar||_1 = 0.05 < sqrt(2E)
    CHECK(profile.peak_value > 0.0);
    CHECK(profile.values.back() < 0.0);
    CHECK(profile.peak_t > grid.front());
    CHECK(profile.peak_t < grid.back());
  }
  SUBCASE("vanishing points are skipped with a flag") {
    const Field e1 = p.spectral.eigenvectors.col(0);
    const FiberingProfile profile = fibering_profile(p, e1, Field(-e1), E, {0.5, 1.0, 2.0});
    CHECK_FALSE(profile.skipped[0]);
    CHECK(profile.skipped[1]);  // t*u + v == 0
    CHECK_FALSE(profile.skipped[2]);
  }
  CHECK_THROWS_AS(fibering_profile(p, Field::Zero(200), Field::Zero(200), E, {1.0}),
                  PreconditionError);
}

TEST_CASE("small-ball negativity") {
  const ProblemSpec& p = mountain_problem();
  const double E = 0.01;
  const double guaranteed = std::sqrt(2.0 * E);

  const BallProbe probe = small_ball_negativity(p, E, 0.9 * guaranteed, 1000);
  CHECK(probe.worst < 0.0);

  // Shrinking the ball drives the quotient to -infinity like -qE/|u|_q^q.
  const BallProbe tiny = small_ball_negativity(p, E, 1e-3, 200);
  CHECK(tiny.worst < probe.worst);
  CHECK(tiny.worst < -10.0);

  CHECK_THROWS_AS(small_ball_negativity(p, 0.0, 0.1, 10), PreconditionError);
}

TEST_CASE("embedding constant: spectral value at r = 2") {
  const ProblemSpec& p = mountain_problem();
  const double expected = 1.0 / std::sqrt(p.spectral.eigenvalues[0] - p.lambda);
  const double estimate = embedding_constant(p.spectral, p.mesh, 2.0, 4, Subspace::All);
  CHECK(std::abs(estimate - expected) <= 1e-6 * expected);
}

TEST_CASE("embedding constant: nondecreasing in restarts") {
  const ProblemSpec& p = mountain_problem();
  double prev = 0.0;
  for (int restarts : {1, 2, 4, 8}) {
    const double value = embedding_constant(p.spectral, p.mesh, 4.0, restarts, Subspace::All);
    CHECK(value >= prev - 1e-15);
    prev = value;
  }
}

TEST_CASE("embedding constant: r = 4 matches the low-dimensional grid oracle") {
  const ProblemSpec& p = mountain_problem();
  const double estimate = embedding_constant(p.spectral, p.mesh, 4.0, 8, Subspace::All);
  const double reference = grid_embedding_oracle(p, 4.0, 6);
  CHECK(std::abs(estimate - reference) <= 1e-3 * reference);
}

TEST_CASE("cerami monitor") {
  CHECK_THROWS_AS(cerami_monitor({}), PreconditionError);

  SolveDiagnostics diag;
  SolveOptions opts;
  const SaddleResult result = solve_saddle(mountain_problem(), 0.01, std::nullopt, opts, &diag);
  const CeramiReport report = cerami_monitor(result.trace);
  CHECK(report.final_scaled_residual <= 1e-6);
  CHECK(report.bounded);
  CHECK(report.sup_norm1 > 0.0);
  CHECK_FALSE(report.lq_collapsing);
  CHECK(report.lq_trajectory.size() == result.trace.size());
}

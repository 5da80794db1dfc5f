#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "saddle/functionals.hpp"

namespace saddle {

// Constants of the sphere-positivity estimate. With C1 the discrete L^2
// embedding constant on W+ and epsilon chosen so C1*epsilon < 1, the radial
// profile f(r) = 1/2 (1 - C1 eps) r^2 - C2 r^gamma has a positive global
// maximum E_k_lambda at r_k_lambda; the quotient is positive on the sphere
// S^+_{r_k_lambda} for every energy E below E_k_lambda.
struct Constants {
  double epsilon = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double r_k_lambda = 0.0;
  double E_k_lambda = 0.0;
  double S_q = 0.0;      // L^q embedding constant over W+ (in ||.||_1)
  double S_gamma = 0.0;  // L^gamma embedding constant over W+
  double q = 0.0;
  double gamma = 0.0;

  double f(double r) const;
  // Lower bound for the quotient on S^+_{r_k_lambda} at energy E.
  double delta_E(double E) const;
  // Radius of guaranteed negativity of R^E near the origin.
  double rho_est(double E) const { return std::sqrt(2.0 * E); }
};

// Closed-form maximizer of f and its value.
double linking_radius(double one_minus_c1eps, double gamma, double C2);
double radial_profile(double one_minus_c1eps, double gamma, double C2, double r);

// embed(r) must return the discrete embedding constant sup |w|_{L^r}/||w||_1
// over W+. Throws NoGap when lambda lies above the last eigenvalue.
Constants estimate_constants(const ProblemSpec& p,
                             const std::function<double(double)>& embed);

struct FrameSamples {
  int t_count = 17;         // interior t-grid on the cap {s = T}
  int s_count = 17;         // s-grid on the walls {t in {0,T}}
  int v_count = 2;          // S^-_1 direction samples
  int sphere_angles = 180;  // S^+ sphere: angle grid in the first two W+ modes
  int sphere_randoms = 64;  // S^+ sphere: random higher-mode directions
  unsigned seed = 24001u;
};

// Sampled realization of the linking boundary B0 (cap B0^c and walls B0^d)
// spanned by u = t u_bar_plus + s v over directions v in S^-_1.
struct LinkingFrame {
  int k = 0;
  Field u_bar_plus;  // ||.||_1-unit vector in W+
  double T = 0.0;
  FrameSamples samples;
  std::vector<Field> v_sphere;  // empty when k = 0
};

LinkingFrame build_linking_frame(const SpectralData& spec, int k, double T,
                                 const FrameSamples& samples = {});

struct LinkingValues {
  double b_c = 0.0;  // sup of R^E_rho over the cap B0^c
  double b_d = 0.0;  // sup over the walls B0^d
  double b = 0.0;    // sup over B0
  double a = 0.0;    // inf over the sphere S^+_{r_k_lambda}
  bool ok = false;   // b <= 0 < a
  std::string witness;
};

// Sampled linking estimates; never throws on broken geometry.
LinkingValues sample_linking_values(const ProblemSpec& p, const LinkingFrame& frame,
                                    const Constants& consts, double E,
                                    const TruncationParams& tp);

// As above but throws GeometryBroken when b > 0 or a <= 0.
LinkingValues verify_linking_values(const ProblemSpec& p, const LinkingFrame& frame,
                                    const Constants& consts, double E,
                                    const TruncationParams& tp);

struct PeakOptions {
  double tol_inner = 1e-9;
  int max_inner = 200;
  double init_t = 1.0;  // default start t on the v-axis (no warm start)
};

struct PeakResult {
  Field u;
  Eigen::VectorXd coords;  // [t, s_1 .. s_k] in the (v, e-bar) basis
  double value = 0.0;
  int iterations = 0;
  // The default axis start beat the warm start: a second local maximum.
  bool basin_switched = false;
};

// Maximizer of R^E_rho over span{e_1,...,e_k, v} with the v-coefficient
// kept nonnegative. v must be a ||.||_1-unit vector in W+.
PeakResult peak_selection(const ProblemSpec& p, const LinkingFrame& frame, const Field& v,
                          double E, const TruncationParams& tp,
                          const Eigen::VectorXd* warm = nullptr,
                          const PeakOptions& opts = {});

struct TraceRow {
  double value = 0.0;
  double residual = 0.0;
  double norm1 = 0.0;
  double lq = 0.0;  // |u|_{L^q}
};

struct SaddleResult {
  Field u;
  double mu = 0.0;
  double E_target = 0.0;
  double E_achieved = 0.0;
  double dual_residual = 0.0;
  double norm1 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceRow> trace;
};

struct SolveOptions {
  double tol_grad = 1e-6;  // scaled by (1 + ||u||_1)
  double tol_E = 1e-8;
  double tol_inner = 1e-9;
  int max_outer = 600;
  int max_inner = 200;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  double T_initial_factor = 4.0;
  int T_max_doublings = 10;
  double rho_safety = 0.5;
  int multi_start = 1;
  unsigned seed = 1u;
  FrameSamples samples;
  int path_points = 41;          // mountain-pass path resolution
  int max_path_iter = 4000;      // mountain-pass descent iterations
  int respline_every = 25;       // path redistribution cadence
  double lq_collapse_tol = 1e-8;
  int embed_restarts = 8;

  // Continuation hooks: reuse precomputed data and warm-start fields.
  const Constants* constants = nullptr;
  const LinkingFrame* frame = nullptr;
  const Field* warm_start = nullptr;
};

// Diagnostics of a solve: the derived constants, the truncation radius and
// frame actually used, and the sampled linking values.
struct SolveDiagnostics {
  Constants constants;
  TruncationParams tp;
  LinkingFrame frame;
  LinkingValues linking;
};

TruncationParams default_truncation(const Constants& consts, double E, double safety = 0.5);

// Local minimax solve of the linking characterization: descend the composed
// map v -> R^E_rho(peak(v)) over the ||.||_1-unit sphere of W+, then enforce
// the prescribed-energy system exactly by Newton refinement.
SaddleResult solve_saddle(const ProblemSpec& p, double E,
                          std::optional<TruncationParams> tp, const SolveOptions& opts = {},
                          SolveDiagnostics* diag = nullptr);

struct RefineResult {
  Field u;
  double mu = 0.0;
  int iterations = 0;
  double dual_residual = 0.0;
  double energy_defect = 0.0;
};

// Newton solve of the extended system [DE_mu(u) = 0, E_mu(u) = E] in (u, mu).
RefineResult newton_refine(const ProblemSpec& p, const Field& u0, double mu0, double E,
                           int max_iter = 30);

// Path-based mountain-pass cross-check for k = 0: descend the maximum of a
// piecewise-linear path from 0 to an endpoint with negative quotient.
SaddleResult solve_mountain_pass_path(const ProblemSpec& p, double E,
                                      std::optional<TruncationParams> tp,
                                      const SolveOptions& opts = {},
                                      SolveDiagnostics* diag = nullptr);

// Default embedding-constant provider over W+ (projected-ascent estimate).
std::function<double(double)> default_embedding(const ProblemSpec& p, int restarts = 8,
                                                unsigned seed = 77001u);

}  // namespace saddle

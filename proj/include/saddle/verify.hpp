#pragma once

#include <vector>

#include "saddle/minimax.hpp"

namespace saddle {

enum class FunctionalKind { Energy, Rayleigh, RayleighTruncated };

struct FunctionalSelector {
  FunctionalKind kind = FunctionalKind::Energy;
  double mu = 0.0;           // Energy
  double E = 0.0;            // Rayleigh / RayleighTruncated
  TruncationParams tp{1.0};  // RayleighTruncated
};

// |analytic directional derivative - central difference| / (|analytic| + 1e-12).
double fd_gradient_check(const ProblemSpec& p, const FunctionalSelector& sel, const Field& u,
                         const Field& v, double h);

struct FiberingProfile {
  std::vector<double> t_grid;
  std::vector<double> values;
  std::vector<bool> skipped;  // grid points where t*u + v vanishes identically
  double peak_t = 0.0;
  double peak_value = 0.0;
};

// Samples t -> R^E(t*u + v).
FiberingProfile fibering_profile(const ProblemSpec& p, const Field& u, const Field& v,
                                 double E, const std::vector<double>& t_grid);

struct BallProbe {
  double worst = 0.0;  // max of R^E over the sampled ball
  Field witness;
};

// Max of R^E over random nonzero fields with ||u||_1 <= rho_probe; a negative
// value is guaranteed whenever rho_probe <= sqrt(2E) and E > 0.
BallProbe small_ball_negativity(const ProblemSpec& p, double E, double rho_probe,
                                int samples, unsigned seed = 4242u);

enum class Subspace { All, Wplus };

// Discrete embedding constant sup |u|_{L^r} / ||u||_1, estimated by projected
// gradient ascent with multi-start; the result is a lower bound.
double embedding_constant(const SpectralData& spec, const Mesh& mesh, double r, int restarts,
                          Subspace subspace, unsigned seed = 77001u);

struct CeramiReport {
  double sup_norm1 = 0.0;
  double final_scaled_residual = 0.0;  // (1 + ||u||_1) * dual residual
  std::vector<double> lq_trajectory;
  bool lq_collapsing = false;  // |u_m|_{L^q} trending to 0
  bool bounded = true;
};

CeramiReport cerami_monitor(const std::vector<TraceRow>& trace);

}  // namespace saddle

#pragma once

#include <optional>
#include <vector>

#include "saddle/minimax.hpp"

namespace saddle {

struct SweepRow {
  double E = 0.0;
  double mu = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ascending in E
  bool monotone = false;       // mu nonincreasing across converged rows
  std::optional<double> mu_bar_0;
};

// Per-energy solves over an ascending E list, warm-started from high E down
// to low E so warm starts follow the nondecreasing-mu direction. Row
// failures are recorded, not fatal.
SweepResult sweep_energy(const ProblemSpec& p, const std::vector<double>& E_list,
                         const SolveOptions& opts = {});

struct ZeroEnergyOptions {
  double E_start = 0.01;
  int max_halvings = 12;
  double tol_mu = 1e-4;
  double tol_field = 1e-3;
  SolveOptions solve;
};

struct ZeroEnergyResult {
  SaddleResult final;        // Newton-refined against E = 0
  SweepResult ladder;        // rows at E_m = E_start * 2^{-m}; mu_bar_0 set
  std::vector<double> field_diffs;  // ||u_m - u_{m-1}||_1
  bool cauchy = false;
};

// Zero-energy limit for lambda < lambda_1: solve at E_m = E_start * 2^{-m}
// warm-started, stop when mu and the fields are Cauchy, then refine the last
// iterate against the untruncated system at E = 0.
ZeroEnergyResult zero_energy_limit(const ProblemSpec& p, const ZeroEnergyOptions& opts = {});

}  // namespace saddle

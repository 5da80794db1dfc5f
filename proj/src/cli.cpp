#include "saddle/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "saddle/continuation.hpp"
#include "saddle/errors.hpp"
#include "saddle/rng.hpp"
#include "saddle/verify.hpp"

namespace saddle {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

// 17 significant digits, locale-independent.
std::string format17(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

struct RunConfig {
  // problem block
  std::string lambda_spec = "frac:0.5";  // abs:<v> | frac:<f> | gap:<k>:<theta>
  double lambda = 0.0;                   // resolved
  double q = 1.5;
  double gamma = 4.0;
  double c = 1.0;
  std::string nonlinearity = "pure_power";
  int n = 200;
  int quad_order = 3;

  // solver block
  std::string algo = "lmm";
  double tol_grad = 1e-6;
  double tol_E = 1e-8;
  double tol_inner = 1e-9;
  int max_outer = 600;
  int max_inner = 200;
  int max_path_iter = 4000;
  int multi_start = 1;
  unsigned seed = 1;
  double T_factor = 4.0;
  int T_doublings = 10;
  double rho_safety = 0.5;
  int path_points = 41;
  int respline_every = 25;
  int embed_restarts = 8;

  // task block
  double E = 0.01;
  std::vector<double> E_list;
  double E_min = 0.001;
  double E_max = 0.0;  // 0: computed as 0.8 E_k_lambda
  int E_count = 8;
  double E_start = 0.01;
  int max_halvings = 12;
  double tol_mu = 1e-4;
  double tol_field = 1e-3;
  double r = 4.0;
  int restarts = 8;
  std::string subspace = "wplus";
  double fd_step = 1e-5;
  int fd_count = 20;
  double t_min = 0.05;
  double t_max = 100.0;
  int t_count = 200;

  int k_check = -1;  // expected splitting index; -1 disables the check
  std::string out_dir;
};

json config_echo(const RunConfig& c) {
  json j;
  j["problem"] = {{"lambda", c.lambda},       {"lambda_spec", c.lambda_spec},
                  {"q", c.q},                 {"gamma", c.gamma},
                  {"c", c.c},                 {"nonlinearity", c.nonlinearity},
                  {"n", c.n},                 {"quad_order", c.quad_order},
                  {"k_check", c.k_check}};
  j["solver"] = {{"algo", c.algo},
                 {"tol_grad", c.tol_grad},
                 {"tol_E", c.tol_E},
                 {"tol_inner", c.tol_inner},
                 {"max_outer", c.max_outer},
                 {"max_inner", c.max_inner},
                 {"max_path_iter", c.max_path_iter},
                 {"multi_start", c.multi_start},
                 {"seed", c.seed},
                 {"T_factor", c.T_factor},
                 {"T_doublings", c.T_doublings},
                 {"rho_safety", c.rho_safety},
                 {"path_points", c.path_points},
                 {"respline_every", c.respline_every},
                 {"embed_restarts", c.embed_restarts}};
  j["task"] = {{"E", c.E},
               {"E_list", c.E_list},
               {"E_min", c.E_min},
               {"E_max", c.E_max},
               {"E_count", c.E_count},
               {"E_start", c.E_start},
               {"max_halvings", c.max_halvings},
               {"tol_mu", c.tol_mu},
               {"tol_field", c.tol_field},
               {"r", c.r},
               {"restarts", c.restarts},
               {"subspace", c.subspace},
               {"fd_step", c.fd_step},
               {"fd_count", c.fd_count},
               {"t_min", c.t_min},
               {"t_max", c.t_max},
               {"t_count", c.t_count}};
  j["out"] = c.out_dir;
  j["versions"] = {{"saddle", kVersion}};
  return j;
}

// --config file: nested blocks with a fixed schema; unknown keys rejected,
// values override the command-line flags.
void apply_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw PreconditionError("cli:UnreadableConfig", "cannot read config file " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw PreconditionError("cli:BadConfig", std::string("config parse error: ") + e.what());
  }

  auto expect_object = [](const json& obj, const char* name) {
    if (!obj.is_object()) {
      throw PreconditionError("cli:BadConfig", std::string(name) + " must be an object");
    }
  };
  expect_object(j, "config");

  auto get = [](const json& obj, const char* key, auto& target) {
    if (obj.contains(key)) target = obj.at(key).get<std::decay_t<decltype(target)>>();
  };

  for (const auto& [block, body] : j.items()) {
    if (block == "problem") {
      expect_object(body, "problem");
      static const std::set<std::string> keys = {"lambda", "lambda_spec",  "q",
                                                 "gamma",  "c",            "nonlinearity",
                                                 "n",      "quad_order",   "k_check"};
      for (const auto& [k, v] : body.items()) {
        if (!keys.count(k)) {
          throw PreconditionError("cli:UnknownKey", "unknown config key problem." + k);
        }
      }
      if (body.contains("lambda")) {
        c.lambda_spec = "abs:" + format17(body.at("lambda").get<double>());
      }
      get(body, "lambda_spec", c.lambda_spec);
      get(body, "q", c.q);
      get(body, "gamma", c.gamma);
      get(body, "c", c.c);
      get(body, "nonlinearity", c.nonlinearity);
      get(body, "n", c.n);
      get(body, "quad_order", c.quad_order);
      get(body, "k_check", c.k_check);
    } else if (block == "solver") {
      expect_object(body, "solver");
      static const std::set<std::string> keys = {
          "algo",        "tol_grad",       "tol_E",         "tol_inner",
          "max_outer",   "max_inner",      "max_path_iter", "multi_start",
          "seed",        "T_factor",       "T_doublings",   "rho_safety",
          "path_points", "respline_every", "embed_restarts"};
      for (const auto& [k, v] : body.items()) {
        if (!keys.count(k)) {
          throw PreconditionError("cli:UnknownKey", "unknown config key solver." + k);
        }
      }
      get(body, "algo", c.algo);
      get(body, "tol_grad", c.tol_grad);
      get(body, "tol_E", c.tol_E);
      get(body, "tol_inner", c.tol_inner);
      get(body, "max_outer", c.max_outer);
      get(body, "max_inner", c.max_inner);
      get(body, "max_path_iter", c.max_path_iter);
      get(body, "multi_start", c.multi_start);
      get(body, "seed", c.seed);
      get(body, "T_factor", c.T_factor);
      get(body, "T_doublings", c.T_doublings);
      get(body, "rho_safety", c.rho_safety);
      get(body, "path_points", c.path_points);
      get(body, "respline_every", c.respline_every);
      get(body, "embed_restarts", c.embed_restarts);
    } else if (block == "task") {
      expect_object(body, "task");
      static const std::set<std::string> keys = {
          "E",      "E_list",      "E_min",    "E_max",     "E_count", "E_start",
          "max_halvings", "tol_mu", "tol_field", "r",       "restarts", "subspace",
          "fd_step", "fd_count",  "t_min",    "t_max",     "t_count"};
      for (const auto& [k, v] : body.items()) {
        if (!keys.count(k)) {
          throw PreconditionError("cli:UnknownKey", "unknown config key task." + k);
        }
      }
      get(body, "E", c.E);
      get(body, "E_list", c.E_list);
      get(body, "E_min", c.E_min);
      get(body, "E_max", c.E_max);
      get(body, "E_count", c.E_count);
      get(body, "E_start", c.E_start);
      get(body, "max_halvings", c.max_halvings);
      get(body, "tol_mu", c.tol_mu);
      get(body, "tol_field", c.tol_field);
      get(body, "r", c.r);
      get(body, "restarts", c.restarts);
      get(body, "subspace", c.subspace);
      get(body, "fd_step", c.fd_step);
      get(body, "fd_count", c.fd_count);
      get(body, "t_min", c.t_min);
      get(body, "t_max", c.t_max);
      get(body, "t_count", c.t_count);
    } else if (block == "out") {
      c.out_dir = body.get<std::string>();
    } else {
      throw PreconditionError("cli:UnknownKey", "unknown config block " + block);
    }
  }
}

void validate(const RunConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) {
      throw PreconditionError("cli:BadTolerance",
                              std::string(name) + " must be positive");
    }
  };
  positive(c.tol_grad, "tol_grad");
  positive(c.tol_E, "tol_E");
  positive(c.tol_inner, "tol_inner");
  positive(c.tol_mu, "tol_mu");
  positive(c.tol_field, "tol_field");
  positive(c.rho_safety, "rho_safety");
  positive(c.fd_step, "fd_step");
  if (c.algo != "lmm" && c.algo != "mpa") {
    throw PreconditionError("cli:BadAlgo", "algo must be lmm or mpa");
  }
  if (c.nonlinearity != "pure_power") {
    throw PreconditionError("cli:UnknownNonlinearity",
                            "registry nonlinearity must be pure_power (custom terms are a "
                            "library-level hook)");
  }
  if (c.subspace != "all" && c.subspace != "wplus") {
    throw PreconditionError("cli:BadSubspace", "subspace must be all or wplus");
  }
}

double resolve_lambda(const std::string& spec_string, const Eigen::VectorXd& eigenvalues) {
  const auto bad = [&]() {
    return PreconditionError("cli:BadLambdaSpec",
                             "lambda spec must be abs:<v>, frac:<f>, or gap:<k>:<theta>; got " +
                                 spec_string);
  };
  const auto parse_double = [&](const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw bad();
      return v;
    } catch (const std::logic_error&) {
      throw bad();
    }
  };
  if (spec_string.rfind("abs:", 0) == 0) {
    return parse_double(spec_string.substr(4));
  }
  if (spec_string.rfind("frac:", 0) == 0) {
    return parse_double(spec_string.substr(5)) * eigenvalues[0];
  }
  if (spec_string.rfind("gap:", 0) == 0) {
    const std::string rest = spec_string.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw bad();
    const int k = static_cast<int>(parse_double(rest.substr(0, colon)));
    const double theta = parse_double(rest.substr(colon + 1));
    if (k < 1 || k >= eigenvalues.size()) {
      throw PreconditionError("cli:BadLambdaSpec",
                              "gap index k must lie in [1, n-1]; got " + std::to_string(k));
    }
    return eigenvalues[k - 1] + theta * (eigenvalues[k] - eigenvalues[k - 1]);
  }
  // A bare number is a fraction of lambda_1.
  return parse_double(spec_string) * eigenvalues[0];
}

struct Workspace {
  RunConfig config;
  ProblemSpec problem;
  Eigen::VectorXd raw_eigenvalues;
};

Workspace build_workspace(RunConfig config) {
  validate(config);
  const Mesh mesh = build_mesh(config.n, config.quad_order);
  const Eigen::MatrixXd K = stiffness(mesh);
  const Eigen::MatrixXd M = mass(mesh);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::EigenvaluesOnly |
                                                                         Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) {
    throw NumericError("cli:EigFailed", "eigensolve for lambda resolution failed");
  }
  config.lambda = resolve_lambda(config.lambda_spec, es.eigenvalues());

  Workspace ws{std::move(config), {}, es.eigenvalues()};
  ws.problem = make_problem(mesh, ws.config.lambda, ws.config.q,
                            pure_power(ws.config.gamma, ws.config.c));
  if (ws.config.k_check >= 0 && ws.problem.spectral.k != ws.config.k_check) {
    throw PreconditionError("cli:SplittingMismatch",
                            "resolved lambda gives splitting index " +
                                std::to_string(ws.problem.spectral.k) + ", expected " +
                                std::to_string(ws.config.k_check));
  }
  return ws;
}

SolveOptions solve_options(const RunConfig& c) {
  SolveOptions opts;
  opts.tol_grad = c.tol_grad;
  opts.tol_E = c.tol_E;
  opts.tol_inner = c.tol_inner;
  opts.max_outer = c.max_outer;
  opts.max_inner = c.max_inner;
  opts.max_path_iter = c.max_path_iter;
  opts.multi_start = c.multi_start;
  opts.seed = c.seed;
  opts.T_initial_factor = c.T_factor;
  opts.T_max_doublings = c.T_doublings;
  opts.rho_safety = c.rho_safety;
  opts.path_points = c.path_points;
  opts.respline_every = c.respline_every;
  opts.embed_restarts = c.embed_restarts;
  return opts;
}

fs::path ensure_out_dir(const RunConfig& c) {
  fs::path dir = c.out_dir.empty() ? fs::path("out") : fs::path(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw PreconditionError("cli:Unwritable",
                            "cannot create output directory " + dir.string());
  }
  return dir;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw PreconditionError("cli:Unwritable", "cannot write " + path.string());
  }
  out << body;
}

std::string config_comment(const RunConfig& c) {
  return "# config: " + config_echo(c).dump() + "\n";
}

json saddle_result_json(const ProblemSpec& p, const SaddleResult& r) {
  json j;
  j["mu"] = r.mu;
  j["E_target"] = r.E_target;
  j["E_achieved"] = r.E_achieved;
  j["dual_residual"] = r.dual_residual;
  j["norm1"] = r.norm1;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["coefficients"] = std::vector<double>(r.u.begin(), r.u.end());
  json trace = json::array();
  for (const TraceRow& row : r.trace) {
    trace.push_back({{"value", row.value},
                     {"residual", row.residual},
                     {"norm1", row.norm1},
                     {"lq", row.lq}});
  }
  j["trace"] = trace;
  const auto [plus, minus] = split(p.spectral, r.u);
  j["h_lambda_plus"] = h_lambda(p.K, p.M, p.lambda, plus);
  j["h_lambda_minus"] = h_lambda(p.K, p.M, p.lambda, minus);
  return j;
}

std::string solution_csv(const ProblemSpec& p, const Field& u, const RunConfig& c) {
  std::ostringstream out;
  out << config_comment(c);
  out << "x,u\n";
  out << "0,0\n";
  for (int i = 0; i < p.mesh.n; ++i) {
    out << format17((i + 1) * p.mesh.h) << "," << format17(u[i]) << "\n";
  }
  out << "1,0\n";
  return out.str();
}

json constants_json(const Constants& consts, const RunConfig& c) {
  json j;
  j["C1"] = consts.C1;
  j["epsilon"] = consts.epsilon;
  j["C2"] = consts.C2;
  j["r_k_lambda"] = consts.r_k_lambda;
  j["E_k_lambda"] = consts.E_k_lambda;
  j["S_q"] = consts.S_q;
  j["S_gamma"] = consts.S_gamma;
  if (c.E > 0.0 && c.E < consts.E_k_lambda) {
    j["delta_E"] = consts.delta_E(c.E);
    j["rho_est"] = consts.rho_est(c.E);
  }
  return j;
}

int cmd_eig(const Workspace& ws, const fs::path& out) {
  std::ostringstream csv;
  csv << config_comment(ws.config);
  csv << "index,lambda,rel_err_continuum\n";
  const auto& spec = ws.problem.spectral;
  for (int i = 0; i < spec.size(); ++i) {
    const double continuum = (i + 1.0) * (i + 1.0) * M_PI * M_PI;
    const double rel = std::abs(spec.eigenvalues[i] - continuum) / continuum;
    csv << (i + 1) << "," << format17(spec.eigenvalues[i]) << "," << format17(rel) << "\n";
  }
  write_text(out / "eigenvalues.csv", csv.str());
  std::cout << "wrote " << (out / "eigenvalues.csv").string() << "\n";
  return 0;
}

int cmd_constants(const Workspace& ws, const fs::path& out) {
  const Constants consts =
      estimate_constants(ws.problem, default_embedding(ws.problem, ws.config.embed_restarts));
  json j = constants_json(consts, ws.config);
  j["config"] = config_echo(ws.config);
  write_text(out / "constants.json", j.dump(2) + "\n");
  std::cout << "E_k_lambda = " << format17(consts.E_k_lambda) << "\n";
  return 0;
}

int cmd_solve(const Workspace& ws, const fs::path& out) {
  const SolveOptions opts = solve_options(ws.config);
  SolveDiagnostics diag;
  SaddleResult result;
  if (ws.config.algo == "mpa") {
    result = solve_mountain_pass_path(ws.problem, ws.config.E, std::nullopt, opts, &diag);
  } else {
    result = solve_saddle(ws.problem, ws.config.E, std::nullopt, opts, &diag);
  }

  json j = saddle_result_json(ws.problem, result);
  j["constants"] = constants_json(diag.constants, ws.config);
  j["rho"] = diag.tp.rho;
  j["T"] = diag.frame.T;
  j["linking"] = {{"b_c", diag.linking.b_c},
                  {"b_d", diag.linking.b_d},
                  {"b", diag.linking.b},
                  {"a", diag.linking.a}};
  j["config"] = config_echo(ws.config);
  write_text(out / "solution.json", j.dump(2) + "\n");
  write_text(out / "solution.csv", solution_csv(ws.problem, result.u, ws.config));
  std::cout << "mu = " << format17(result.mu)
            << "  E_achieved = " << format17(result.E_achieved)
            << "  converged = " << (result.converged ? "true" : "false") << "\n";
  return result.converged ? 0 : 3;
}

int cmd_sweep(const Workspace& ws, const fs::path& out) {
  RunConfig c = ws.config;
  std::vector<double> energies = c.E_list;
  if (energies.empty()) {
    double hi = c.E_max;
    if (hi <= 0.0) {
      const Constants consts =
          estimate_constants(ws.problem, default_embedding(ws.problem, c.embed_restarts));
      hi = 0.8 * consts.E_k_lambda;
    }
    for (int i = 0; i < c.E_count; ++i) {
      energies.push_back(c.E_min *
                         std::pow(hi / c.E_min, static_cast<double>(i) / (c.E_count - 1)));
    }
  }
  const SweepResult sweep = sweep_energy(ws.problem, energies, solve_options(c));

  std::ostringstream csv;
  csv << config_comment(c);
  csv << "E,mu,residual,iterations,converged\n";
  for (const SweepRow& row : sweep.rows) {
    csv << format17(row.E) << "," << format17(row.mu) << "," << format17(row.dual_residual)
        << "," << row.iterations << "," << (row.converged ? "true" : "false") << "\n";
  }
  write_text(out / "sweep.csv", csv.str());
  std::cout << "monotone = " << (sweep.monotone ? "true" : "false") << "\n";
  return 0;
}

int cmd_zero_energy(const Workspace& ws, const fs::path& out) {
  ZeroEnergyOptions opts;
  opts.E_start = ws.config.E_start;
  opts.max_halvings = ws.config.max_halvings;
  opts.tol_mu = ws.config.tol_mu;
  opts.tol_field = ws.config.tol_field;
  opts.solve = solve_options(ws.config);
  const ZeroEnergyResult limit = zero_energy_limit(ws.problem, opts);

  json j;
  j["mu_bar_0"] = *limit.ladder.mu_bar_0;
  j["cauchy"] = limit.cauchy;
  j["monotone"] = limit.ladder.monotone;
  json ladder = json::array();
  for (const SweepRow& row : limit.ladder.rows) {
    ladder.push_back({{"E", row.E},
                      {"mu", row.mu},
                      {"residual", row.dual_residual},
                      {"iterations", row.iterations},
                      {"converged", row.converged}});
  }
  j["ladder"] = ladder;
  j["field_diffs"] = limit.field_diffs;
  j["final"] = saddle_result_json(ws.problem, limit.final);
  j["config"] = config_echo(ws.config);
  write_text(out / "zero_energy.json", j.dump(2) + "\n");
  write_text(out / "zero_energy_solution.csv",
             solution_csv(ws.problem, limit.final.u, ws.config));
  std::cout << "mu_bar_0 = " << format17(*limit.ladder.mu_bar_0) << "\n";
  return 0;
}

int cmd_fiber(const Workspace& ws, const fs::path& out) {
  const ProblemSpec& p = ws.problem;
  std::vector<double> grid(ws.config.t_count);
  for (int i = 0; i < ws.config.t_count; ++i) {
    grid[i] = ws.config.t_min + (ws.config.t_max - ws.config.t_min) * i /
                                     std::max(1, ws.config.t_count - 1);
  }
  const Field u_bar = p.spectral.unit_mode(p.spectral.k);
  const FiberingProfile profile =
      fibering_profile(p, u_bar, Field::Zero(p.mesh.n), ws.config.E, grid);

  std::ostringstream csv;
  csv << config_comment(ws.config);
  csv << "t,value,skipped\n";
  for (std::size_t i = 0; i < profile.t_grid.size(); ++i) {
    csv << format17(profile.t_grid[i]) << "," << format17(profile.values[i]) << ","
        << (profile.skipped[i] ? "true" : "false") << "\n";
  }
  write_text(out / "fiber.csv", csv.str());
  std::cout << "peak value " << format17(profile.peak_value) << " at t = "
            << format17(profile.peak_t) << "\n";
  return 0;
}

int cmd_check_gradients(const Workspace& ws, const fs::path& out) {
  const ProblemSpec& p = ws.problem;
  const double h = ws.config.fd_step;
  const int count = ws.config.fd_count;

  // Deterministic smooth test fields from low sine modes.
  const auto field_for = [&](unsigned seed) {
    Rng rng(seed);
    Field u = Field::Zero(p.mesh.n);
    for (int mode = 0; mode < 6; ++mode) {
      const double amp = rng.normal() / ((mode + 1) * (mode + 1));
      for (int i = 0; i < p.mesh.n; ++i) {
        u[i] += amp * std::sin((mode + 1) * M_PI * (i + 1) * p.mesh.h);
      }
    }
    return u;
  };

  std::ostringstream report;
  bool all_pass = true;
  const struct {
    const char* name;
    FunctionalKind kind;
    double tol;
  } rows[] = {{"E_mu", FunctionalKind::Energy, 1e-6},
              {"R_E", FunctionalKind::Rayleigh, 1e-6},
              {"R_E_rho(band)", FunctionalKind::RayleighTruncated, 1e-5}};
  for (const auto& row : rows) {
    FunctionalSelector sel;
    sel.kind = row.kind;
    sel.mu = 1.0;
    sel.E = ws.config.E;
    sel.tp = TruncationParams{1.0};
    double worst = 0.0;
    unsigned worst_seed = 0;
    for (int i = 0; i < count; ++i) {
      Field u = field_for(1000 + i);
      if (row.kind == FunctionalKind::RayleighTruncated) {
        u *= 0.75 / norm1(p.spectral, u).total;  // transition band
      }
      const Field v = field_for(2000 + i);
      const double err = fd_gradient_check(p, sel, u, v, h);
      if (err > worst) {
        worst = err;
        worst_seed = 1000 + i;
      }
    }
    const bool pass = worst <= row.tol;
    all_pass = all_pass && pass;
    report << row.name << ": " << (pass ? "pass" : "FAIL") << "  worst rel err = "
           << format17(worst) << " (tol " << row.tol << ", witness seed " << worst_seed
           << ")\n";
  }
  write_text(out / "check_gradients.txt", config_comment(ws.config) + report.str());
  std::cout << report.str();
  return all_pass ? 0 : 3;
}

int cmd_check_assumptions(const Workspace& ws, const fs::path& out) {
  std::vector<double> s_grid;
  for (int i = -40; i <= 40; ++i) {
    if (i != 0) s_grid.push_back(0.05 * i);
  }
  const AssumptionReport rep = check_assumptions(
      ws.problem.nl, s_grid, {0.1, 0.25, 0.5, 0.75, 0.9});
  write_text(out / "check_assumptions.txt", config_comment(ws.config) + rep.summary());
  std::cout << rep.summary();
  return rep.all_pass() ? 0 : 3;
}

int cmd_embed(const Workspace& ws, const fs::path& out) {
  const Subspace sub = ws.config.subspace == "all" ? Subspace::All : Subspace::Wplus;
  const double value = embedding_constant(ws.problem.spectral, ws.problem.mesh, ws.config.r,
                                          ws.config.restarts, sub);
  std::ostringstream report;
  report << "embedding constant estimate (lower bound)\n"
         << "r = " << format17(ws.config.r) << ", subspace = " << ws.config.subspace
         << ", restarts = " << ws.config.restarts << "\n"
         << "S_r = " << format17(value) << "\n";
  write_text(out / "embed.txt", config_comment(ws.config) + report.str());
  std::cout << report.str();
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"prescribed-energy saddle-point solver for -u'' - lambda u = "
               "mu |u|^{q-2} u + g(x,u) on (0,1)"};
  app.fallthrough();

  RunConfig config;
  if (const char* env = std::getenv("SADDLE_OUT")) config.out_dir = env;

  std::string config_path;
  std::string lambda_frac_raw;
  double lambda_abs = std::numeric_limits<double>::quiet_NaN();
  std::string e_list_raw;

  app.add_option("--config", config_path, "JSON config file (overrides flags)");
  app.add_option("--out", config.out_dir, "output directory (default $SADDLE_OUT or ./out)");
  app.add_option("--lambda", lambda_abs, "lambda as an absolute value");
  app.add_option("--lambda-frac", lambda_frac_raw,
                 "lambda as a fraction of lambda_1, or gap:<k>:<theta>");
  app.add_option("--q", config.q, "sublinear exponent in (1,2)");
  app.add_option("--gamma", config.gamma, "superlinear exponent > 2");
  app.add_option("--c", config.c, "pure-power coefficient");
  app.add_option("--nonlinearity", config.nonlinearity, "registry id (pure_power)");
  app.add_option("--n", config.n, "interior mesh nodes");
  app.add_option("--quad-order", config.quad_order, "Gauss points per element (2..5)");
  app.add_option("--algo", config.algo, "solver: lmm or mpa");
  app.add_option("--tol-grad", config.tol_grad, "dual residual tolerance");
  app.add_option("--tol-E", config.tol_E, "energy tolerance after refinement");
  app.add_option("--tol-inner", config.tol_inner, "subspace maximizer tolerance");
  app.add_option("--max-outer", config.max_outer, "outer iteration cap");
  app.add_option("--max-inner", config.max_inner, "inner iteration cap");
  app.add_option("--multi-start", config.multi_start, "number of W+ start directions");
  app.add_option("--seed", config.seed, "deterministic seed");
  app.add_option("--rho-safety", config.rho_safety, "rho = safety * min(r_k, sqrt(2E))");
  app.add_option("--T-factor", config.T_factor, "initial T as a multiple of r_k");
  app.add_option("--path-points", config.path_points, "mountain-pass path resolution");
  app.add_option("--k-check", config.k_check,
                 "fail unless the resolved lambda has this splitting index");

  CLI::App* eig = app.add_subcommand("eig", "eigenvalue table");
  CLI::App* constants = app.add_subcommand("constants", "sphere-positivity constants");
  constants->add_option("--E", config.E, "energy for delta_E / rho_est");
  CLI::App* solve = app.add_subcommand("solve", "prescribed-energy saddle solve");
  solve->add_option("--E", config.E, "prescribed energy level");
  CLI::App* sweep = app.add_subcommand("sweep", "mu(E) over an energy range");
  sweep->add_option("--E-min", config.E_min, "lowest energy");
  sweep->add_option("--E-max", config.E_max, "highest energy (default 0.8 E_k)");
  sweep->add_option("--E-count", config.E_count, "number of log-spaced energies");
  sweep->add_option("--E-list", e_list_raw, "comma-separated explicit energies");
  CLI::App* zero = app.add_subcommand("zero-energy", "zero-energy limit (lambda < lambda_1)");
  zero->add_option("--E-start", config.E_start, "top of the halving ladder");
  zero->add_option("--max-halvings", config.max_halvings, "ladder depth cap");
  zero->add_option("--tol-mu", config.tol_mu, "Cauchy tolerance for mu");
  zero->add_option("--tol-field", config.tol_field, "Cauchy tolerance for the fields");
  CLI::App* fiber = app.add_subcommand("fiber", "fibering profile along u_bar_plus");
  fiber->add_option("--E", config.E, "energy level");
  fiber->add_option("--t-min", config.t_min, "first ray parameter");
  fiber->add_option("--t-max", config.t_max, "last ray parameter");
  fiber->add_option("--t-count", config.t_count, "grid size");
  CLI::App* checkg = app.add_subcommand("check-gradients", "finite-difference gradient report");
  checkg->add_option("--E", config.E, "energy for the quotient checks");
  checkg->add_option("--fd-step", config.fd_step, "central-difference step");
  checkg->add_option("--count", config.fd_count, "number of random (u,v) pairs");
  CLI::App* checka = app.add_subcommand("check-assumptions", "nonlinearity assumption report");
  CLI::App* embed = app.add_subcommand("embed", "discrete Sobolev embedding constant");
  embed->add_option("--r", config.r, "Lebesgue exponent");
  embed->add_option("--restarts", config.restarts, "ascent restarts");
  embed->add_option("--subspace", config.subspace, "all or wplus");
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion") {
      return app.exit(e);
    }
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (!std::isnan(lambda_abs)) config.lambda_spec = "abs:" + format17(lambda_abs);
    else if (!lambda_frac_raw.empty()) {
      config.lambda_spec = (lambda_frac_raw.rfind("gap:", 0) == 0)
                               ? lambda_frac_raw
                               : "frac:" + lambda_frac_raw;
    }
    if (!e_list_raw.empty()) {
      config.E_list.clear();
      std::stringstream ss(e_list_raw);
      std::string item;
      while (std::getline(ss, item, ',')) config.E_list.push_back(std::stod(item));
    }
    if (!config_path.empty()) apply_config_file(config, config_path);

    Workspace ws = build_workspace(std::move(config));
    const fs::path out = ensure_out_dir(ws.config);

    if (*eig) return cmd_eig(ws, out);
    if (*constants) return cmd_constants(ws, out);
    if (*solve) return cmd_solve(ws, out);
    if (*sweep) return cmd_sweep(ws, out);
    if (*zero) return cmd_zero_energy(ws, out);
    if (*fiber) return cmd_fiber(ws, out);
    if (*checkg) return cmd_check_gradients(ws, out);
    if (*checka) return cmd_check_assumptions(ws, out);
    if (*embed) return cmd_embed(ws, out);
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 2;
  } catch (const SaddleError& e) {
    std::cerr << "error [" << e.code() << "]: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace saddle

#include "roughctrl/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "roughctrl/csv.hpp"
#include "roughctrl/rng.hpp"
#include "roughctrl/softpolicy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace roughctrl {
namespace {

std::string hash_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

struct RunConfig {
  json raw;
  std::string problem = "linear-additive";
  bool entropic = false;
  double lambda = 0.5;
  double reward_slope = 0.5;

  std::string driver_kind = "fbm";  // fbm | smooth | csv
  double hurst = 0.45;
  double alpha_csv = 0.45;  // Hoelder exponent attached to csv drivers
  std::string driver_path;

  int grid = 256;
  std::uint64_t seed = 12345;
  bool has_initial = false;
  double initial = 0.0;

  std::string control_kind = "uniform";  // uniform | dirac | csv
  int control_atom = 0;
  std::string control_path;

  std::string out_dir;

  // pontryagin / qfunc
  double spike_t0 = 0.25;
  int spike_atom = -1;  // -1 means the last atom
  int beta_coarsest_div = 8;
  int beta_finest_div = 64;
  std::vector<double> t0s{0.25, 0.5};
  std::vector<int> atoms;  // empty means {first, last}

  // improve
  std::string init_kind = "uniform";  // uniform | random | csv
  int max_iters = 60;
  double w2_tol = 1e-8;
  double monotone_slack = 1e-6;
};

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path);
  RunConfig cfg;
  try {
    in >> cfg.raw;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config parse error: ") + e.what());
  }
  const json& j = cfg.raw;
  try {
    cfg.problem = j.value("problem", cfg.problem);
    cfg.entropic = j.value("entropic", cfg.entropic);
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.reward_slope = j.value("reward_slope", cfg.reward_slope);
    if (j.contains("driver")) {
      const json& d = j.at("driver");
      cfg.driver_kind = d.value("kind", cfg.driver_kind);
      cfg.hurst = d.value("hurst", cfg.hurst);
      cfg.alpha_csv = d.value("alpha", cfg.alpha_csv);
      cfg.driver_path = d.value("path", cfg.driver_path);
    }
    cfg.grid = j.value("grid", cfg.grid);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("initial")) {
      cfg.has_initial = true;
      cfg.initial = j.at("initial").get<double>();
    }
    if (j.contains("control")) {
      const json& c = j.at("control");
      cfg.control_kind = c.value("kind", cfg.control_kind);
      cfg.control_atom = c.value("atom", cfg.control_atom);
      cfg.control_path = c.value("path", cfg.control_path);
    }
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.spike_t0 = j.value("spike_t0", cfg.spike_t0);
    cfg.spike_atom = j.value("spike_atom", cfg.spike_atom);
    cfg.beta_coarsest_div = j.value("beta_coarsest_div", cfg.beta_coarsest_div);
    cfg.beta_finest_div = j.value("beta_finest_div", cfg.beta_finest_div);
    if (j.contains("t0")) cfg.t0s = j.at("t0").get<std::vector<double>>();
    if (j.contains("actions")) cfg.atoms = j.at("actions").get<std::vector<int>>();
    cfg.init_kind = j.value("init", cfg.init_kind);
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.w2_tol = j.value("w2_tol", cfg.w2_tol);
    cfg.monotone_slack = j.value("monotone_slack", cfg.monotone_slack);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config field error: ") + e.what());
  }
  return cfg;
}

RoughPath build_driver(const RunConfig& cfg, const ProblemSpec& spec, const TimeGrid& grid) {
  if (cfg.driver_kind == "fbm") {
    Rng root(cfg.seed);
    Rng drv = root.substream("driver");
    return lift_fbm(cfg.hurst, spec.driver_dim, grid, drv);
  }
  if (cfg.driver_kind == "smooth") {
    const int d = spec.driver_dim;
    auto fn = [d](double t) {
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) {
        const double w = 2.0 * M_PI * (i + 1);
        v(i) = std::sin(w * t) / w;
      }
      return v;
    };
    return lift_smooth(grid, fn, 8, 1.0);
  }
  if (cfg.driver_kind == "csv") {
    if (cfg.driver_path.empty()) throw InvalidInput("driver.kind=csv needs driver.path");
    RoughPath rp = read_rough_path_csv(cfg.driver_path, cfg.alpha_csv);
    if (!rp.grid.same_nodes(grid))
      throw InvalidInput("driver csv grid does not match the configured grid");
    return rp;
  }
  throw InvalidInput("unknown driver kind '" + cfg.driver_kind + "'");
}

RelaxedControl build_control(const RunConfig& cfg, const ProblemSpec& spec, const TimeGrid& grid) {
  if (cfg.control_kind == "uniform")
    return RelaxedControl::constant(grid, spec.actions, DiscreteMeasure::uniform(spec.actions));
  if (cfg.control_kind == "dirac") {
    if (cfg.control_atom < 0 || cfg.control_atom >= spec.actions.size())
      throw InvalidInput("control.atom out of range");
    return RelaxedControl::constant(grid, spec.actions,
                                    DiscreteMeasure::dirac(spec.actions, cfg.control_atom));
  }
  if (cfg.control_kind == "csv") {
    if (cfg.control_path.empty()) throw InvalidInput("control.kind=csv needs control.path");
    RelaxedControl control = read_control_csv(cfg.control_path, spec.actions);
    if (!control.grid.same_nodes(grid))
      throw InvalidInput("control csv grid does not match the configured grid");
    return control;
  }
  throw InvalidInput("unknown control kind '" + cfg.control_kind + "'");
}

void write_costate_csv(const Eigen::MatrixXd& costate, const TimeGrid& grid,
                       const std::string& path) {
  std::vector<std::string> header{"t"};
  for (int c = 0; c < costate.cols(); ++c) header.push_back("p_" + std::to_string(c + 1));
  CsvWriter w(path, header);
  for (int k = 0; k < grid.nodes(); ++k) {
    std::vector<CsvWriter::Cell> row;
    row.emplace_back(grid[k]);
    for (int c = 0; c < costate.cols(); ++c) row.emplace_back(costate(k, c));
    w.row(row);
  }
}

/// `<artifact>.meta.json` sidecar: the provenance of one CSV.
void write_sidecar(const fs::path& artifact, const std::string& command, const RunConfig& cfg) {
  json m;
  m["artifact"] = artifact.filename().string();
  m["command"] = command;
  m["version"] = kVersion;
  m["config_hash"] = hash_hex(cfg.raw.dump());
  std::ofstream out(artifact.string() + ".meta.json");
  out << m.dump(2) << "\n";
}

void write_meta(const fs::path& dir, const std::string& command, const RunConfig& cfg,
                const json& extra) {
  json meta;
  meta["command"] = command;
  meta["version"] = kVersion;
  meta["problem"] = cfg.problem;
  meta["grid"] = cfg.grid;
  meta["seed"] = cfg.seed;
  meta["config_hash"] = hash_hex(cfg.raw.dump());
  meta["results"] = extra;
  std::ofstream out(dir / "meta.json");
  out << meta.dump(2) << "\n";
}

struct Session {
  RunConfig cfg;
  ProblemSpec spec;
  EntropicSpec espec;  // only meaningful when cfg.entropic
  TimeGrid grid;
  RoughPath driver;
  RelaxedControl control;
  Eigen::VectorXd y0;
  fs::path out;
};

Session open_session(const RunConfig& cfg, const std::string& out_flag) {
  Session s;
  s.cfg = cfg;
  if (cfg.entropic) {
    s.espec = make_entropic(cfg.problem, cfg.lambda, cfg.reward_slope);
    s.spec = s.espec.spec;
  } else {
    s.spec = make_problem(cfg.problem);
  }
  if (cfg.grid < 2) throw InvalidInput("grid must have at least two steps");
  s.grid = TimeGrid::uniform(s.spec.horizon, cfg.grid);
  s.driver = build_driver(cfg, s.spec, s.grid);
  s.control = build_control(cfg, s.spec, s.grid);
  s.y0 = cfg.has_initial ? Eigen::VectorXd::Constant(s.spec.state_dim, cfg.initial)
                         : s.spec.initial_state();

  std::string out_dir = !out_flag.empty() ? out_flag : cfg.out_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("ROUGHCTRL_OUT");
    out_dir = env != nullptr ? env : "out";
  }
  s.out = fs::path(out_dir);
  fs::create_directories(s.out);
  return s;
}

int cmd_simulate(const Session& s) {
  const Trajectory traj = integrate_rde(s.spec, s.y0, 0, s.control, s.driver);
  write_rough_path_csv(s.driver, (s.out / "driver.csv").string());
  write_controlled_csv(traj.path, (s.out / "state.csv").string());
  write_control_csv(s.control, (s.out / "control.csv").string());
  for (const char* name : {"driver.csv", "state.csv", "control.csv"})
    write_sidecar(s.out / name, "simulate", s.cfg);

  // Convergence table: re-run on dyadic coarsenings of the same driver
  // (restriction is exact, so the rows share one realisation) with the
  // control sampled at the kept nodes.
  std::vector<int> strides;
  for (int st = 8; st >= 1; st /= 2)
    if (s.cfg.grid % st == 0 && s.cfg.grid / st >= 2) strides.push_back(st);
  std::vector<double> rewards, terminals;
  for (int st : strides) {
    const RoughPath coarse = s.driver.restricted(st);
    RelaxedControl cc = RelaxedControl::constant(coarse.grid, s.spec.actions, s.control.at(0));
    for (int k = 0; k < coarse.grid.nodes(); ++k)
      cc.gamma[static_cast<std::size_t>(k)] = s.control.at(k * st);
    const Trajectory tc = integrate_rde(s.spec, s.y0, 0, cc, coarse);
    rewards.push_back(reward_along(s.spec, tc, cc));
    terminals.push_back(tc.terminal()(0));
  }
  {
    CsvWriter w((s.out / "convergence.csv").string(),
                {"steps", "reward", "terminal_state", "terminal_gap"});
    for (std::size_t i = 0; i < strides.size(); ++i) {
      const double gap = i + 1 < strides.size() ? std::abs(terminals[i] - terminals[i + 1]) : 0.0;
      w.row({static_cast<long long>(s.cfg.grid / strides[i]), rewards[i], terminals[i], gap});
    }
  }
  write_sidecar(s.out / "convergence.csv", "simulate", s.cfg);
  json extra;
  extra["reward"] = reward_along(s.spec, traj, s.control);
  extra["terminal_state"] = traj.terminal()(0);
  extra["convergence_rows"] = strides.size();
  write_meta(s.out, "simulate", s.cfg, extra);
  std::cout << "simulate: reward = " << reward_along(s.spec, traj, s.control) << "\n";
  return 0;
}

int cmd_pontryagin(const Session& s) {
  const Trajectory traj = integrate_rde(s.spec, s.y0, 0, s.control, s.driver);
  const Eigen::MatrixXd costate = adjoint(s.spec, traj, s.control, s.driver);
  const PMPReport report = s.cfg.entropic
                               ? pmp_residual(s.espec, traj, s.control, s.driver, costate)
                               : pmp_residual(s.spec, traj, s.control, s.driver, costate);
  const int atom = s.cfg.spike_atom < 0 ? s.spec.actions.size() - 1 : s.cfg.spike_atom;
  if (atom < 0 || atom >= s.spec.actions.size()) throw InvalidInput("spike_atom out of range");
  const DiscreteMeasure mu = DiscreteMeasure::dirac(s.spec.actions, atom);
  const std::vector<double> betas =
      dyadic_betas(s.grid, s.cfg.beta_coarsest_div, s.cfg.beta_finest_div);
  const std::vector<SweepRow> sweep =
      approx_derivative_sweep(s.spec, s.y0, s.control, s.driver, s.cfg.spike_t0, mu, betas);
  const double duality =
      duality_gap(s.spec, traj, s.control, s.driver, costate,
                  SpikeConfig{s.cfg.spike_t0, betas.front(), mu});

  write_pmp_csv(report, s.spec.actions, s.grid, (s.out / "residual.csv").string());
  write_sweep_csv(sweep, (s.out / "sweep.csv").string());
  write_costate_csv(costate, s.grid, (s.out / "costate.csv").string());
  for (const char* name : {"residual.csv", "sweep.csv", "costate.csv"})
    write_sidecar(s.out / name, "pontryagin", s.cfg);
  json extra;
  extra["max_residual"] = report.max_residual;
  extra["duality_gap"] = duality;
  extra["sweep_final_gap"] = sweep.back().sup_gap;
  write_meta(s.out, "pontryagin", s.cfg, extra);
  std::cout << "pontryagin: max residual = " << report.max_residual
            << ", duality gap = " << duality << "\n";
  return 0;
}

int cmd_qfunc(const Session& s) {
  const Trajectory base = integrate_rde(s.spec, s.y0, 0, s.control, s.driver);
  std::vector<int> atoms = s.cfg.atoms;
  if (atoms.empty()) atoms = {0, s.spec.actions.size() - 1};
  const std::vector<double> betas =
      dyadic_betas(s.grid, s.cfg.beta_coarsest_div, s.cfg.beta_finest_div);
  std::vector<QEvaluation> rows;
  double max_spread = 0.0;
  for (double t0 : s.cfg.t0s) {
    const int node = s.grid.floor_index(t0);
    const Eigen::VectorXd y = base.state(node);
    for (int atom : atoms) {
      if (atom < 0 || atom >= s.spec.actions.size()) throw InvalidInput("action atom out of range");
      const DiscreteMeasure mu = DiscreteMeasure::dirac(s.spec.actions, atom);
      rows.push_back(evaluate_q(s.spec, y, node, s.control, s.driver, mu, betas,
                                s.spec.actions.u(atom)));
      max_spread = std::max(max_spread, rows.back().spread());
    }
  }
  write_q_csv(rows, (s.out / "q.csv").string());
  write_sidecar(s.out / "q.csv", "qfunc", s.cfg);
  json extra;
  extra["cells"] = rows.size();
  extra["max_spread"] = max_spread;
  write_meta(s.out, "qfunc", s.cfg, extra);
  std::cout << "qfunc: " << rows.size() << " cells, max spread = " << max_spread << "\n";
  return 0;
}

int cmd_improve(const Session& s) {
  if (!s.cfg.entropic)
    throw InvalidInput("improve needs an entropic problem (set \"entropic\": true)");
  RelaxedControl init = s.control;
  if (s.cfg.init_kind == "random") {
    Rng root(s.cfg.seed);
    Rng pol = root.substream("policy-init");
    for (int k = 0; k < s.grid.nodes(); ++k) {
      Eigen::VectorXd w(s.spec.actions.size());
      for (int j = 0; j < w.size(); ++j) w(j) = -std::log(pol.uniform01());
      init.gamma[static_cast<std::size_t>(k)] = DiscreteMeasure::from_weights(w);
    }
  } else if (s.cfg.init_kind != "uniform" && s.cfg.init_kind != "csv") {
    throw InvalidInput("unknown init kind '" + s.cfg.init_kind + "'");
  }
  PolicyIterationOptions opts;
  opts.max_iters = s.cfg.max_iters;
  opts.w2_tol = s.cfg.w2_tol;
  opts.monotone_slack = s.cfg.monotone_slack;
  const PolicyIterationResult res = policy_iteration(s.espec, s.driver, s.y0, init, opts);
  write_iteration_csv(res.log, (s.out / "iterations.csv").string());
  write_control_csv(res.control, (s.out / "control_final.csv").string());
  for (const char* name : {"iterations.csv", "control_final.csv"})
    write_sidecar(s.out / name, "improve", s.cfg);
  json extra;
  extra["iterations"] = res.log.size();
  extra["converged"] = res.converged;
  extra["final_reward"] = res.log.empty() ? 0.0 : res.log.back().value;
  write_meta(s.out, "improve", s.cfg, extra);
  std::cout << "improve: " << res.log.size() << " iterations, converged = " << res.converged
            << ", final reward = " << (res.log.empty() ? 0.0 : res.log.back().value) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"rough-path relaxed optimal control toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string config_path, out_flag;
  std::uint64_t seed_flag = 0;
  int grid_flag = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed_flag, "override the config seed");
    sub->add_option("--grid", grid_flag, "override the number of grid steps");
    sub->add_option("--out", out_flag, "output directory (default: config, then $ROUGHCTRL_OUT)");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "integrate the controlled rough equation");
  CLI::App* pontryagin = app.add_subcommand("pontryagin", "adjoint state and maximum-principle residual");
  CLI::App* qfunc = app.add_subcommand("qfunc", "q-function by all four routes");
  CLI::App* improve = app.add_subcommand("improve", "entropic policy iteration");
  for (CLI::App* sub : {simulate, pontryagin, qfunc, improve}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--seed") > 0) cfg.seed = seed_flag;
    if (sub->count("--grid") > 0) cfg.grid = grid_flag;
    const Session s = open_session(cfg, out_flag);
    if (sub == simulate) return cmd_simulate(s);
    if (sub == pontryagin) return cmd_pontryagin(s);
    if (sub == qfunc) return cmd_qfunc(s);
    return cmd_improve(s);
  } catch (const MonotonicityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InversionFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnsupportedRegularity& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace roughctrl

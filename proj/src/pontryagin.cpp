#include "roughctrl/pontryagin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "roughctrl/csv.hpp"

namespace roughctrl {

ResolvedSpike resolve_spike(const TimeGrid& grid, const SpikeConfig& cfg) {
  if (cfg.beta < 0.0) throw InvalidInput("resolve_spike: beta must be non-negative");
  const double tol = 1e-12 * std::max(1.0, grid.horizon());
  ResolvedSpike rs;
  rs.start_node = grid.floor_index(cfg.t0);
  rs.snapped_t0 = grid[rs.start_node];
  if (rs.snapped_t0 + cfg.beta > grid.horizon() + tol)
    throw InvalidInput("resolve_spike: window [t0, t0 + beta) exceeds the horizon");
  rs.end_node = rs.start_node;
  while (rs.end_node < grid.nodes() - 1 && grid[rs.end_node] < rs.snapped_t0 + cfg.beta - tol)
    ++rs.end_node;
  return rs;
}

Trajectory spike_state(const ProblemSpec& spec, const Eigen::VectorXd& y,
                       const RelaxedControl& control, const RoughPath& rp,
                       const SpikeConfig& cfg) {
  const ResolvedSpike rs = resolve_spike(rp.grid, cfg);
  const RelaxedControl spiked = spike(control, rs.snapped_t0, cfg.beta, cfg.mu);
  return integrate_rde(spec, y, 0, spiked, rp);
}

Eigen::MatrixXd spike_derivative(const ProblemSpec& spec, const Eigen::VectorXd& y,
                                 const RelaxedControl& control, const RoughPath& rp,
                                 const SpikeConfig& cfg) {
  const ResolvedSpike rs = resolve_spike(rp.grid, cfg);
  const RelaxedControl spiked = spike(control, rs.snapped_t0, cfg.beta, cfg.mu);
  const Trajectory xb = integrate_rde(spec, y, 0, spiked, rp);
  const LinearCoeffs lc = linearization(spec, xb, spiked, rp);
  const int j = rs.end_node;
  const double tb = rp.grid[j];
  const Eigen::VectorXd xj = xb.state(j);
  const Eigen::VectorXd g =
      spec.bbar(tb, xj, cfg.mu) - spec.bbar(tb, xj, control.at(j));
  Eigen::MatrixXd v = integrate_linear_forward(lc, rp, j, g, Eigen::MatrixXd());
  v.topRows(j).setZero();
  return v;
}

Eigen::MatrixXd variational_y(const ProblemSpec& spec, const Trajectory& base,
                              const RelaxedControl& control, const RoughPath& rp,
                              const SpikeConfig& cfg) {
  const ResolvedSpike rs = resolve_spike(rp.grid, cfg);
  const LinearCoeffs lc = linearization(spec, base, control, rp);
  const int m = spec.state_dim;
  Eigen::MatrixXd forcing = Eigen::MatrixXd::Zero(rp.grid.nodes(), m);
  for (int k = rs.start_node; k < rs.end_node; ++k) {
    const double t = rp.grid[k];
    const Eigen::VectorXd xk = base.state(k);
    forcing.row(k) =
        rp.grid.dt(k) * (spec.bbar(t, xk, cfg.mu) - spec.bbar(t, xk, control.at(k))).transpose();
  }
  return integrate_linear_forward(lc, rp, rs.start_node, Eigen::VectorXd::Zero(m), forcing);
}

Eigen::MatrixXd w_beta(const ProblemSpec& spec, const Trajectory& base,
                       const RelaxedControl& control, const RoughPath& rp,
                       const SpikeConfig& cfg) {
  const ResolvedSpike rs = resolve_spike(rp.grid, cfg);
  const LinearCoeffs lc = linearization(spec, base, control, rp);
  const int j = rs.end_node;
  const double tb = rp.grid[j];
  const Eigen::VectorXd xj = base.state(j);
  const Eigen::VectorXd h =
      spec.bbar(tb, xj, cfg.mu) - spec.bbar(tb, xj, control.at(j));
  Eigen::MatrixXd w = integrate_linear_forward(lc, rp, j, h, Eigen::MatrixXd());
  w.topRows(j).setZero();
  return w;
}

double hamiltonian(const ProblemSpec& spec, double t, const Eigen::VectorXd& y,
                   const DiscreteMeasure& m, const Eigen::VectorXd& p) {
  return p.dot(spec.bbar(t, y, m)) + spec.running_reward(t, y, m);
}

PMPReport pmp_residual(const ProblemSpec& spec, const Trajectory& traj,
                       const RelaxedControl& control, const RoughPath& rp,
                       const Eigen::MatrixXd& costate) {
  const int nodes = rp.grid.nodes();
  const int count = spec.actions.size();
  PMPReport report;
  report.residual.resize(nodes);
  report.argmax_action.resize(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double t = rp.grid[k];
    const Eigen::VectorXd x = traj.state(k);
    const Eigen::VectorXd p = costate.row(k).transpose();
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int j = 0; j < count; ++j) {
      const DiscreteMeasure dj = DiscreteMeasure::dirac(spec.actions, j);
      const double hj = hamiltonian(spec, t, x, dj, p);
      if (hj > best) {
        best = hj;
        arg = j;
      }
    }
    const double hg = hamiltonian(spec, t, x, control.at(k), p);
    report.residual(k) = std::max(0.0, best - hg);
    report.argmax_action(k) = arg;
  }
  report.max_residual = report.residual.maxCoeff();
  return report;
}

PMPReport pmp_residual(const EntropicSpec& espec, const Trajectory& traj,
                       const RelaxedControl& control, const RoughPath& rp,
                       const Eigen::MatrixXd& costate) {
  const ProblemSpec& spec = espec.spec;
  const int nodes = rp.grid.nodes();
  const int count = spec.actions.size();
  PMPReport report;
  report.residual.resize(nodes);
  report.argmax_action.resize(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double t = rp.grid[k];
    const Eigen::VectorXd x = traj.state(k);
    const Eigen::VectorXd p = costate.row(k).transpose();
    Eigen::VectorXd ht(count);
    for (int j = 0; j < count; ++j)
      ht(j) = p.dot(spec.b(t, x, spec.actions.u(j))) + espec.R(t, x, spec.actions.u(j));
    int arg = 0;
    const double hmax = ht.maxCoeff(&arg);
    double z = 0.0;
    for (int j = 0; j < count; ++j)
      z += std::exp((ht(j) - hmax) / espec.lambda) * spec.actions.du(j);
    const double sup = hmax + espec.lambda * std::log(z);
    const double hg = hamiltonian(spec, t, x, control.at(k), p);
    report.residual(k) = std::max(0.0, sup - hg);
    report.argmax_action(k) = arg;
  }
  report.max_residual = report.residual.maxCoeff();
  return report;
}

std::vector<SweepRow> approx_derivative_sweep(const ProblemSpec& spec, const Eigen::VectorXd& y,
                                              const RelaxedControl& control, const RoughPath& rp,
                                              double t0, const DiscreteMeasure& mu,
                                              const std::vector<double>& betas) {
  const Trajectory base = integrate_rde(spec, y, 0, control, rp);
  std::vector<SweepRow> rows;
  double prev = 0.0;
  for (double beta : betas) {
    if (!(beta > 0.0)) throw InvalidInput("approx_derivative_sweep: beta must be positive");
    SpikeConfig cfg{t0, beta, mu};
    const Trajectory spiked = spike_state(spec, y, control, rp, cfg);
    const Eigen::MatrixXd yb = variational_y(spec, base, control, rp, cfg);
    const double gap =
        (spiked.path.z - base.path.z - yb).cwiseAbs().maxCoeff() / beta;
    SweepRow row{beta, gap, rows.empty() ? 0.0 : prev / std::max(gap, 1e-300)};
    rows.push_back(row);
    prev = gap;
  }
  return rows;
}

std::vector<SweepRow> taylor_reward_sweep(const ProblemSpec& spec, const Eigen::VectorXd& y,
                                          const RelaxedControl& control, const RoughPath& rp,
                                          double t0, const DiscreteMeasure& mu,
                                          const std::vector<double>& betas) {
  const Trajectory base = integrate_rde(spec, y, 0, control, rp);
  const double j0 = reward_along(spec, base, control);
  std::vector<SweepRow> rows;
  double prev = 0.0;
  for (double beta : betas) {
    if (!(beta > 0.0)) throw InvalidInput("taylor_reward_sweep: beta must be positive");
    SpikeConfig cfg{t0, beta, mu};
    const ResolvedSpike rs = resolve_spike(rp.grid, cfg);
    const RelaxedControl spiked = spike(control, rs.snapped_t0, beta, mu);
    const double jb = reward(spec, y, 0, spiked, rp);
    const Eigen::MatrixXd yb = variational_y(spec, base, control, rp, cfg);
    double rhs = spec.DG(base.terminal()).dot(yb.row(rp.grid.nodes() - 1).transpose());
    for (int k = 0; k < rp.grid.steps(); ++k) {
      const double t = rp.grid[k];
      const Eigen::VectorXd xk = base.state(k);
      rhs += rp.grid.dt(k) *
             spec.running_reward_grad(t, xk, control.at(k)).dot(yb.row(k).transpose());
      if (k >= rs.start_node && k < rs.end_node)
        rhs += rp.grid.dt(k) *
               (spec.running_reward(t, xk, mu) - spec.running_reward(t, xk, control.at(k)));
    }
    const double gap = std::abs(jb - j0 - rhs) / beta;
    SweepRow row{beta, gap, rows.empty() ? 0.0 : prev / std::max(gap, 1e-300)};
    rows.push_back(row);
    prev = gap;
  }
  return rows;
}

double duality_gap(const ProblemSpec& spec, const Trajectory& base, const RelaxedControl& control,
                   const RoughPath& rp, const Eigen::MatrixXd& costate, const SpikeConfig& cfg) {
  const ResolvedSpike rs = resolve_spike(rp.grid, cfg);
  const Eigen::MatrixXd yb = variational_y(spec, base, control, rp, cfg);
  const double lhs = spec.DG(base.terminal()).dot(yb.row(rp.grid.nodes() - 1).transpose());
  double rhs = 0.0;
  for (int k = 0; k < rp.grid.steps(); ++k) {
    const double t = rp.grid[k];
    const Eigen::VectorXd xk = base.state(k);
    if (k >= rs.start_node && k < rs.end_node) {
      const Eigen::VectorXd dl =
          rp.grid.dt(k) * (spec.bbar(t, xk, cfg.mu) - spec.bbar(t, xk, control.at(k)));
      rhs += costate.row(k).dot(dl.transpose());
    }
    rhs -= rp.grid.dt(k) *
           spec.running_reward_grad(t, xk, control.at(k)).dot(yb.row(k).transpose());
  }
  return std::abs(lhs - rhs);
}

void write_pmp_csv(const PMPReport& report, const ActionGrid& actions, const TimeGrid& grid,
                   const std::string& path) {
  CsvWriter w(path, {"t", "residual", "argmax_action"});
  for (int k = 0; k < grid.nodes(); ++k)
    w.row({grid[k], report.residual(k), actions.u(report.argmax_action(k))});
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  CsvWriter w(path, {"beta", "sup_gap", "ratio"});
  for (const SweepRow& r : rows) w.row({r.beta, r.sup_gap, r.ratio});
}

}  // namespace roughctrl

#include "roughctrl/qfunction.hpp"

#include <algorithm>
#include <cmath>

#include "roughctrl/csv.hpp"

namespace roughctrl {

double q_beta(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
              const RelaxedControl& control, const RoughPath& rp, const DiscreteMeasure& mu,
              double beta) {
  const double t0 = rp.grid[t0_node];
  const RelaxedControl spiked = spike(control, t0, beta, mu);
  return reward(spec, y, t0_node, spiked, rp);
}

std::vector<double> dyadic_betas(const TimeGrid& grid, int coarsest, int finest) {
  if (coarsest < 1 || finest < coarsest) throw InvalidInput("dyadic_betas: bad divisors");
  std::vector<double> betas;
  for (int div = coarsest; div <= finest; div *= 2) betas.push_back(grid.horizon() / div);
  return betas;
}

QLimit q_limit(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
               const RelaxedControl& control, const RoughPath& rp, const DiscreteMeasure& mu,
               const std::vector<double>& betas) {
  if (betas.size() < 2) throw InvalidInput("q_limit: need at least two window sizes");
  for (std::size_t i = 0; i + 1 < betas.size(); ++i)
    if (std::abs(betas[i + 1] - 0.5 * betas[i]) > 1e-9 * betas[i])
      throw InvalidInput("q_limit: windows must halve");
  const double j0 = reward(spec, y, t0_node, control, rp);
  QLimit out;
  std::vector<double> quotients;
  double prev = 0.0;
  for (double beta : betas) {
    const double d = (q_beta(spec, y, t0_node, control, rp, mu, beta) - j0) / beta;
    quotients.push_back(d);
    SweepRow row{beta, d, out.sweep.empty() ? 0.0 : prev / std::max(std::abs(d), 1e-300)};
    out.sweep.push_back(row);
    prev = std::abs(d);
  }
  // One Richardson step kills the O(beta) term of the difference quotient.
  std::vector<double> acc;
  for (std::size_t i = 0; i + 1 < quotients.size(); ++i)
    acc.push_back(2.0 * quotients[i + 1] - quotients[i]);
  out.value = acc.back();
  out.residual = acc.size() > 1 ? std::abs(acc.back() - acc[acc.size() - 2])
                                : std::abs(acc.back() - quotients.back());
  return out;
}

double q_derivative(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                    const RelaxedControl& control, const RoughPath& rp,
                    const DiscreteMeasure& mu) {
  const double t0 = rp.grid[t0_node];
  const Trajectory traj = integrate_rde(spec, y, t0_node, control, rp);
  const Eigen::VectorXd g0 = spec.bbar(t0, y, mu) - spec.bbar(t0, y, control.at(t0_node));
  const Eigen::MatrixXd vhat = jacobian(spec, traj, control, rp, t0_node, g0);
  const int n = rp.grid.steps();
  double q = spec.running_reward(t0, y, mu) - spec.running_reward(t0, y, control.at(t0_node));
  for (int k = t0_node; k < n; ++k)
    q += rp.grid.dt(k) * spec.running_reward_grad(rp.grid[k], traj.state(k), control.at(k))
                             .dot(vhat.row(k).transpose());
  q += spec.DG(traj.terminal()).dot(vhat.row(n).transpose());
  return q;
}

double q_hamiltonian(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                     const RelaxedControl& control, const RoughPath& rp,
                     const DiscreteMeasure& mu) {
  const double t0 = rp.grid[t0_node];
  const Eigen::VectorXd gj = grad_value(spec, y, t0_node, control, rp);
  return hamiltonian(spec, t0, y, mu, gj) - hamiltonian(spec, t0, y, control.at(t0_node), gj);
}

Eigen::VectorXd value_path(const ProblemSpec& spec, const Trajectory& traj,
                           const RelaxedControl& control, const RoughPath& rp) {
  const int nodes = rp.grid.nodes();
  Eigen::VectorXd v(nodes);
  for (int k = traj.start; k < nodes; ++k) v(k) = reward(spec, traj.state(k), k, control, rp);
  for (int k = 0; k < traj.start; ++k) v(k) = v(traj.start);
  return v;
}

namespace {

// dJ/dt at the start node of traj, as the rough time derivative of the value
// path with zero driver levels (the value along the state is a drift path).
double value_time_derivative_at(const ProblemSpec& spec, const Trajectory& traj,
                                const RelaxedControl& control, const RoughPath& rp) {
  const int nodes = rp.grid.nodes();
  ControlledPath vp;
  vp.grid = rp.grid;
  vp.dim = 1;
  vp.driver_dim = rp.dim;
  vp.kappa = rp.alpha;
  vp.z = value_path(spec, traj, control, rp);
  vp.z_zeta.assign(static_cast<std::size_t>(nodes), Eigen::MatrixXd::Zero(1, rp.dim));
  vp.z_zeta2.assign(static_cast<std::size_t>(nodes), Eigen::MatrixXd::Zero(1, rp.dim * rp.dim));
  const Eigen::MatrixXd deriv = time_derivative(vp, rp);
  return deriv(traj.start, 0);
}

}  // namespace

double q_drift(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
               const RelaxedControl& control, const RoughPath& rp, const DiscreteMeasure& mu) {
  const double t0 = rp.grid[t0_node];
  const Trajectory traj = integrate_rde(spec, y, t0_node, control, rp);
  const double jdot = value_time_derivative_at(spec, traj, control, rp);
  const Eigen::VectorXd gj = grad_value_along(spec, traj, control, rp, t0_node);
  const Eigen::VectorXd bg = spec.bbar(t0, y, control.at(t0_node));
  return jdot + hamiltonian(spec, t0, y, mu, gj) - gj.dot(bg);
}

double drift_identity_gap(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                          const RelaxedControl& control, const RoughPath& rp) {
  const double t0 = rp.grid[t0_node];
  const Trajectory traj = integrate_rde(spec, y, t0_node, control, rp);
  const double jdot = value_time_derivative_at(spec, traj, control, rp);
  return std::abs(jdot + spec.running_reward(t0, y, control.at(t0_node)));
}

double QEvaluation::spread() const {
  const double lo = std::min(std::min(q_limit, q_derivative), std::min(q_hamiltonian, q_drift));
  const double hi = std::max(std::max(q_limit, q_derivative), std::max(q_hamiltonian, q_drift));
  return hi - lo;
}

QEvaluation evaluate_q(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                       const RelaxedControl& control, const RoughPath& rp,
                       const DiscreteMeasure& mu, const std::vector<double>& betas,
                       double action_label) {
  QEvaluation ev;
  ev.t0_node = t0_node;
  ev.t0 = rp.grid[t0_node];
  ev.action_label = action_label;
  const QLimit ql = q_limit(spec, y, t0_node, control, rp, mu, betas);
  ev.q_limit = ql.value;
  ev.richardson_residual = ql.residual;
  ev.q_derivative = q_derivative(spec, y, t0_node, control, rp, mu);
  ev.q_hamiltonian = q_hamiltonian(spec, y, t0_node, control, rp, mu);
  ev.q_drift = q_drift(spec, y, t0_node, control, rp, mu);
  return ev;
}

void write_q_csv(const std::vector<QEvaluation>& rows, const std::string& path) {
  CsvWriter w(path,
              {"t0", "a_or_mu_id", "q_limit", "q_derivative", "q_hamiltonian", "q_drift",
               "spread"});
  for (const QEvaluation& ev : rows)
    w.row({ev.t0, ev.action_label, ev.q_limit, ev.q_derivative, ev.q_hamiltonian, ev.q_drift,
           ev.spread()});
}

}  // namespace roughctrl

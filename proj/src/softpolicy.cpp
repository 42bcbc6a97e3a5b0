#include "roughctrl/softpolicy.hpp"

#include <algorithm>
#include <cmath>

#include "roughctrl/csv.hpp"

namespace roughctrl {

namespace {
constexpr double kDensityFloor = 1e-8;
}

GibbsResult gibbs_optimizer(const ActionGrid& actions, const Eigen::VectorXd& h, double lambda) {
  if (h.size() != actions.size()) throw InvalidInput("gibbs_optimizer: size mismatch");
  if (!(lambda > 0.0)) throw InvalidInput("gibbs_optimizer: lambda must be positive");
  const double hmax = h.maxCoeff();
  Eigen::VectorXd w(h.size());
  double z = 0.0;
  for (int j = 0; j < h.size(); ++j) {
    w(j) = std::exp((h(j) - hmax) / lambda) * actions.du(j);
    z += w(j);
  }
  GibbsResult out;
  out.measure = DiscreteMeasure::from_weights(w / z);
  out.value = hmax + lambda * std::log(z);
  return out;
}

double entropic_lagrangian(const ActionGrid& actions, const DiscreteMeasure& m,
                           const Eigen::VectorXd& h, double lambda) {
  if (h.size() != actions.size()) throw InvalidInput("entropic_lagrangian: size mismatch");
  return m.integrate(h) + lambda * entropy(m, actions);
}

Eigen::VectorXd htilde(const EntropicSpec& espec, double t, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& p) {
  const ActionGrid& actions = espec.spec.actions;
  Eigen::VectorXd h(actions.size());
  for (int j = 0; j < actions.size(); ++j)
    h(j) = p.dot(espec.spec.b(t, y, actions.u(j))) + espec.R(t, y, actions.u(j));
  return h;
}

DiscreteMeasure feedback_policy(const EntropicSpec& espec, double t, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& p) {
  return gibbs_optimizer(espec.spec.actions, htilde(espec, t, y, p), espec.lambda).measure;
}

OpenLoopResult open_loop_policy(const EntropicSpec& espec, const RoughPath& rp,
                                const Eigen::VectorXd& y, const RelaxedControl& init, double tol,
                                int max_iter) {
  const ProblemSpec& spec = espec.spec;
  OpenLoopResult out;
  out.control = init;
  for (int it = 0; it < max_iter; ++it) {
    const Trajectory traj = integrate_rde(spec, y, 0, out.control, rp);
    const Eigen::MatrixXd table = grad_value_table(spec, traj, out.control, rp);
    RelaxedControl next = out.control;
    double step = 0.0;
    for (int k = 0; k < rp.grid.nodes(); ++k) {
      next.gamma[static_cast<std::size_t>(k)] =
          feedback_policy(espec, rp.grid[k], traj.state(k), table.row(k).transpose());
      step = std::max(step, wasserstein2(spec.actions, next.at(k), out.control.at(k)));
    }
    out.control = std::move(next);
    out.iterations = it + 1;
    out.last_step = step;
    if (step <= tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

ImproveResult improve(const EntropicSpec& espec, const RelaxedControl& control,
                      const RoughPath& rp, const Eigen::VectorXd& y) {
  const ProblemSpec& spec = espec.spec;
  const int nodes = rp.grid.nodes();
  const int count = spec.actions.size();
  const Trajectory traj = integrate_rde(spec, y, 0, control, rp);
  const Eigen::MatrixXd table = grad_value_table(spec, traj, control, rp);

  ImproveResult out;
  out.control = control;
  out.q_table.resize(nodes, count);
  out.value_before = reward_along(spec, traj, control);
  for (int k = 0; k < nodes; ++k) {
    const double t = rp.grid[k];
    const Eigen::VectorXd xk = traj.state(k);
    const Eigen::VectorXd p = table.row(k).transpose();
    const Eigen::VectorXd h = htilde(espec, t, xk, p);
    const double hgamma = hamiltonian(spec, t, xk, control.at(k), p);
    const Eigen::VectorXd q = h.array() - hgamma;
    out.q_table.row(k) = q.transpose();

    // Gibbs density in a, max-subtracted, then floored and renormalised.
    const double qmax = q.maxCoeff();
    Eigen::VectorXd w(count);
    for (int j = 0; j < count; ++j)
      w(j) = std::exp((q(j) - qmax) / espec.lambda) * spec.actions.du(j);
    w /= w.sum();
    bool clamped = false;
    for (int j = 0; j < count; ++j) {
      const double density = w(j) / spec.actions.du(j);
      if (density < kDensityFloor) {
        w(j) = kDensityFloor * spec.actions.du(j);
        clamped = true;
      }
    }
    if (clamped) w /= w.sum();
    out.control.gamma[static_cast<std::size_t>(k)] =
        DiscreteMeasure::from_weights(w);
  }
  out.value_after = reward(spec, y, 0, out.control, rp);
  return out;
}

QPolicyCheck q_policy_identity_check(const EntropicSpec& espec, const RelaxedControl& control,
                                     const RoughPath& rp, const Eigen::VectorXd& y) {
  const ProblemSpec& spec = espec.spec;
  const Trajectory traj = integrate_rde(spec, y, 0, control, rp);
  const Eigen::MatrixXd table = grad_value_table(spec, traj, control, rp);
  QPolicyCheck check;
  for (int k = 0; k < rp.grid.nodes(); ++k) {
    const double t = rp.grid[k];
    const Eigen::VectorXd xk = traj.state(k);
    const Eigen::VectorXd p = table.row(k).transpose();
    const Eigen::VectorXd h = htilde(espec, t, xk, p);
    const double hgamma = hamiltonian(spec, t, xk, control.at(k), p);
    double mass = 0.0;
    for (int j = 0; j < spec.actions.size(); ++j) {
      const double density = std::exp((h(j) - hgamma) / espec.lambda);
      mass += density * spec.actions.du(j);
      const double gamma_density = control.at(k).p(j) / spec.actions.du(j);
      check.density_gap = std::max(check.density_gap, std::abs(density - gamma_density));
    }
    check.normalization_gap = std::max(check.normalization_gap, std::abs(mass - 1.0));
  }
  return check;
}

PolicyIterationResult policy_iteration(const EntropicSpec& espec, const RoughPath& rp,
                                       const Eigen::VectorXd& y, const RelaxedControl& init,
                                       const PolicyIterationOptions& opts) {
  const ProblemSpec& spec = espec.spec;
  PolicyIterationResult out;
  out.control = init;
  for (int it = 0; it < opts.max_iters; ++it) {
    const ImproveResult step = improve(espec, out.control, rp, y);
    if (step.value_after < step.value_before - opts.monotone_slack)
      throw MonotonicityError("policy_iteration: reward decreased", it, step.value_before,
                              step.value_after);
    double w2 = 0.0;
    double ent = 0.0;
    for (int k = 0; k < rp.grid.nodes(); ++k) {
      w2 = std::max(w2, wasserstein2(spec.actions, step.control.at(k), out.control.at(k)));
      ent += entropy(step.control.at(k), spec.actions);
    }
    ent /= rp.grid.nodes();
    out.control = step.control;
    out.log.push_back({it, step.value_after, w2, ent});
    if (w2 <= opts.w2_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

double hat_hamiltonian(const ProblemSpec& spec, const NoiseFlow& flow, int node,
                       const Eigen::VectorXd& eta, const DiscreteMeasure& m,
                       const Eigen::VectorXd& p) {
  const Eigen::VectorXd x = flow.phi(node, eta);
  const int dim = spec.state_dim;
  const double h = 1e-6 * (1.0 + x.norm());
  Eigen::MatrixXd dchi(dim, dim);
  for (int k = 0; k < dim; ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    dchi.col(k) = (flow.chi(node, xp) - flow.chi(node, xm)) / (2.0 * h);
  }
  const double t = flow.grid()[node];
  return p.dot(dchi * spec.bbar(t, x, m)) + spec.running_reward(t, x, m);
}

void write_iteration_csv(const std::vector<PolicyIterationLogRow>& log, const std::string& path) {
  CsvWriter w(path, {"iter", "J", "max_W2_step", "entropy_mean"});
  for (const PolicyIterationLogRow& row : log)
    w.row({static_cast<long long>(row.iter), row.value, row.max_w2_step, row.entropy_mean});
}

}  // namespace roughctrl

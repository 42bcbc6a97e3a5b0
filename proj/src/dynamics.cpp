#include "roughctrl/dynamics.hpp"

#include <cmath>

namespace roughctrl {

namespace {

void require_setup(const ProblemSpec& spec, const RelaxedControl& control, const RoughPath& rp,
                   const char* who) {
  spec.validate();
  rp.validate();
  control.validate();
  if (!control.grid.same_nodes(rp.grid)) throw InvalidInput(std::string(who) + ": grid mismatch");
  if (rp.dim != spec.driver_dim) throw InvalidInput(std::string(who) + ": driver dimension mismatch");
}

void guard_finite(const Eigen::VectorXd& x, int step, const char* who) {
  if (!x.allFinite()) throw DivergenceError(std::string(who) + ": non-finite state", step);
}

/// One-step germ I + A dt + B dzeta + B_j B_l area(l, j).
Eigen::MatrixXd step_germ(const Eigen::MatrixXd& a, const std::vector<Eigen::MatrixXd>& b,
                          double dt, const Eigen::VectorXd& dz, const Eigen::MatrixXd& area) {
  const int m = static_cast<int>(a.rows());
  const int d = static_cast<int>(dz.size());
  Eigen::MatrixXd germ = Eigen::MatrixXd::Identity(m, m) + a * dt;
  for (int j = 0; j < d; ++j) germ += b[static_cast<std::size_t>(j)] * dz(j);
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l)
      if (area(l, j) != 0.0)
        germ += b[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(l)] * area(l, j);
  return germ;
}

}  // namespace

Trajectory integrate_rde(const ProblemSpec& spec, const Eigen::VectorXd& y, int start,
                         const RelaxedControl& control, const RoughPath& rp) {
  require_setup(spec, control, rp, "integrate_rde");
  if (y.size() != spec.state_dim) throw InvalidInput("integrate_rde: initial state dimension");
  if (start < 0 || start >= rp.grid.nodes()) throw InvalidInput("integrate_rde: start index");
  const int n = rp.grid.steps();
  const int m = spec.state_dim;
  const int d = spec.driver_dim;
  Trajectory traj;
  traj.start = start;
  ControlledPath& cp = traj.path;
  cp.grid = rp.grid;
  cp.dim = m;
  cp.driver_dim = d;
  cp.kappa = rp.alpha;
  cp.z.resize(n + 1, m);
  cp.z_zeta.assign(static_cast<std::size_t>(n + 1), Eigen::MatrixXd::Zero(m, d));
  cp.z_zeta2.assign(static_cast<std::size_t>(n + 1), Eigen::MatrixXd::Zero(m, d * d));
  cp.z_tau.setZero(n + 1, m);
  for (int k = 0; k <= start; ++k) cp.z.row(k) = y.transpose();
  Eigen::VectorXd x = y;
  for (int k = 0; k <= n; ++k) {
    if (k < start) continue;  // frozen prefix keeps zero levels
    const double t = rp.grid[k];
    const Eigen::MatrixXd sig = spec.sigma(t, x);
    const std::vector<Eigen::MatrixXd> dsig = spec.jac_sigma(t, x);
    const Eigen::VectorXd drift = spec.bbar(t, x, control.at(k));
    cp.z.row(k) = x.transpose();
    cp.z_zeta[static_cast<std::size_t>(k)] = sig;
    for (int j = 0; j < d; ++j) {
      const Eigen::MatrixXd& sj = dsig[static_cast<std::size_t>(j)];
      for (int l = 0; l < d; ++l)
        cp.z_zeta2[static_cast<std::size_t>(k)].col(l + d * j) = sj * sig.col(l);
    }
    cp.z_tau.row(k) = drift.transpose();
    if (k == n) break;
    x += drift * rp.grid.dt(k) + sig * rp.increment(k) +
         cp.zeta2_apply(k, rp.area[static_cast<std::size_t>(k)]);
    guard_finite(x, k, "integrate_rde");
  }
  cp.validate();
  return traj;
}

LinearCoeffs linearization(const ProblemSpec& spec, const Trajectory& traj,
                           const RelaxedControl& control, const RoughPath& rp) {
  require_setup(spec, control, rp, "linearization");
  LinearCoeffs lc;
  const int nodes = rp.grid.nodes();
  lc.drift.reserve(static_cast<std::size_t>(nodes));
  lc.rough.reserve(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    const double t = rp.grid[k];
    const Eigen::VectorXd x = traj.state(k);
    lc.drift.push_back(spec.Dbbar(t, x, control.at(k)));
    lc.rough.push_back(spec.jac_sigma(t, x));
  }
  return lc;
}

Eigen::MatrixXd integrate_linear_forward(const LinearCoeffs& lc, const RoughPath& rp, int start,
                                         const Eigen::VectorXd& v0, const Eigen::MatrixXd& forcing) {
  const int n = rp.grid.steps();
  const int m = static_cast<int>(v0.size());
  if (forcing.rows() != 0 && (forcing.rows() != n + 1 || forcing.cols() != m))
    throw InvalidInput("integrate_linear_forward: forcing shape");
  Eigen::MatrixXd out(n + 1, m);
  Eigen::VectorXd v = v0;
  for (int k = 0; k <= start; ++k) out.row(k) = v0.transpose();
  for (int k = start; k < n; ++k) {
    const Eigen::MatrixXd germ = step_germ(lc.drift[static_cast<std::size_t>(k)],
                                           lc.rough[static_cast<std::size_t>(k)], rp.grid.dt(k),
                                           rp.increment(k), rp.area[static_cast<std::size_t>(k)]);
    v = germ * v;
    if (forcing.rows() != 0) v += forcing.row(k).transpose();
    guard_finite(v, k, "integrate_linear_forward");
    out.row(k + 1) = v.transpose();
  }
  return out;
}

std::vector<Eigen::MatrixXd> integrate_linear_forward_matrix(const LinearCoeffs& lc,
                                                             const RoughPath& rp, int start,
                                                             const Eigen::MatrixXd& m0) {
  const int n = rp.grid.steps();
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(n + 1), m0);
  Eigen::MatrixXd m = m0;
  for (int k = start; k < n; ++k) {
    const Eigen::MatrixXd germ = step_germ(lc.drift[static_cast<std::size_t>(k)],
                                           lc.rough[static_cast<std::size_t>(k)], rp.grid.dt(k),
                                           rp.increment(k), rp.area[static_cast<std::size_t>(k)]);
    m = germ * m;
    if (!m.allFinite()) throw DivergenceError("integrate_linear_forward_matrix: blow-up", k);
    out[static_cast<std::size_t>(k + 1)] = m;
  }
  return out;
}

Eigen::MatrixXd integrate_linear_backward(const LinearCoeffs& lc, const RoughPath& rp,
                                          const Eigen::VectorXd& p_terminal,
                                          const Eigen::MatrixXd& forcing) {
  const int n = rp.grid.steps();
  const int m = static_cast<int>(p_terminal.size());
  if (forcing.rows() != 0 && (forcing.rows() != n + 1 || forcing.cols() != m))
    throw InvalidInput("integrate_linear_backward: forcing shape");
  Eigen::MatrixXd out(n + 1, m);
  Eigen::VectorXd p = p_terminal;
  out.row(n) = p.transpose();
  for (int k = n - 1; k >= 0; --k) {
    // -dp = A p dt + B p dzeta + dforcing  <=>  dp = -A p dt - B p dzeta - dforcing;
    // invert the forward germ of the negated equation so backward-then-forward
    // is exact.
    std::vector<Eigen::MatrixXd> neg = lc.rough[static_cast<std::size_t>(k)];
    for (auto& bj : neg) bj = -bj;
    const Eigen::MatrixXd germ =
        step_germ(-lc.drift[static_cast<std::size_t>(k)], neg, rp.grid.dt(k), rp.increment(k),
                  rp.area[static_cast<std::size_t>(k)]);
    Eigen::VectorXd rhs = p;
    if (forcing.rows() != 0) rhs += forcing.row(k).transpose();
    p = germ.partialPivLu().solve(rhs);
    guard_finite(p, k, "integrate_linear_backward");
    out.row(k) = p.transpose();
  }
  return out;
}

Eigen::MatrixXd jacobian(const ProblemSpec& spec, const Trajectory& traj,
                         const RelaxedControl& control, const RoughPath& rp, int start,
                         const Eigen::VectorXd& direction) {
  if (direction.size() != spec.state_dim) throw InvalidInput("jacobian: direction dimension");
  const LinearCoeffs lc = linearization(spec, traj, control, rp);
  return integrate_linear_forward(lc, rp, start, direction, Eigen::MatrixXd());
}

Eigen::MatrixXd adjoint(const ProblemSpec& spec, const Trajectory& traj,
                        const RelaxedControl& control, const RoughPath& rp) {
  require_setup(spec, control, rp, "adjoint");
  const int n = rp.grid.steps();
  const int m = spec.state_dim;
  LinearCoeffs lc = linearization(spec, traj, control, rp);
  for (auto& a : lc.drift) a.transposeInPlace();
  for (auto& bs : lc.rough)
    for (auto& bj : bs) bj.transposeInPlace();
  Eigen::MatrixXd forcing(n + 1, m);
  for (int k = 0; k <= n; ++k)
    forcing.row(k) =
        (spec.running_reward_grad(rp.grid[k], traj.state(k), control.at(k)) *
         (k < n ? rp.grid.dt(k) : 0.0))
            .transpose();
  return integrate_linear_backward(lc, rp, spec.DG(traj.terminal()), forcing);
}

double reward(const ProblemSpec& spec, const Eigen::VectorXd& y, int start,
              const RelaxedControl& control, const RoughPath& rp) {
  const Trajectory traj = integrate_rde(spec, y, start, control, rp);
  return reward_along(spec, traj, control);
}

double reward_along(const ProblemSpec& spec, const Trajectory& traj,
                    const RelaxedControl& control) {
  const int n = traj.path.grid.steps();
  double j = 0.0;
  if (spec.F)
    for (int k = traj.start; k < n; ++k)
      j += spec.F(traj.path.grid[k], traj.state(k), control.at(k)) * traj.path.grid.dt(k);
  return j + spec.G(traj.terminal());
}

Eigen::VectorXd grad_value(const ProblemSpec& spec, const Eigen::VectorXd& y, int start,
                           const RelaxedControl& control, const RoughPath& rp) {
  const Trajectory traj = integrate_rde(spec, y, start, control, rp);
  return grad_value_along(spec, traj, control, rp, start);
}

Eigen::VectorXd grad_value_along(const ProblemSpec& spec, const Trajectory& traj,
                                 const RelaxedControl& control, const RoughPath& rp, int start) {
  const int n = rp.grid.steps();
  const int m = spec.state_dim;
  const LinearCoeffs lc = linearization(spec, traj, control, rp);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd prop = Eigen::MatrixXd::Identity(m, m);  // J_{t_k <- t_start}
  for (int k = start; k < n; ++k) {
    if (spec.DF)
      grad += prop.transpose() *
              spec.DF(rp.grid[k], traj.state(k), control.at(k)) * rp.grid.dt(k);
    const Eigen::MatrixXd germ = step_germ(lc.drift[static_cast<std::size_t>(k)],
                                           lc.rough[static_cast<std::size_t>(k)], rp.grid.dt(k),
                                           rp.increment(k), rp.area[static_cast<std::size_t>(k)]);
    prop = germ * prop;
  }
  grad += prop.transpose() * spec.DG(traj.terminal());
  return grad;
}

Eigen::MatrixXd grad_value_table(const ProblemSpec& spec, const Trajectory& traj,
                                 const RelaxedControl& control, const RoughPath& rp) {
  const int n = rp.grid.steps();
  const int m = spec.state_dim;
  const LinearCoeffs lc = linearization(spec, traj, control, rp);
  Eigen::MatrixXd table(n + 1, m);
  Eigen::VectorXd p = spec.DG(traj.terminal());
  table.row(n) = p.transpose();
  for (int k = n - 1; k >= 0; --k) {
    const Eigen::MatrixXd germ = step_germ(lc.drift[static_cast<std::size_t>(k)],
                                           lc.rough[static_cast<std::size_t>(k)], rp.grid.dt(k),
                                           rp.increment(k), rp.area[static_cast<std::size_t>(k)]);
    p = germ.transpose() * p;
    if (spec.DF)
      p += spec.DF(rp.grid[k], traj.state(k), control.at(k)) * rp.grid.dt(k);
    table.row(k) = p.transpose();
  }
  return table;
}

NoiseFlow::NoiseFlow(const ProblemSpec& spec, const RoughPath& rp) : spec_(&spec), rp_(&rp) {
  spec.validate();
  rp.validate();
  if (rp.dim != spec.driver_dim) throw InvalidInput("NoiseFlow: driver dimension mismatch");
}

const TimeGrid& NoiseFlow::grid() const { return rp_->grid; }

std::pair<Eigen::VectorXd, Eigen::MatrixXd> NoiseFlow::phi_with_jacobian(
    int node, const Eigen::VectorXd& eta) const {
  const ProblemSpec& spec = *spec_;
  const RoughPath& rp = *rp_;
  if (node < 0 || node >= rp.grid.nodes()) throw InvalidInput("NoiseFlow: node index");
  const int m = spec.state_dim;
  const int d = spec.driver_dim;
  Eigen::VectorXd x = eta;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(m, m);
  for (int k = 0; k < node; ++k) {
    const double t = rp.grid[k];
    const Eigen::MatrixXd sig = spec.sigma(t, x);
    const std::vector<Eigen::MatrixXd> dsig = spec.jac_sigma(t, x);
    const Eigen::VectorXd dz = rp.increment(k);
    const Eigen::MatrixXd& area = rp.area[static_cast<std::size_t>(k)];
    Eigen::VectorXd step = sig * dz;
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l)
        if (area(l, j) != 0.0)
          step += dsig[static_cast<std::size_t>(j)] * sig.col(l) * area(l, j);
    const Eigen::MatrixXd germ =
        step_germ(Eigen::MatrixXd::Zero(m, m), dsig, rp.grid.dt(k), dz, area);
    x += step;
    jac = germ * jac;
    guard_finite(x, k, "NoiseFlow::phi");
  }
  return {x, jac};
}

Eigen::VectorXd NoiseFlow::phi(int node, const Eigen::VectorXd& eta) const {
  return phi_with_jacobian(node, eta).first;
}

Eigen::VectorXd NoiseFlow::chi(int node, const Eigen::VectorXd& target) const {
  // Damped Newton on phi(x) = target, starting from the query point.
  const double tol = 1e-10 * (1.0 + target.norm());
  Eigen::VectorXd x = target;
  auto [value, jac] = phi_with_jacobian(node, x);
  Eigen::VectorXd resid = value - target;
  for (int it = 0; it < 50; ++it) {
    if (resid.norm() <= tol) return x;
    const Eigen::VectorXd dir = jac.partialPivLu().solve(resid);
    double lambda = 1.0;
    for (int bt = 0; bt < 30; ++bt) {
      const Eigen::VectorXd trial = x - lambda * dir;
      auto [tv, tj] = phi_with_jacobian(node, trial);
      const Eigen::VectorXd tr = tv - target;
      if (tr.norm() < resid.norm()) {
        x = trial;
        value = tv;
        jac = tj;
        resid = tr;
        break;
      }
      lambda *= 0.5;  // damping
      if (bt == 29) throw InversionFailure("NoiseFlow::chi: line search stalled");
    }
  }
  if (resid.norm() <= tol) return x;
  throw InversionFailure("NoiseFlow::chi: Newton did not reach tolerance");
}

JacobianBoundReport jacobian_bound_check(const ProblemSpec& spec, const RelaxedControl& control,
                                         const RoughPath& base, const std::vector<double>& scales) {
  JacobianBoundReport rep;
  const double horizon = base.grid.horizon();
  for (double c : scales) {
    const RoughPath rp = base.scaled(c);
    const Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, control, rp);
    const LinearCoeffs lc = linearization(spec, traj, control, rp);
    const std::vector<Eigen::MatrixXd> prop = integrate_linear_forward_matrix(
        lc, rp, 0, Eigen::MatrixXd::Identity(spec.state_dim, spec.state_dim));
    double sup = 0.0;
    for (const auto& m : prop) sup = std::max(sup, m.operatorNorm());
    const double norm = rough_norm(rp, rp.alpha).total;
    rep.norm_arg.push_back(horizon * std::pow(norm, 1.0 / rp.alpha));
    rep.sup_jac.push_back(sup);
  }
  // Smallest C >= 1 with log sup <= log C + C * arg across the sweep (bisect
  // per sample, take the max).
  double needed = 1.0;
  for (std::size_t i = 0; i < rep.sup_jac.size(); ++i) {
    double lo = 1.0, hi = 1e6;
    auto ok = [&](double cc) {
      return std::log(std::max(rep.sup_jac[i], 1e-300)) <= std::log(cc) + cc * rep.norm_arg[i];
    };
    if (!ok(hi)) {
      needed = std::numeric_limits<double>::infinity();
      continue;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-9 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? hi : lo) = mid;
    }
    needed = std::max(needed, hi);
  }
  rep.fitted_constant = needed;
  return rep;
}

}  // namespace roughctrl

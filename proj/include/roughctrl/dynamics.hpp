#pragma once

#include "roughctrl/controlled.hpp"
#include "roughctrl/problem.hpp"

namespace roughctrl {

/// Controlled solution of the relaxed rough differential equation
///   dx = int b(t, x, a) gamma_t(da) dt + sigma(t, x) dzeta
/// via compensated (Davie/Milstein) steps
///   x_{k+1} = x_k + bbar dt + sigma dzeta + (Dsigma sigma) : area.
/// The attached levels are x^zeta = sigma, x^{zeta2} = Dsigma sigma and
/// x^tau = bbar, all evaluated at the left endpoint. Rows before `start`
/// are frozen at the initial state.
struct Trajectory {
  ControlledPath path;
  int start = 0;

  Eigen::VectorXd state(int k) const { return path.z.row(k).transpose(); }
  Eigen::VectorXd terminal() const { return path.z.row(path.grid.nodes() - 1).transpose(); }
};

Trajectory integrate_rde(const ProblemSpec& spec, const Eigen::VectorXd& y, int start,
                         const RelaxedControl& control, const RoughPath& rp);

/// Node-indexed coefficients of a linear rough equation
///   dv = drift_k v dt + sum_j rough_k[j] v dzeta^j (+ forcing).
struct LinearCoeffs {
  std::vector<Eigen::MatrixXd> drift;               // per node, m x m
  std::vector<std::vector<Eigen::MatrixXd>> rough;  // per node, per driver, m x m
};

/// First-variation coefficients along a trajectory/control pair:
/// drift = int Db(t, x_t, a) gamma_t(da), rough_j = Dsigma_j(t, x_t).
LinearCoeffs linearization(const ProblemSpec& spec, const Trajectory& traj,
                           const RelaxedControl& control, const RoughPath& rp);

/// Forward solve from node `start` with one-step germs
///   v_{k+1} = v_k + A_k v_k dt + B_k v_k dzeta + B_j B_l v_k area(l, j) + forcing_k.
/// `forcing` holds per-step increments (row k applied over [t_k, t_{k+1}]);
/// pass an empty matrix for none. Rows before `start` replicate v0.
Eigen::MatrixXd integrate_linear_forward(const LinearCoeffs& lc, const RoughPath& rp, int start,
                                         const Eigen::VectorXd& v0, const Eigen::MatrixXd& forcing);

/// Matrix propagator M_k = Phi(t_k <- t_start) with M_start = M0.
std::vector<Eigen::MatrixXd> integrate_linear_forward_matrix(const LinearCoeffs& lc,
                                                             const RoughPath& rp, int start,
                                                             const Eigen::MatrixXd& m0);

/// Backward (final-value) solve of -dp = A p dt + B p dzeta + dforcing.
/// Each step inverts the forward germ of the reversed equation, so a
/// backward-then-forward round trip with zero forcing is an exact involution.
Eigen::MatrixXd integrate_linear_backward(const LinearCoeffs& lc, const RoughPath& rp,
                                          const Eigen::VectorXd& p_terminal,
                                          const Eigen::MatrixXd& forcing);

/// Directional flow derivative V_t = J_{t <- s} e: linear RDE with the
/// first-variation coefficients and V_s = e.
Eigen::MatrixXd jacobian(const ProblemSpec& spec, const Trajectory& traj,
                         const RelaxedControl& control, const RoughPath& rp, int start,
                         const Eigen::VectorXd& direction);

/// Adjoint state: -dp = (int Db dgamma)^T p dt + (Dsigma)^T p dzeta + DF dt,
/// p_T = DG(x_T). The rough blocks contract p against the state index of
/// sigma (the transposed first-variation blocks), the choice under which the
/// rough terms cancel in the duality pairing with forward variations.
Eigen::MatrixXd adjoint(const ProblemSpec& spec, const Trajectory& traj,
                        const RelaxedControl& control, const RoughPath& rp);

/// Reward functional J = sum_k F(t_k, x_k, gamma_k) dt + G(x_T)
/// (left-endpoint quadrature) along a freshly integrated trajectory.
double reward(const ProblemSpec& spec, const Eigen::VectorXd& y, int start,
              const RelaxedControl& control, const RoughPath& rp);
double reward_along(const ProblemSpec& spec, const Trajectory& traj,
                    const RelaxedControl& control);

/// Value gradient grad_y J_{t,T}(y, gamma) via one propagation of the flow
/// Jacobian: grad = sum_k (J_{t_k <- t})^T DF dt + (J_{T <- t})^T DG.
Eigen::VectorXd grad_value(const ProblemSpec& spec, const Eigen::VectorXd& y, int start,
                           const RelaxedControl& control, const RoughPath& rp);
/// Same, reusing an existing trajectory that passes through (t_start, x_start).
Eigen::VectorXd grad_value_along(const ProblemSpec& spec, const Trajectory& traj,
                                 const RelaxedControl& control, const RoughPath& rp, int start);

/// grad_y J(t_k, x_k) at every node of the trajectory in one backward pass:
/// p_k = DF_k dt + germ_k^T p_{k+1}, p_n = DG(x_T). Row k equals
/// grad_value_along(..., k) up to floating-point association.
Eigen::MatrixXd grad_value_table(const ProblemSpec& spec, const Trajectory& traj,
                                 const RelaxedControl& control, const RoughPath& rp);

/// Deterministic flow of the noise: phi_t(eta) solves dx = sigma(t, x) dzeta,
/// x_0 = eta; chi_t is the spatial inverse found by damped Newton iteration
/// (tolerance 1e-10, damping 0.5, at most 50 iterations, started at the
/// query point).
class NoiseFlow {
 public:
  NoiseFlow(const ProblemSpec& spec, const RoughPath& rp);
  const TimeGrid& grid() const;
  Eigen::VectorXd phi(int node, const Eigen::VectorXd& eta) const;
  /// Flow value together with its spatial Jacobian (propagated, not FD).
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> phi_with_jacobian(int node,
                                                                const Eigen::VectorXd& eta) const;
  Eigen::VectorXd chi(int node, const Eigen::VectorXd& target) const;

 private:
  const ProblemSpec* spec_;
  const RoughPath* rp_;
};

/// Growth-bound sweep: solves the first-variation equation across driver
/// dilations and fits the smallest C with sup_t |J_{t<-0}| <= C exp(C T ||zeta||^{1/alpha}).
struct JacobianBoundReport {
  std::vector<double> norm_arg;  // T ||zeta||_alpha^{1/alpha}
  std::vector<double> sup_jac;   // sup_t |J|
  double fitted_constant = 0.0;
};
JacobianBoundReport jacobian_bound_check(const ProblemSpec& spec, const RelaxedControl& control,
                                         const RoughPath& base, const std::vector<double>& scales);

}  // namespace roughctrl

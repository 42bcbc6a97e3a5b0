#pragma once

#include "roughctrl/qfunction.hpp"

namespace roughctrl {

/// Closed-form maximiser of m -> int h dm + lambda Ent(m) over probability
/// measures on the action grid: the Gibbs measure with density
/// exp(h_j / lambda) / Z. `value` is the maximum lambda log Z (computed with
/// max-subtraction).
struct GibbsResult {
  DiscreteMeasure measure;
  double value = 0.0;
};
GibbsResult gibbs_optimizer(const ActionGrid& actions, const Eigen::VectorXd& h, double lambda);

/// L(m, h) = int h dm + lambda Ent(m) for an arbitrary competitor m.
double entropic_lagrangian(const ActionGrid& actions, const DiscreteMeasure& m,
                           const Eigen::VectorXd& h, double lambda);

/// Per-atom entropic Hamiltonian integrand Htilde_j = p . b(t, y, a_j) + R(t, y, a_j).
Eigen::VectorXd htilde(const EntropicSpec& espec, double t, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& p);

/// Feedback (closed-loop) policy: the Gibbs measure of Htilde(t, y, p).
DiscreteMeasure feedback_policy(const EntropicSpec& espec, double t, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& p);

/// Open-loop realisation of the feedback policy: iterate
///   gamma^{i+1}_t = feedback(t, x^{gamma^i}_t, grad_y J(t, x^{gamma^i}_t; gamma^i))
/// until the largest per-node W2 step falls below tol.
struct OpenLoopResult {
  RelaxedControl control;
  int iterations = 0;
  bool converged = false;
  double last_step = 0.0;
};
OpenLoopResult open_loop_policy(const EntropicSpec& espec, const RoughPath& rp,
                                const Eigen::VectorXd& y, const RelaxedControl& init, double tol,
                                int max_iter);

/// One q-route improvement step: gamma^+_t has density proportional to
/// exp(q(t, x_t, a; gamma) / lambda) with q_j = Htilde_j - H(t, x_t, gamma_t, p_t),
/// clamped at the 1e-8 density floor and renormalised. q_table is node x atom.
struct ImproveResult {
  RelaxedControl control;
  double value_before = 0.0;
  double value_after = 0.0;
  Eigen::MatrixXd q_table;
};
ImproveResult improve(const EntropicSpec& espec, const RelaxedControl& control,
                      const RoughPath& rp, const Eigen::VectorXd& y);

/// Gibbs-density identities along a trajectory under gamma:
///   normalization_gap = max_k |int exp(q(t_k, x_k, a; gamma)/lambda) da - 1|
///                     (equals max_k (exp KL(gamma_k || Gibbs_k) - 1)),
///   density_gap       = max_{k,j} |exp(q_j/lambda) - dgamma_k/da (a_j)|.
/// Both vanish exactly at a Gibbs fixpoint.
struct QPolicyCheck {
  double normalization_gap = 0.0;
  double density_gap = 0.0;
};
QPolicyCheck q_policy_identity_check(const EntropicSpec& espec, const RelaxedControl& control,
                                     const RoughPath& rp, const Eigen::VectorXd& y);

struct PolicyIterationOptions {
  int max_iters = 60;
  double w2_tol = 1e-10;
  double monotone_slack = 1e-6;  // J may not drop by more than this per step
};
struct PolicyIterationLogRow {
  int iter = 0;
  double value = 0.0;
  double max_w2_step = 0.0;
  double entropy_mean = 0.0;
};
struct PolicyIterationResult {
  RelaxedControl control;
  std::vector<PolicyIterationLogRow> log;
  bool converged = false;
};

/// Iterate `improve` to a fixpoint. Throws MonotonicityError if the reward
/// drops by more than the slack in any step.
PolicyIterationResult policy_iteration(const EntropicSpec& espec, const RoughPath& rp,
                                       const Eigen::VectorXd& y, const RelaxedControl& init,
                                       const PolicyIterationOptions& opts);

/// Hamiltonian of the noise-removed problem: with x = phi_t(eta),
///   Hhat(t, eta, m, p) = p . (Dchi_t(x) bbar(t, x, m)) + F(t, x, m),
/// Dchi taken by central differences of the inverse flow (step 1e-6 (1+|x|)).
double hat_hamiltonian(const ProblemSpec& spec, const NoiseFlow& flow, int node,
                       const Eigen::VectorXd& eta, const DiscreteMeasure& m,
                       const Eigen::VectorXd& p);

void write_iteration_csv(const std::vector<PolicyIterationLogRow>& log, const std::string& path);

}  // namespace roughctrl

#pragma once

#include "roughctrl/pontryagin.hpp"

namespace roughctrl {

/// Perturbed tail reward Q_beta(t0, y, mu; gamma) = J(t0, y; gamma^beta) for
/// the needle gamma^beta = spike(gamma, t0, beta, mu). t0 is given as a node
/// index; the trajectory restarts from y there.
double q_beta(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
              const RelaxedControl& control, const RoughPath& rp, const DiscreteMeasure& mu,
              double beta);

/// Dyadic window sweep T/coarsest, T/(2 coarsest), ..., T/finest for the
/// vanishing-window limit (exact node multiples on uniform grids).
std::vector<double> dyadic_betas(const TimeGrid& grid, int coarsest = 8, int finest = 256);

/// Route 1: q = lim_{beta -> 0} (Q_beta - J)/beta, accelerated by one
/// Richardson step on a halving sweep. `sweep` records the raw quotients,
/// `residual` the change in the accelerated value over the last halving.
struct QLimit {
  double value = 0.0;
  double residual = 0.0;
  std::vector<SweepRow> sweep;
};
QLimit q_limit(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
               const RelaxedControl& control, const RoughPath& rp, const DiscreteMeasure& mu,
               const std::vector<double>& betas);

/// Route 2: q = F(t0,y,mu) - F(t0,y,gamma_t0) + int DF . Vhat dt + DG . Vhat_T
/// where Vhat is the flow derivative started at bbar(mu) - bbar(gamma_t0).
double q_derivative(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                    const RelaxedControl& control, const RoughPath& rp,
                    const DiscreteMeasure& mu);

/// Route 3: q = H(t0, y, mu, grad J) - H(t0, y, gamma_t0, grad J).
double q_hamiltonian(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                     const RelaxedControl& control, const RoughPath& rp,
                     const DiscreteMeasure& mu);

/// Value path v_k = J(t_k, x_k; gamma) along a trajectory, re-simulated from
/// each node (constant before traj.start).
Eigen::VectorXd value_path(const ProblemSpec& spec, const Trajectory& traj,
                           const RelaxedControl& control, const RoughPath& rp);

/// Route 4: q = dJ/dt(t0, y) + H(t0, y, mu, grad J) - grad J . bbar(gamma_t0),
/// with dJ/dt computed as the rough time derivative of the re-simulated value
/// path (the value along the state is a pure drift path, so zero driver
/// levels are attached).
double q_drift(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
               const RelaxedControl& control, const RoughPath& rp, const DiscreteMeasure& mu);

/// |dJ/dt(t0, y) + F(t0, y, gamma_t0)|: the evolution identity for the value
/// path drift that turns route 4 into route 3 when substituted exactly.
double drift_identity_gap(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                          const RelaxedControl& control, const RoughPath& rp);

/// All four routes at one (t0, mu) cell, plus their spread.
struct QEvaluation {
  int t0_node = 0;
  double t0 = 0.0;
  double action_label = 0.0;  // atom value for Dirac perturbations, else an id
  double q_limit = 0.0;
  double q_derivative = 0.0;
  double q_hamiltonian = 0.0;
  double q_drift = 0.0;
  double richardson_residual = 0.0;
  double spread() const;
};
QEvaluation evaluate_q(const ProblemSpec& spec, const Eigen::VectorXd& y, int t0_node,
                       const RelaxedControl& control, const RoughPath& rp,
                       const DiscreteMeasure& mu, const std::vector<double>& betas,
                       double action_label = 0.0);

void write_q_csv(const std::vector<QEvaluation>& rows, const std::string& path);

}  // namespace roughctrl

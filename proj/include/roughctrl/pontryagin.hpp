#pragma once

#include "roughctrl/dynamics.hpp"

namespace roughctrl {

/// Needle perturbation: replace the control by mu on [t0, t0 + beta).
/// Off-grid t0 is snapped down to the nearest node and reported.
struct SpikeConfig {
  double t0 = 0.0;
  double beta = 0.0;
  DiscreteMeasure mu;
};

struct ResolvedSpike {
  int start_node = 0;  // first perturbed node (snapped t0)
  int end_node = 0;    // first node at or after t0 + beta (not perturbed)
  double snapped_t0 = 0.0;
};
ResolvedSpike resolve_spike(const TimeGrid& grid, const SpikeConfig& cfg);

/// Trajectory under the spiked control (coincides with the base trajectory
/// before t0 by construction).
Trajectory spike_state(const ProblemSpec& spec, const Eigen::VectorXd& y,
                       const RelaxedControl& control, const RoughPath& rp,
                       const SpikeConfig& cfg);

/// V^beta = d/dbeta x^beta: zero before t0 + beta, then the linear RDE with
/// first-variation coefficients along the *spiked* pair, started at
/// g^beta = bbar(t0+beta, x^beta, mu) - bbar(t0+beta, x^beta, gamma_{t0+beta}).
Eigen::MatrixXd spike_derivative(const ProblemSpec& spec, const Eigen::VectorXd& y,
                                 const RelaxedControl& control, const RoughPath& rp,
                                 const SpikeConfig& cfg);

/// First-order variation Y^beta: zero before t0, then the linear RDE along
/// the *unperturbed* pair with forcing dL^beta = (bbar_mu - bbar_gamma) 1_I dt.
Eigen::MatrixXd variational_y(const ProblemSpec& spec, const Trajectory& base,
                              const RelaxedControl& control, const RoughPath& rp,
                              const SpikeConfig& cfg);

/// W^beta = d/dbeta Y^beta: zero before t0 + beta, linear RDE along the
/// unperturbed pair started at h^beta (g^beta evaluated along x-bar).
Eigen::MatrixXd w_beta(const ProblemSpec& spec, const Trajectory& base,
                       const RelaxedControl& control, const RoughPath& rp,
                       const SpikeConfig& cfg);

/// Relaxed Hamiltonian H(t, y, m, p) = p . bbar(t, y, m) + F(t, y, m).
double hamiltonian(const ProblemSpec& spec, double t, const Eigen::VectorXd& y,
                   const DiscreteMeasure& m, const Eigen::VectorXd& p);

/// Pontryagin residual per node: sup_m H(t, x_t, m, p_t) - H(t, x_t, gamma_t, p_t).
/// For plain problems the sup runs over Dirac candidates at the grid atoms
/// (the Hamiltonian is affine in the measure, so vertices suffice); for
/// entropic problems it is the closed-form Gibbs value. Non-negative by
/// construction.
struct PMPReport {
  Eigen::VectorXd residual;       // per node
  Eigen::VectorXi argmax_action;  // atom index achieving the Dirac sup
  double max_residual = 0.0;
};
PMPReport pmp_residual(const ProblemSpec& spec, const Trajectory& traj,
                       const RelaxedControl& control, const RoughPath& rp,
                       const Eigen::MatrixXd& costate);
PMPReport pmp_residual(const EntropicSpec& espec, const Trajectory& traj,
                       const RelaxedControl& control, const RoughPath& rp,
                       const Eigen::MatrixXd& costate);

struct SweepRow {
  double beta = 0.0;
  double sup_gap = 0.0;  // the o(beta) or O(beta) quantity at this beta
  double ratio = 0.0;    // previous gap / this gap (0 on the first row)
};

/// r(beta) = ||x^beta - x_bar - Y^beta||_inf / beta over a dyadic sweep.
std::vector<SweepRow> approx_derivative_sweep(const ProblemSpec& spec, const Eigen::VectorXd& y,
                                              const RelaxedControl& control, const RoughPath& rp,
                                              double t0, const DiscreteMeasure& mu,
                                              const std::vector<double>& betas);

/// |J(gamma^beta) - J(gamma) - first-order Taylor terms| / beta over a sweep:
/// RHS = <DG(x_T), Y_T> + int <DF, Y> dt + int (F(mu) - F(gamma)) 1_I dt.
std::vector<SweepRow> taylor_reward_sweep(const ProblemSpec& spec, const Eigen::VectorXd& y,
                                          const RelaxedControl& control, const RoughPath& rp,
                                          double t0, const DiscreteMeasure& mu,
                                          const std::vector<double>& betas);

/// Duality gap |<DG(x_T), Y_T> - int <p, dL> + int <Y, DF> dt| for one spike.
/// Vanishes up to scheme error: the rough terms cancel in the pairing.
double duality_gap(const ProblemSpec& spec, const Trajectory& base, const RelaxedControl& control,
                   const RoughPath& rp, const Eigen::MatrixXd& costate, const SpikeConfig& cfg);

void write_pmp_csv(const PMPReport& report, const ActionGrid& actions, const TimeGrid& grid,
                   const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace roughctrl

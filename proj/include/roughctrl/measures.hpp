#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "roughctrl/grid.hpp"

namespace roughctrl {

/// One-dimensional action grid: atoms u_1 < ... < u_J with cell widths du_j
/// used to convert between weights and densities. A uniform grid over
/// [lo, hi] places atoms at the endpoints and splits the interval into
/// trapezoid cells (half cells at the boundary), so the widths sum to hi-lo.
struct ActionGrid {
  Eigen::VectorXd u;   // atom positions, strictly increasing
  Eigen::VectorXd du;  // positive cell widths

  static ActionGrid uniform(double lo, double hi, int count);
  int size() const { return static_cast<int>(u.size()); }
  void validate() const;
};

/// Probability weights on the atoms of an action grid.
struct DiscreteMeasure {
  Eigen::VectorXd p;

  static DiscreteMeasure uniform(const ActionGrid& grid);
  static DiscreteMeasure dirac(const ActionGrid& grid, int atom);
  static DiscreteMeasure from_weights(Eigen::VectorXd w);  // normalises, rejects negatives

  int size() const { return static_cast<int>(p.size()); }
  bool is_valid(double tol = 1e-12) const;
  /// Mean of a function sampled on the atoms.
  double integrate(const Eigen::VectorXd& values) const { return p.dot(values); }
};

/// Differential entropy -sum p_j log(p_j / du_j); empty cells contribute 0.
double entropy(const DiscreteMeasure& m, const ActionGrid& grid);

/// KL divergence sum p_j log(p_j / q_j); returns +infinity when m charges a
/// cell that q does not (absolute-continuity violation).
double kl_divergence(const DiscreteMeasure& m, const DiscreteMeasure& q);

/// 2-Wasserstein distance between atomic measures on the same grid, computed
/// from the quantile coupling.
double wasserstein2(const ActionGrid& grid, const DiscreteMeasure& a, const DiscreteMeasure& b);

/// 1-Wasserstein distance (CDF difference formula), used as an oracle bound.
double wasserstein1(const ActionGrid& grid, const DiscreteMeasure& a, const DiscreteMeasure& b);

/// Fortet-Mourier / bounded-Lipschitz distance over the test-function ball
/// { |f| <= 1, Lip(f) <= 1 }: the exact optimum of the small linear program
///   max sum_j f_j (a_j - b_j),  |f_j| <= 1,  |f_{j+1} - f_j| <= u_{j+1} - u_j,
/// solved by dynamic programming over concave piecewise-linear value
/// functions. Always <= min(2, W1).
double fortet_mourier(const ActionGrid& grid, const DiscreteMeasure& a, const DiscreteMeasure& b);

/// Measure-valued control: one measure per grid node, piecewise constant on
/// [t_k, t_{k+1}) and right-continuous by convention.
struct RelaxedControl {
  TimeGrid grid;
  ActionGrid actions;
  std::vector<DiscreteMeasure> gamma;  // nodes() entries

  static RelaxedControl constant(const TimeGrid& grid, const ActionGrid& actions,
                                 const DiscreteMeasure& m);
  const DiscreteMeasure& at(int k) const { return gamma[static_cast<std::size_t>(k)]; }
  void validate() const;
};

/// W2-Hoelder certificate: checks W2(gamma_s, gamma_t) <= L |t-s|^eps on all
/// adjacent pairs and on dyadically strided non-adjacent pairs.
struct HolderCertificate {
  bool holds = false;
  double worst_ratio = 0.0;  // max W2 / (L |t-s|^eps)
  int arg_i = 0, arg_j = 0;
};
HolderCertificate holder_certificate(const RelaxedControl& control, double eps, double bound);

/// Replace the control by mu on nodes with t_k in [t0, t0 + beta) (half-open;
/// beta = 0 leaves the control unchanged). Spike windows must stay in [0, T].
RelaxedControl spike(const RelaxedControl& control, double t0, double beta,
                     const DiscreteMeasure& mu);

/// CSV round trip: header `t, p_1..p_J`.
void write_control_csv(const RelaxedControl& control, const std::string& path);
/// Inverse of write_control_csv; the node measures are renormalised on read.
RelaxedControl read_control_csv(const std::string& path, const ActionGrid& actions);

}  // namespace roughctrl

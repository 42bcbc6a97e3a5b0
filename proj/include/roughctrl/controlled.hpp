#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "roughctrl/rough_path.hpp"

namespace roughctrl {

/// Path controlled by a rough driver. Stores the value together with its
/// expansion coefficients in the local model
///   dz_st ~ z_zeta_s dzeta_st + z_zeta2_s : zeta2_st + z_tau_s (t - s).
/// Index conventions:
///   z_zeta[k]  is dim x d, column i1 multiplies dzeta^{i1};
///   z_zeta2[k] is dim x (d*d); entry (c, l + d*j) multiplies zeta^{2;lj},
///              i.e. the area block A(l, j);
///   z_tau      is (n+1) x dim.
/// The second and third levels are optional (weakly controlled paths carry
/// only z_zeta).
struct ControlledPath {
  TimeGrid grid;
  int dim = 0;
  int driver_dim = 0;
  double kappa = 0.0;
  Eigen::MatrixXd z;                      // (n+1) x dim
  std::vector<Eigen::MatrixXd> z_zeta;    // per node, dim x d
  std::vector<Eigen::MatrixXd> z_zeta2;   // optional, per node, dim x (d*d)
  Eigen::MatrixXd z_tau;                  // optional, (n+1) x dim

  bool has_zeta2() const { return !z_zeta2.empty(); }
  bool has_tau() const { return z_tau.rows() > 0; }

  /// Contract the second-level coefficients at node k against an area block.
  Eigen::VectorXd zeta2_apply(int k, const Eigen::MatrixXd& area_block) const;

  void validate() const;
};

/// Components of the controlled-path norm: sup norms plus Hoelder seminorms
/// of the value, the first-level coefficient, and the remainder
/// rho_st = dz_st - z_zeta_s dzeta_st (measured at exponent 2 kappa).
struct ControlledNorm {
  double value_sup = 0.0, value_holder = 0.0;
  double zeta_sup = 0.0, zeta_holder = 0.0;
  double remainder = 0.0;
  double total() const { return value_sup + value_holder + zeta_sup + zeta_holder + remainder; }
};
ControlledNorm controlled_norm(const ControlledPath& z, const RoughPath& rp, double kappa);

/// Remainder of the full local model (first + second + drift levels),
/// measured at exponent mu (typically 3 kappa).
HolderReport full_remainder_norm(const ControlledPath& z, const RoughPath& rp, double mu);

/// Smooth map (t, z) -> L(t, z) with its z-Jacobian.
struct SmoothMap {
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> value;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> jacobian;
};

/// Composition hat z_t = L(t, z_t), hat z^zeta = (grad_z L)(t, z_t) z^zeta.
ControlledPath compose_smooth(const SmoothMap& map, const ControlledPath& z, const RoughPath& rp);

/// Mixed rough-plus-drift integral of a weakly controlled integrand mu in R^d
/// against the driver: compensated Riemann sums
///   dz = sum_i mu^i dzeta^i + eta dt + sum_{i,i1} mu^{zeta;i,i1} zeta^{2;i1,i}.
/// eta may be empty (treated as zero). Output is scalar-valued with
/// z^zeta = mu^T, second level mu^{zeta}-transposed, z^tau = eta.
ControlledPath rough_integral_mixed(const ControlledPath& mu, const Eigen::VectorXd& eta,
                                    const RoughPath& rp);

/// Pair integral of a weakly controlled mu (R^m) against a strongly
/// controlled nu (R^q): output components (i,j) -> i*q + j accumulate
///   dz^{ij} = mu^i nu^{zeta;j,i1} dzeta^{i1}
///           + (mu^i nu^{zeta2} + mu^{zeta} nu^{zeta})-cross : zeta^2
///           + (mu^i nu^{tau;j} + eta^{ij}) dt.
/// eta may be empty (treated as zero), otherwise (n+1) x (m*q).
ControlledPath rough_integral_pair(const ControlledPath& mu, const ControlledPath& nu,
                                   const Eigen::MatrixXd& eta, const RoughPath& rp);

/// Rough time derivative: strip the first and second driver levels from the
/// one-step increments and divide by dt. Needs z_zeta and z_zeta2.
Eigen::MatrixXd time_derivative(const ControlledPath& z, const RoughPath& rp);

/// Spatially indexed strongly controlled field theta -> mu_t(theta).
/// zeta2 uses the three-index layout tensor[j](i1, i2): the coefficient of
/// zeta^{2;i2,i1} in the expansion of component j (so the stored per-node
/// layout of ControlledPath corresponds to tensor[j](j', l) at entry (l, j)).
/// Spatial derivative callbacks are optional; missing ones fall back to
/// central differences with step 1e-5 (1 + |theta|).
struct StrongField {
  int dim = 0;         // value dimension
  int driver_dim = 0;  // d
  int space_dim = 0;   // dimension of theta
  std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)> value;          // (node, theta)
  std::function<Eigen::MatrixXd(int, const Eigen::VectorXd&)> zeta;           // dim x d
  std::function<std::vector<Eigen::MatrixXd>(int, const Eigen::VectorXd&)> zeta2;  // per comp j: d x d, (i1,i2)
  // Optional analytic spatial derivatives:
  std::function<Eigen::MatrixXd(int, const Eigen::VectorXd&)> dvalue;         // dim x space_dim
  std::function<std::vector<Eigen::MatrixXd>(int, const Eigen::VectorXd&)> dzeta;   // per k: dim x d
  std::function<std::vector<Eigen::MatrixXd>(int, const Eigen::VectorXd&)> d2value; // per comp j: space x space
};

/// Pointwise evaluation of the composed field (mu o nu)_t(theta) = mu_t(nu_t(theta)).
struct StrongFieldLevels {
  Eigen::VectorXd value;                 // dim
  Eigen::MatrixXd zeta;                  // dim x d
  std::vector<Eigen::MatrixXd> zeta2;    // per comp j: d x d, (i1, i2) multiplies zeta^{2;i2,i1}
};
StrongFieldLevels compose_strong(const StrongField& mu, const StrongField& nu, int node,
                                 const Eigen::VectorXd& theta);

/// CSV round trip: header `t, z_*, zzeta_*, ztau_*` (ztau omitted if absent).
void write_controlled_csv(const ControlledPath& z, const std::string& path);

}  // namespace roughctrl

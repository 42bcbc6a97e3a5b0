#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "roughctrl/measures.hpp"

namespace roughctrl {

/// Relaxed control problem data. The drift b(t, x, a) is sampled per action
/// and averaged against node measures; the diffusion sigma(t, x) is control
/// independent. Derivative callbacks are optional: missing ones fall back to
/// central differences with step 1e-6 (1 + |x|).
/// Dsigma returns one m x m block per driver column j with entry
/// (i, k) = d sigma^{ij} / d x_k.
struct ProblemSpec {
  std::string name;
  int state_dim = 0;
  int driver_dim = 0;
  double horizon = 0.0;
  double default_initial = 0.0;  // broadcast to all state components
  ActionGrid actions;

  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, double)> b;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&, double)> Db;
  std::function<Eigen::MatrixXd(double, const Eigen::VectorXd&)> sigma;
  std::function<std::vector<Eigen::MatrixXd>(double, const Eigen::VectorXd&)> Dsigma;
  std::function<double(double, const Eigen::VectorXd&, const DiscreteMeasure&)> F;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const DiscreteMeasure&)> DF;
  std::function<double(const Eigen::VectorXd&)> G;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> DG;

  Eigen::VectorXd initial_state() const {
    return Eigen::VectorXd::Constant(state_dim, default_initial);
  }

  /// Relaxed drift int b(t, x, a) gamma(da) and its state Jacobian.
  Eigen::VectorXd bbar(double t, const Eigen::VectorXd& x, const DiscreteMeasure& m) const;
  Eigen::MatrixXd Dbbar(double t, const Eigen::VectorXd& x, const DiscreteMeasure& m) const;

  /// Derivatives with finite-difference fallbacks.
  Eigen::MatrixXd jac_b(double t, const Eigen::VectorXd& x, double a) const;
  std::vector<Eigen::MatrixXd> jac_sigma(double t, const Eigen::VectorXd& x) const;
  double running_reward(double t, const Eigen::VectorXd& x, const DiscreteMeasure& m) const {
    return F ? F(t, x, m) : 0.0;
  }
  Eigen::VectorXd running_reward_grad(double t, const Eigen::VectorXd& x,
                                      const DiscreteMeasure& m) const {
    return DF ? DF(t, x, m) : Eigen::VectorXd::Zero(state_dim);
  }

  void validate() const;
};

/// Entropy-regularised problem: running reward
///   F(t, y, gamma) = int R(t, y, a) gamma(da) + lambda * entropy(gamma),
/// assembled into spec.F / spec.DF.
struct EntropicSpec {
  ProblemSpec spec;
  double lambda = 1.0;
  std::function<double(double, const Eigen::VectorXd&, double)> R;
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, double)> DR;
};

/// Problem catalog: `linear-additive`, `bilinear-noise`, `sine-drift`.
///   linear-additive : b = a,              sigma = 0.3,    G(x) = x
///   bilinear-noise  : b = a x,            sigma = 0.2 x,  G(x) = x
///   sine-drift      : b = a + 0.3 sin x,  sigma = 0.25,   G(x) = x
/// All use U = [-1, 1] (9 atoms), T = 1, F = 0. On each the optimal relaxed
/// control is the Dirac at a = 1 (the adjoint state stays positive), which
/// makes the Pontryagin residual vanish identically.
ProblemSpec make_problem(const std::string& name);

/// Entropic variant of a catalog problem with per-action reward
/// R(t, x, a) = reward_slope * a.
EntropicSpec make_entropic(const std::string& name, double lambda,
                           double reward_slope = 0.5);

}  // namespace roughctrl

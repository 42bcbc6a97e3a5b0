#include "roughctrl/problem.hpp"

#include <cmath>

namespace roughctrl {

void ProblemSpec::validate() const {
  if (state_dim < 1 || driver_dim < 1) throw InvalidInput("ProblemSpec: dimensions must be positive");
  if (!(horizon > 0.0)) throw InvalidInput("ProblemSpec: horizon must be positive");
  actions.validate();
  if (!b || !sigma || !G || !DG) throw InvalidInput("ProblemSpec: b, sigma, G, DG are required");
}

Eigen::VectorXd ProblemSpec::bbar(double t, const Eigen::VectorXd& x,
                                  const DiscreteMeasure& m) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(state_dim);
  for (int j = 0; j < actions.size(); ++j)
    if (m.p(j) != 0.0) out += m.p(j) * b(t, x, actions.u(j));
  return out;
}

Eigen::MatrixXd ProblemSpec::Dbbar(double t, const Eigen::VectorXd& x,
                                   const DiscreteMeasure& m) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(state_dim, state_dim);
  for (int j = 0; j < actions.size(); ++j)
    if (m.p(j) != 0.0) out += m.p(j) * jac_b(t, x, actions.u(j));
  return out;
}

Eigen::MatrixXd ProblemSpec::jac_b(double t, const Eigen::VectorXd& x, double a) const {
  if (Db) return Db(t, x, a);
  const double h = 1e-6 * (1.0 + x.norm());
  Eigen::MatrixXd jac(state_dim, state_dim);
  for (int k = 0; k < state_dim; ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    jac.col(k) = (b(t, xp, a) - b(t, xm, a)) / (2.0 * h);
  }
  return jac;
}

std::vector<Eigen::MatrixXd> ProblemSpec::jac_sigma(double t, const Eigen::VectorXd& x) const {
  if (Dsigma) return Dsigma(t, x);
  const double h = 1e-6 * (1.0 + x.norm());
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(driver_dim),
                                   Eigen::MatrixXd::Zero(state_dim, state_dim));
  for (int k = 0; k < state_dim; ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const Eigen::MatrixXd diff = (sigma(t, xp) - sigma(t, xm)) / (2.0 * h);
    for (int j = 0; j < driver_dim; ++j) out[static_cast<std::size_t>(j)].col(k) = diff.col(j);
  }
  return out;
}

namespace {

ProblemSpec base_problem(const std::string& name) {
  ProblemSpec ps;
  ps.name = name;
  ps.state_dim = 1;
  ps.driver_dim = 1;
  ps.horizon = 1.0;
  ps.actions = ActionGrid::uniform(-1.0, 1.0, 9);
  ps.G = [](const Eigen::VectorXd& x) { return x(0); };
  ps.DG = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
  if (name == "linear-additive") {
    ps.default_initial = 0.5;
    ps.b = [](double, const Eigen::VectorXd&, double a) {
      return Eigen::VectorXd::Constant(1, a);
    };
    ps.Db = [](double, const Eigen::VectorXd&, double) { return Eigen::MatrixXd::Zero(1, 1); };
    ps.sigma = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, 0.3); };
    ps.Dsigma = [](double, const Eigen::VectorXd&) {
      return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
    };
  } else if (name == "bilinear-noise") {
    ps.default_initial = 1.0;
    ps.b = [](double, const Eigen::VectorXd& x, double a) {
      return Eigen::VectorXd::Constant(1, a * x(0));
    };
    ps.Db = [](double, const Eigen::VectorXd&, double a) {
      return Eigen::MatrixXd::Constant(1, 1, a);
    };
    ps.sigma = [](double, const Eigen::VectorXd& x) {
      return Eigen::MatrixXd::Constant(1, 1, 0.2 * x(0));
    };
    ps.Dsigma = [](double, const Eigen::VectorXd&) {
      return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Constant(1, 1, 0.2)};
    };
  } else if (name == "sine-drift") {
    ps.default_initial = 0.2;
    ps.b = [](double, const Eigen::VectorXd& x, double a) {
      return Eigen::VectorXd::Constant(1, a + 0.3 * std::sin(x(0)));
    };
    ps.Db = [](double, const Eigen::VectorXd& x, double) {
      return Eigen::MatrixXd::Constant(1, 1, 0.3 * std::cos(x(0)));
    };
    ps.sigma = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Constant(1, 1, 0.25); };
    ps.Dsigma = [](double, const Eigen::VectorXd&) {
      return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
    };
  } else {
    throw InvalidInput("make_problem: unknown problem '" + name + "'");
  }
  return ps;
}

}  // namespace

ProblemSpec make_problem(const std::string& name) {
  ProblemSpec ps = base_problem(name);
  ps.F = nullptr;  // running reward is zero on the base catalog
  ps.DF = nullptr;
  ps.validate();
  return ps;
}

EntropicSpec make_entropic(const std::string& name, double lambda, double reward_slope) {
  if (!(lambda > 0.0)) throw InvalidInput("make_entropic: lambda must be positive");
  EntropicSpec es;
  es.lambda = lambda;
  es.R = [reward_slope](double, const Eigen::VectorXd&, double a) { return reward_slope * a; };
  es.DR = [](double, const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(1); };
  es.spec = base_problem(name);
  es.spec.name = name + "-entropic";
  const ActionGrid grid = es.spec.actions;
  auto R = es.R;
  auto DR = es.DR;
  const int m = es.spec.state_dim;
  es.spec.F = [R, grid, lambda](double t, const Eigen::VectorXd& x, const DiscreteMeasure& g) {
    double v = lambda * entropy(g, grid);
    for (int j = 0; j < grid.size(); ++j)
      if (g.p(j) != 0.0) v += g.p(j) * R(t, x, grid.u(j));
    return v;
  };
  es.spec.DF = [DR, grid, m](double t, const Eigen::VectorXd& x, const DiscreteMeasure& g) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < grid.size(); ++j)
      if (g.p(j) != 0.0) v += g.p(j) * DR(t, x, grid.u(j));
    return v;
  };
  es.spec.validate();
  return es;
}

}  // namespace roughctrl

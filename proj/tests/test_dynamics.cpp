#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "roughctrl/dynamics.hpp"

using namespace roughctrl;

namespace {

constexpr double kTwoPi = 6.28318530717958648;

RoughPath smooth_driver(int n, int refine = 8) {
  TimeGrid grid = TimeGrid::uniform(1.0, n);
  return lift_smooth(
      grid,
      [](double t) {
        return Eigen::VectorXd::Constant(1, std::sin(kTwoPi * t) / kTwoPi + 0.5 * t);
      },
      refine);
}

RoughPath fbm_driver(int n, std::uint64_t seed, double hurst = 0.45) {
  TimeGrid grid = TimeGrid::uniform(1.0, n);
  Rng rng(seed);
  return lift_fbm(hurst, 1, grid, rng);
}

/// Scalar problem skeleton (state_dim = driver_dim = 1, T = 1, G(x) = x).
/// Tests override b / sigma / F and their derivatives per case.
ProblemSpec scalar_spec() {
  ProblemSpec spec;
  spec.name = "scalar-test";
  spec.state_dim = 1;
  spec.driver_dim = 1;
  spec.horizon = 1.0;
  spec.default_initial = 0.5;
  spec.actions = ActionGrid::uniform(-1.0, 1.0, 9);
  spec.b = [](double, const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(1); };
  spec.Db = [](double, const Eigen::VectorXd&, double) { return Eigen::MatrixXd::Zero(1, 1); };
  spec.sigma = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
  spec.Dsigma = [](double, const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
  };
  spec.G = [](const Eigen::VectorXd& x) { return x(0); };
  spec.DG = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(1); };
  return spec;
}

RelaxedControl dirac_control(const ProblemSpec& spec, const TimeGrid& grid, int atom) {
  return RelaxedControl::constant(grid, spec.actions, DiscreteMeasure::dirac(spec.actions, atom));
}

RelaxedControl uniform_control(const ProblemSpec& spec, const TimeGrid& grid) {
  return RelaxedControl::constant(grid, spec.actions, DiscreteMeasure::uniform(spec.actions));
}

}  // namespace

TEST_CASE("integrate_rde: zero dynamics keep the state frozen bit-for-bit") {
  ProblemSpec spec = scalar_spec();
  RoughPath rp = fbm_driver(64, 11);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  for (int k = 0; k < rp.grid.nodes(); ++k) CHECK(traj.path.z(k, 0) == 0.5);
}

TEST_CASE("integrate_rde: pure drift b = a integrates to y + a t") {
  ProblemSpec spec = scalar_spec();
  spec.b = [](double, const Eigen::VectorXd&, double a) {
    return Eigen::VectorXd::Constant(1, a);
  };
  RoughPath rp = fbm_driver(64, 12);
  RelaxedControl c = dirac_control(spec, rp.grid, 7);  // a = 0.75
  Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  for (int k = 0; k < rp.grid.nodes(); ++k)
    CHECK(traj.path.z(k, 0) == doctest::Approx(0.5 + 0.75 * rp.grid[k]).epsilon(1e-14));
}

TEST_CASE("integrate_rde: exponential equation matches y exp(zeta_T - zeta_0)") {
  ProblemSpec spec = scalar_spec();
  spec.sigma = [](double, const Eigen::VectorXd& x) {
    return Eigen::MatrixXd::Constant(1, 1, x(0));
  };
  spec.Dsigma = [](double, const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Identity(1, 1)};
  };
  SUBCASE("smooth driver, n = 4096") {
    RoughPath rp = smooth_driver(4096);
    RelaxedControl c = uniform_control(spec, rp.grid);
    Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
    const double exact = 0.5 * std::exp(rp.zeta(rp.grid.steps(), 0) - rp.zeta(0, 0));
    CHECK(oracles::rel_err(traj.terminal()(0), exact) <= 1e-6);
  }
  SUBCASE("fractional driver, n = 4096 (regression pin of the scheme error)") {
    RoughPath rp = fbm_driver(4096, 2024);
    RelaxedControl c = uniform_control(spec, rp.grid);
    Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
    const double exact = 0.5 * std::exp(rp.zeta(rp.grid.steps(), 0) - rp.zeta(0, 0));
    CHECK(oracles::rel_err(traj.terminal()(0), exact) <= 5e-4);
  }
}

TEST_CASE("integrate_rde: flow property, restart from a mid node is exact") {
  ProblemSpec spec = make_problem("bilinear-noise");
  RoughPath rp = fbm_driver(256, 77);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Trajectory full = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  Trajectory tail = integrate_rde(spec, full.state(100), 100, c, rp);
  CHECK(tail.terminal()(0) == full.terminal()(0));
  CHECK(tail.path.z(180, 0) == full.path.z(180, 0));
  CHECK(tail.start == 100);
  CHECK(tail.path.z(40, 0) == full.path.z(100, 0));  // frozen rows replicate the start state
}

TEST_CASE("jacobian: state-independent dynamics have unit flow derivative") {
  ProblemSpec spec = make_problem("linear-additive");
  RoughPath rp = fbm_driver(64, 13);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  Eigen::MatrixXd v = jacobian(spec, traj, c, rp, 0, Eigen::VectorXd::Ones(1));
  for (int k = 0; k < rp.grid.nodes(); ++k) CHECK(v(k, 0) == 1.0);
}

TEST_CASE("jacobian: drift b = x gives the flow e^{t - s}") {
  ProblemSpec spec = scalar_spec();
  spec.b = [](double, const Eigen::VectorXd& x, double) { return x; };
  spec.Db = [](double, const Eigen::VectorXd&, double) { return Eigen::MatrixXd::Identity(1, 1); };
  RoughPath rp = smooth_driver(4096, 2);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  Eigen::MatrixXd v = jacobian(spec, traj, c, rp, 0, Eigen::VectorXd::Ones(1));
  for (int k : {1024, 2048, 4096})
    CHECK(oracles::rel_err(v(k, 0), std::exp(rp.grid[k])) <= 1e-3);
}

TEST_CASE("jacobian: matches a central finite difference of the flow") {
  for (const char* name : {"bilinear-noise", "sine-drift"}) {
    CAPTURE(name);
    ProblemSpec spec = make_problem(name);
    RoughPath rp = fbm_driver(1024, 99);
    RelaxedControl c = uniform_control(spec, rp.grid);
    const Eigen::VectorXd y = spec.initial_state();
    Trajectory traj = integrate_rde(spec, y, 0, c, rp);
    Eigen::MatrixXd v = jacobian(spec, traj, c, rp, 0, Eigen::VectorXd::Ones(1));
    const double h = 1e-5;
    const double up =
        integrate_rde(spec, y + Eigen::VectorXd::Constant(1, h), 0, c, rp).terminal()(0);
    const double dn =
        integrate_rde(spec, y - Eigen::VectorXd::Constant(1, h), 0, c, rp).terminal()(0);
    CHECK(oracles::rel_err(v(rp.grid.steps(), 0), (up - dn) / (2.0 * h)) <= 1e-4);
  }
}

TEST_CASE("jacobian_bound_check: trivial dynamics sit at sup = 1") {
  ProblemSpec spec = scalar_spec();
  RoughPath rp = fbm_driver(128, 21);
  RelaxedControl c = uniform_control(spec, rp.grid);
  JacobianBoundReport rep = jacobian_bound_check(spec, c, rp, {0.5, 1.0, 2.0});
  REQUIRE(rep.sup_jac.size() == 3);
  for (double s : rep.sup_jac) CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rep.fitted_constant > 0.0);
}

TEST_CASE("jacobian_bound_check: bilinear growth is monotone and bounded by the fit") {
  ProblemSpec spec = make_problem("bilinear-noise");
  RoughPath rp = fbm_driver(128, 22);
  RelaxedControl c = uniform_control(spec, rp.grid);
  std::vector<double> scales{0.5, 1.0, 1.5, 2.0};
  JacobianBoundReport rep = jacobian_bound_check(spec, c, rp, scales);
  REQUIRE(rep.norm_arg.size() == scales.size());
  for (std::size_t i = 0; i + 1 < scales.size(); ++i) {
    CHECK(rep.norm_arg[i] < rep.norm_arg[i + 1]);
    CHECK(rep.sup_jac[i] <= rep.sup_jac[i + 1] + 1e-12);
  }
  const double cfit = rep.fitted_constant;
  CHECK(cfit > 0.0);
  for (std::size_t i = 0; i < scales.size(); ++i)
    CHECK(rep.sup_jac[i] <= cfit * std::exp(cfit * rep.norm_arg[i]) * (1.0 + 1e-9));
}

TEST_CASE("linear engine: zero coefficients propagate the start vector unchanged") {
  RoughPath rp = fbm_driver(32, 31);
  LinearCoeffs lc;
  lc.drift.assign(32, Eigen::MatrixXd::Zero(2, 2));
  lc.rough.assign(32, {Eigen::MatrixXd::Zero(2, 2)});
  Eigen::VectorXd v0(2);
  v0 << 1.25, -0.5;
  Eigen::MatrixXd v = integrate_linear_forward(lc, rp, 0, v0, Eigen::MatrixXd());
  for (int k = 0; k <= 32; ++k) {
    CHECK(v(k, 0) == 1.25);
    CHECK(v(k, 1) == -0.5);
  }
}

TEST_CASE("linear engine: unit drift coefficient reproduces e^t") {
  RoughPath rp = smooth_driver(4096, 2);
  const int n = rp.grid.steps();
  LinearCoeffs lc;
  lc.drift.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Identity(1, 1));
  lc.rough.assign(static_cast<std::size_t>(n), {Eigen::MatrixXd::Zero(1, 1)});
  Eigen::MatrixXd v =
      integrate_linear_forward(lc, rp, 0, Eigen::VectorXd::Ones(1), Eigen::MatrixXd());
  CHECK(oracles::rel_err(v(n, 0), std::exp(1.0)) <= 1e-3);
}

TEST_CASE("linear engine: backward solve inverts the negated forward germs exactly") {
  TimeGrid grid = TimeGrid::uniform(1.0, 64);
  Rng rng(404);
  RoughPath rp = lift_fbm(0.45, 2, grid, rng);
  const int n = grid.steps();
  LinearCoeffs lc;
  lc.drift.reserve(static_cast<std::size_t>(n));
  lc.rough.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd a = oracles::random_normal_vector(rng, 4);
    Eigen::VectorXd b1 = oracles::random_normal_vector(rng, 4);
    Eigen::VectorXd b2 = oracles::random_normal_vector(rng, 4);
    lc.drift.push_back(0.5 * Eigen::Map<Eigen::MatrixXd>(a.data(), 2, 2));
    lc.rough.push_back({0.5 * Eigen::Map<Eigen::MatrixXd>(b1.data(), 2, 2),
                        0.5 * Eigen::Map<Eigen::MatrixXd>(b2.data(), 2, 2)});
  }
  LinearCoeffs neg = lc;
  for (auto& a : neg.drift) a = -a;
  for (auto& bs : neg.rough)
    for (auto& bj : bs) bj = -bj;
  Eigen::VectorXd w0(2);
  w0 << 1.0, -2.0;
  Eigen::MatrixXd w = integrate_linear_forward(neg, rp, 0, w0, Eigen::MatrixXd());
  Eigen::MatrixXd p = integrate_linear_backward(lc, rp, w.row(n).transpose(), Eigen::MatrixXd());
  double worst = 0.0;
  for (int k = 0; k <= n; ++k) worst = std::max(worst, (p.row(k) - w.row(k)).cwiseAbs().maxCoeff());
  CHECK(worst <= 1e-12 * w.cwiseAbs().maxCoeff());
}

TEST_CASE("linear engine: superposition in the start vector") {
  TimeGrid grid = TimeGrid::uniform(1.0, 64);
  Rng rng(405);
  RoughPath rp = lift_fbm(0.45, 1, grid, rng);
  const int n = grid.steps();
  LinearCoeffs lc;
  for (int k = 0; k < n; ++k) {
    lc.drift.push_back(Eigen::MatrixXd::Constant(1, 1, std::sin(0.37 * k)));
    lc.rough.push_back({Eigen::MatrixXd::Constant(1, 1, 0.4 * std::cos(0.11 * k))});
  }
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.7);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(1, -1.3);
  Eigen::MatrixXd va = integrate_linear_forward(lc, rp, 0, a, Eigen::MatrixXd());
  Eigen::MatrixXd vb = integrate_linear_forward(lc, rp, 0, b, Eigen::MatrixXd());
  Eigen::MatrixXd vab = integrate_linear_forward(lc, rp, 0, a + b, Eigen::MatrixXd());
  for (int k = 0; k <= n; ++k)
    CHECK(vab(k, 0) == doctest::Approx(va(k, 0) + vb(k, 0)).epsilon(1e-12));
}

TEST_CASE("adjoint: linear-additive problem has p identically one") {
  ProblemSpec spec = make_problem("linear-additive");
  RoughPath rp = fbm_driver(128, 41);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  Eigen::MatrixXd p = adjoint(spec, traj, c, rp);
  for (int k = 0; k < rp.grid.nodes(); ++k) CHECK(p(k, 0) == 1.0);
}

TEST_CASE("adjoint: drift b = x gives p_t = e^{T - t}") {
  ProblemSpec spec = scalar_spec();
  spec.b = [](double, const Eigen::VectorXd& x, double) { return x; };
  spec.Db = [](double, const Eigen::VectorXd&, double) { return Eigen::MatrixXd::Identity(1, 1); };
  RoughPath rp = smooth_driver(4096, 2);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  Eigen::MatrixXd p = adjoint(spec, traj, c, rp);
  for (int k : {0, 1024, 2048, 4096})
    CHECK(oracles::rel_err(p(k, 0), std::exp(1.0 - rp.grid[k])) <= 1e-3);
}

TEST_CASE("adjoint: constant running-reward gradient adds c (T - t)") {
  ProblemSpec spec = scalar_spec();
  spec.F = [](double, const Eigen::VectorXd& x, const DiscreteMeasure&) { return 0.75 * x(0); };
  spec.DF = [](double, const Eigen::VectorXd&, const DiscreteMeasure&) {
    return Eigen::VectorXd::Constant(1, 0.75);
  };
  RoughPath rp = fbm_driver(64, 42);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Trajectory traj = integrate_rde(spec, spec.initial_state(), 0, c, rp);
  Eigen::MatrixXd p = adjoint(spec, traj, c, rp);
  for (int k = 0; k < rp.grid.nodes(); ++k)
    CHECK(p(k, 0) == doctest::Approx(1.0 + 0.75 * (1.0 - rp.grid[k])).epsilon(1e-13));
}

TEST_CASE("reward: closed forms") {
  RoughPath rp = fbm_driver(128, 51);
  SUBCASE("constant terminal reward ignores the dynamics") {
    ProblemSpec spec = scalar_spec();
    spec.G = [](const Eigen::VectorXd&) { return 2.75; };
    spec.DG = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
    RelaxedControl c = uniform_control(spec, rp.grid);
    CHECK(reward(spec, spec.initial_state(), 0, c, rp) == 2.75);
  }
  SUBCASE("unit running reward accumulates T - t_start") {
    ProblemSpec spec = scalar_spec();
    spec.F = [](double, const Eigen::VectorXd&, const DiscreteMeasure&) { return 1.0; };
    spec.G = [](const Eigen::VectorXd&) { return 0.0; };
    spec.DG = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); };
    RelaxedControl c = uniform_control(spec, rp.grid);
    for (int k : {0, 32, 96})
      CHECK(reward(spec, spec.initial_state(), k, c, rp) ==
            doctest::Approx(1.0 - rp.grid[k]).epsilon(1e-13));
  }
  SUBCASE("linear-additive dirac control: y + a (T - t) + 0.3 (zeta_T - zeta_t)") {
    ProblemSpec spec = make_problem("linear-additive");
    RelaxedControl c = dirac_control(spec, rp.grid, 8);  // a = 1
    for (int k : {0, 64}) {
      const double want =
          0.5 + 1.0 * (1.0 - rp.grid[k]) + 0.3 * (rp.zeta(rp.grid.steps(), 0) - rp.zeta(k, 0));
      CHECK(reward(spec, spec.initial_state(), k, c, rp) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("value gradients: the three entry points agree") {
  ProblemSpec spec = make_problem("bilinear-noise");
  RoughPath rp = fbm_driver(256, 61);
  RelaxedControl c = uniform_control(spec, rp.grid);
  const Eigen::VectorXd y = spec.initial_state();
  Trajectory traj = integrate_rde(spec, y, 0, c, rp);
  Eigen::VectorXd g0 = grad_value(spec, y, 0, c, rp);
  Eigen::VectorXd g1 = grad_value_along(spec, traj, c, rp, 0);
  Eigen::MatrixXd table = grad_value_table(spec, traj, c, rp);
  CHECK((g0 - g1).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(table(0, 0) - g1(0)) <= 1e-12 * std::max(1.0, std::abs(g1(0))));
  for (int k : {64, 128, 200}) {
    const double along = grad_value_along(spec, traj, c, rp, k)(0);
    CHECK(std::abs(table(k, 0) - along) <= 1e-12 * std::max(1.0, std::abs(along)));
  }
}

TEST_CASE("value gradients: linear-additive gradient is exactly one") {
  ProblemSpec spec = make_problem("linear-additive");
  RoughPath rp = fbm_driver(64, 62);
  RelaxedControl c = uniform_control(spec, rp.grid);
  Eigen::VectorXd g = grad_value(spec, spec.initial_state(), 0, c, rp);
  CHECK(g(0) == 1.0);
}

TEST_CASE("noise flow: zero diffusion is the identity map") {
  ProblemSpec spec = scalar_spec();
  RoughPath rp = fbm_driver(64, 71);
  NoiseFlow flow(spec, rp);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 1.75);
  CHECK(flow.phi(40, eta)(0) == 1.75);
  CHECK(flow.chi(40, eta)(0) == doctest::Approx(1.75).epsilon(1e-12));
  auto [val, jac] = flow.phi_with_jacobian(40, eta);
  CHECK(val(0) == 1.75);
  CHECK(jac(0, 0) == 1.0);
}

TEST_CASE("noise flow: additive diffusion translates by sigma (zeta_t - zeta_0)") {
  ProblemSpec spec = make_problem("linear-additive");  // sigma = 0.3
  RoughPath rp = fbm_driver(128, 72);
  NoiseFlow flow(spec, rp);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, -0.25);
  for (int k : {0, 31, 128}) {
    const double want = -0.25 + 0.3 * (rp.zeta(k, 0) - rp.zeta(0, 0));
    CHECK(flow.phi(k, eta)(0) == doctest::Approx(want).epsilon(1e-13));
    auto [val, jac] = flow.phi_with_jacobian(k, eta);
    CHECK(jac(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(val(0) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("noise flow: multiplicative diffusion is linear in eta") {
  ProblemSpec spec = make_problem("bilinear-noise");  // sigma = 0.2 x
  RoughPath rp = fbm_driver(256, 73);
  NoiseFlow flow(spec, rp);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.6);
  const double phi1 = flow.phi(256, eta)(0);
  const double phi2 = flow.phi(256, 2.0 * eta)(0);
  CHECK(phi2 == doctest::Approx(2.0 * phi1).epsilon(1e-13));
  auto [val, jac] = flow.phi_with_jacobian(256, eta);
  CHECK(jac(0, 0) == doctest::Approx(val(0) / eta(0)).epsilon(1e-12));
}

TEST_CASE("noise flow: chi inverts phi to 1e-8") {
  RoughPath rp = fbm_driver(512, 74);
  for (const char* name : {"linear-additive", "bilinear-noise"}) {
    CAPTURE(name);
    ProblemSpec spec = make_problem(name);
    NoiseFlow flow(spec, rp);
    for (int node : {0, 128, 384, 512}) {
      for (double e : {0.25, 1.0, 2.5}) {
        Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, e);
        Eigen::VectorXd target = flow.phi(node, eta);
        CHECK((flow.chi(node, target) - eta).cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
  }
}

TEST_CASE("integrate_rde: runaway drift raises DivergenceError") {
  ProblemSpec spec = scalar_spec();
  spec.default_initial = 1.0;
  spec.b = [](double, const Eigen::VectorXd& x, double) { return 1e155 * x; };
  spec.Db = [](double, const Eigen::VectorXd&, double) {
    return Eigen::MatrixXd::Constant(1, 1, 1e155);
  };
  RoughPath rp = fbm_driver(16, 81);
  RelaxedControl c = uniform_control(spec, rp.grid);
  CHECK_THROWS_AS(integrate_rde(spec, spec.initial_state(), 0, c, rp), DivergenceError);
}

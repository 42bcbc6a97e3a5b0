#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "roughctrl/csv.hpp"
#include "roughctrl/softpolicy.hpp"

using namespace roughctrl;

namespace {

RoughPath fbm_driver(int n, std::uint64_t seed, double hurst = 0.45) {
  TimeGrid grid = TimeGrid::uniform(1.0, n);
  Rng rng(seed);
  return lift_fbm(hurst, 1, grid, rng);
}

RelaxedControl uniform_control(const ProblemSpec& spec, const TimeGrid& grid) {
  return RelaxedControl::constant(grid, spec.actions, DiscreteMeasure::uniform(spec.actions));
}

/// Entropic problem with no dynamics and no per-action reward: the only
/// reward is lambda * entropy, maximised by the uniform law.
EntropicSpec zero_espec(double lambda) {
  EntropicSpec es = make_entropic("linear-additive", lambda, 0.0);
  es.spec.b = [](double, const Eigen::VectorXd&, double) { return Eigen::VectorXd::Zero(1); };
  es.spec.Db = [](double, const Eigen::VectorXd&, double) { return Eigen::MatrixXd::Zero(1, 1); };
  return es;
}

}  // namespace

TEST_CASE("gibbs_optimizer: constant scores give the uniform law") {
  ActionGrid actions = ActionGrid::uniform(-1.0, 1.0, 9);
  GibbsResult g = gibbs_optimizer(actions, Eigen::VectorXd::Constant(9, 1.7), 0.6);
  DiscreteMeasure u = DiscreteMeasure::uniform(actions);
  CHECK((g.measure.p - u.p).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(g.value == doctest::Approx(1.7 + 0.6 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("gibbs_optimizer: pinned value log(e - 1) for h(a) = a on [0, 1]") {
  ActionGrid actions = ActionGrid::uniform(0.0, 1.0, 201);
  Eigen::VectorXd h(201);
  for (int j = 0; j < 201; ++j) h(j) = actions.u(j);
  GibbsResult g = gibbs_optimizer(actions, h, 1.0);
  CHECK(std::abs(g.value - std::log(std::exp(1.0) - 1.0)) <= 1e-4);
}

TEST_CASE("gibbs_optimizer: dominates random competitors and attains its value") {
  ActionGrid actions = ActionGrid::uniform(-1.0, 1.0, 9);
  Rng rng(2311);
  for (int draw = 0; draw < 50; ++draw) {
    Eigen::VectorXd h = oracles::random_normal_vector(rng, 9);
    const double lambda = 0.2 + rng.uniform01();
    GibbsResult g = gibbs_optimizer(actions, h, lambda);
    CHECK(entropic_lagrangian(actions, g.measure, h, lambda) ==
          doctest::Approx(g.value).epsilon(1e-12));
    for (int trial = 0; trial < 1000; ++trial) {
      DiscreteMeasure m = oracles::random_simplex(rng, 9);
      CHECK(entropic_lagrangian(actions, m, h, lambda) <= g.value + 1e-12);
    }
  }
}

TEST_CASE("feedback_policy: Gibbs density in the per-action Hamiltonian") {
  EntropicSpec espec = make_entropic("linear-additive", 0.8);
  const ActionGrid& actions = espec.spec.actions;
  Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 0.4);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 1.0);
  DiscreteMeasure m = feedback_policy(espec, 0.3, y, p);
  // htilde = (p + 0.5) a: interior cells have equal width, so successive
  // weights are in the ratio exp(1.5 du / lambda)
  const double want = std::exp(1.5 * (actions.u(2) - actions.u(1)) / 0.8);
  for (int j = 1; j + 2 < actions.size(); ++j)
    CHECK(m.p(j + 1) / m.p(j) == doctest::Approx(want).epsilon(1e-12));
  // huge temperature flattens the policy
  DiscreteMeasure flat = feedback_policy(make_entropic("linear-additive", 1e6), 0.3, y, p);
  CHECK((flat.p - DiscreteMeasure::uniform(actions).p).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("open_loop_policy: linear-additive converges to the Gibbs law in few sweeps") {
  EntropicSpec espec = make_entropic("linear-additive", 0.5);
  RoughPath rp = fbm_driver(256, 301);
  RelaxedControl init = uniform_control(espec.spec, rp.grid);
  OpenLoopResult res = open_loop_policy(espec, rp, espec.spec.initial_state(), init, 1e-10, 50);
  CHECK(res.converged);
  CHECK(res.iterations <= 3);
  CHECK(res.last_step <= 1e-10);
  // the fixpoint density is proportional to exp(1.5 a / lambda) at every node
  const ActionGrid& actions = espec.spec.actions;
  const double want = std::exp(1.5 * (actions.u(2) - actions.u(1)) / 0.5);
  for (int k : {0, 100, 256})
    for (int j = 1; j + 2 < actions.size(); ++j)
      CHECK(res.control.at(k).p(j + 1) / res.control.at(k).p(j) ==
            doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("open_loop_policy: tiny temperature concentrates on the best action") {
  EntropicSpec espec = make_entropic("linear-additive", 1e-3);
  RoughPath rp = fbm_driver(128, 302);
  RelaxedControl init = uniform_control(espec.spec, rp.grid);
  OpenLoopResult res = open_loop_policy(espec, rp, espec.spec.initial_state(), init, 1e-10, 50);
  CHECK(res.converged);
  for (int k : {0, 64, 128}) CHECK(res.control.at(k).p(8) >= 0.999);
}

TEST_CASE("open_loop_policy: no dynamics and no reward leaves the uniform law") {
  EntropicSpec espec = zero_espec(0.7);
  RoughPath rp = fbm_driver(64, 303);
  RelaxedControl init =
      RelaxedControl::constant(rp.grid, espec.spec.actions,
                               DiscreteMeasure::dirac(espec.spec.actions, 3));
  OpenLoopResult res = open_loop_policy(espec, rp, espec.spec.initial_state(), init, 1e-10, 50);
  CHECK(res.converged);
  DiscreteMeasure u = DiscreteMeasure::uniform(espec.spec.actions);
  for (int k = 0; k < rp.grid.nodes(); ++k)
    CHECK((res.control.at(k).p - u.p).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("q_policy_identity_check: vanishes at the converged policy, flags others") {
  EntropicSpec espec = make_entropic("linear-additive", 0.5);
  RoughPath rp = fbm_driver(512, 304);
  const Eigen::VectorXd y = espec.spec.initial_state();
  RelaxedControl init = uniform_control(espec.spec, rp.grid);
  OpenLoopResult res = open_loop_policy(espec, rp, y, init, 1e-10, 50);
  REQUIRE(res.converged);
  QPolicyCheck at_fix = q_policy_identity_check(espec, res.control, rp, y);
  CHECK(at_fix.normalization_gap <= 1e-6);
  CHECK(at_fix.density_gap <= 1e-3);
  QPolicyCheck at_uniform = q_policy_identity_check(espec, init, rp, y);
  CHECK(at_uniform.normalization_gap > 1e-2);
  CHECK(at_uniform.density_gap > 1e-2);
}

TEST_CASE("improve: strict gain from uniform, fixpoint stays put") {
  EntropicSpec espec = make_entropic("linear-additive", 0.5);
  RoughPath rp = fbm_driver(256, 305);
  const Eigen::VectorXd y = espec.spec.initial_state();
  RelaxedControl init = uniform_control(espec.spec, rp.grid);
  ImproveResult first = improve(espec, init, rp, y);
  CHECK(first.value_after > first.value_before + 0.1);
  CHECK(first.q_table.rows() == rp.grid.nodes());
  CHECK(first.q_table.cols() == espec.spec.actions.size());
  OpenLoopResult fix = open_loop_policy(espec, rp, y, init, 1e-12, 50);
  REQUIRE(fix.converged);
  ImproveResult again = improve(espec, fix.control, rp, y);
  CHECK(again.value_after >= again.value_before - 1e-12);
  for (int k = 0; k < rp.grid.nodes(); ++k)
    CHECK(wasserstein2(espec.spec.actions, again.control.at(k), fix.control.at(k)) <= 1e-6);
}

TEST_CASE("improve: zero problem has q = -lambda log 2 and keeps the uniform law") {
  EntropicSpec espec = zero_espec(0.9);
  RoughPath rp = fbm_driver(64, 306);
  RelaxedControl init = uniform_control(espec.spec, rp.grid);
  ImproveResult res = improve(espec, init, rp, espec.spec.initial_state());
  const double want = -0.9 * std::log(2.0);
  CHECK((res.q_table.array() - want).abs().maxCoeff() <= 1e-12);
  DiscreteMeasure u = DiscreteMeasure::uniform(espec.spec.actions);
  for (int k = 0; k < rp.grid.nodes(); ++k)
    CHECK((res.control.at(k).p - u.p).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("policy_iteration: monotone from random starts, converges to the open-loop fixpoint") {
  EntropicSpec espec = make_entropic("linear-additive", 0.5);
  RoughPath rp = fbm_driver(512, 307);
  const Eigen::VectorXd y = espec.spec.initial_state();
  OpenLoopResult ol = open_loop_policy(espec, rp, y, uniform_control(espec.spec, rp.grid),
                                       1e-12, 50);
  REQUIRE(ol.converged);
  Rng rng(308);
  for (int start = 0; start < 3; ++start) {
    CAPTURE(start);
    RelaxedControl init = uniform_control(espec.spec, rp.grid);
    for (int k = 0; k < rp.grid.nodes(); ++k)
      init.gamma[static_cast<std::size_t>(k)] =
          oracles::random_simplex(rng, espec.spec.actions.size());
    PolicyIterationResult res = policy_iteration(espec, rp, y, init, PolicyIterationOptions{});
    CHECK(res.converged);
    for (std::size_t i = 1; i < res.log.size(); ++i)
      CHECK(res.log[i].value >= res.log[i - 1].value - 1e-6);
    double worst = 0.0;
    for (int k = 0; k < rp.grid.nodes(); ++k)
      worst = std::max(worst,
                       wasserstein2(espec.spec.actions, res.control.at(k), ol.control.at(k)));
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("policy_iteration: final policies get more diffuse as lambda grows") {
  RoughPath rp = fbm_driver(128, 309);
  double ent_low = 0.0, ent_high = 0.0;
  for (double lambda : {0.3, 1.5}) {
    EntropicSpec espec = make_entropic("linear-additive", lambda);
    RelaxedControl init = uniform_control(espec.spec, rp.grid);
    PolicyIterationResult res =
        policy_iteration(espec, rp, espec.spec.initial_state(), init, PolicyIterationOptions{});
    REQUIRE(res.converged);
    (lambda < 1.0 ? ent_low : ent_high) = res.log.back().entropy_mean;
  }
  CHECK(ent_high > ent_low);
}

TEST_CASE("policy_iteration: an impossible slack raises MonotonicityError") {
  EntropicSpec espec = make_entropic("linear-additive", 0.5);
  RoughPath rp = fbm_driver(64, 310);
  RelaxedControl init = uniform_control(espec.spec, rp.grid);
  PolicyIterationOptions opts;
  opts.monotone_slack = -10.0;  // demands a gain of 10 per sweep
  try {
    policy_iteration(espec, rp, espec.spec.initial_state(), init, opts);
    FAIL("expected MonotonicityError");
  } catch (const MonotonicityError& e) {
    CHECK(e.iteration >= 0);
    CHECK(e.value_after < e.value_before + 10.0);
  }
}

TEST_CASE("hat_hamiltonian: equals the plain Hamiltonian when sigma vanishes") {
  EntropicSpec espec = zero_espec(0.4);
  espec.spec.sigma = [](double, const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(1, 1); };
  espec.spec.Dsigma = [](double, const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
  };
  RoughPath rp = fbm_driver(64, 311);
  NoiseFlow flow(espec.spec, rp);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.9);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 1.3);
  DiscreteMeasure m = DiscreteMeasure::uniform(espec.spec.actions);
  const double hhat = hat_hamiltonian(espec.spec, flow, 32, eta, m, p);
  const double h = hamiltonian(espec.spec, rp.grid[32], eta, m, p);
  CHECK(hhat == doctest::Approx(h).epsilon(1e-10));
}

TEST_CASE("hat_hamiltonian: additive noise shifts the state argument") {
  EntropicSpec espec = make_entropic("linear-additive", 0.6);
  RoughPath rp = fbm_driver(128, 312);
  NoiseFlow flow(espec.spec, rp);
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, -0.2);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 0.8);
  DiscreteMeasure m = DiscreteMeasure::dirac(espec.spec.actions, 6);
  for (int node : {0, 50, 128}) {
    const Eigen::VectorXd x = flow.phi(node, eta);
    CHECK(x(0) == doctest::Approx(-0.2 + 0.3 * (rp.zeta(node, 0) - rp.zeta(0, 0))).epsilon(1e-12));
    const double hhat = hat_hamiltonian(espec.spec, flow, node, eta, m, p);
    const double h = hamiltonian(espec.spec, rp.grid[node], x, m, p);
    CHECK(hhat == doctest::Approx(h).epsilon(1e-8));
  }
}

TEST_CASE("hat_hamiltonian: the Gibbs law built from dirac evaluations dominates") {
  EntropicSpec espec = make_entropic("bilinear-noise", 0.5);
  RoughPath rp = fbm_driver(128, 313);
  NoiseFlow flow(espec.spec, rp);
  const ActionGrid& actions = espec.spec.actions;
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 0.9);
  const int node = 64;
  Eigen::VectorXd h(actions.size());
  for (int j = 0; j < actions.size(); ++j)
    h(j) = hat_hamiltonian(espec.spec, flow, node, eta, DiscreteMeasure::dirac(actions, j), p) -
           0.5 * std::log(actions.du(j));
  GibbsResult g = gibbs_optimizer(actions, h, 0.5);
  const double best = hat_hamiltonian(espec.spec, flow, node, eta, g.measure, p);
  CHECK(best == doctest::Approx(g.value).epsilon(1e-10));
  Rng rng(314);
  for (int trial = 0; trial < 100; ++trial) {
    DiscreteMeasure m = oracles::random_simplex(rng, actions.size());
    CHECK(hat_hamiltonian(espec.spec, flow, node, eta, m, p) <= best + 1e-10);
  }
}

TEST_CASE("write_iteration_csv: one row per sweep") {
  EntropicSpec espec = make_entropic("linear-additive", 0.5);
  RoughPath rp = fbm_driver(64, 315);
  RelaxedControl init = uniform_control(espec.spec, rp.grid);
  PolicyIterationResult res =
      policy_iteration(espec, rp, espec.spec.initial_state(), init, PolicyIterationOptions{});
  const std::string path = (std::filesystem::temp_directory_path() / "iters.csv").string();
  write_iteration_csv(res.log, path);
  CsvTable table = read_csv(path);
  CHECK(table.header == std::vector<std::string>{"iter", "J", "max_W2_step", "entropy_mean"});
  CHECK(table.rows.size() == res.log.size());
  std::filesystem::remove(path);
}

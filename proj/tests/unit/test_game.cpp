#include "fixtures.hpp"

#include "qgame/errors.hpp"

#include <doctest.h>

using namespace qgame;
using namespace fixtures;

namespace {

// Smallest eigenvalue of a symmetric 2x2 matrix in closed form.
double min_eig_2x2(const Mat& s) {
  const double a = s(0, 0), b = s(0, 1), c = s(1, 1);
  return 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
}

SimulationSetup single_setup(const FeedbackPolicy& policy, double x, int horizon) {
  SimulationSetup s;
  s.policies = {policy};
  s.initial_states = {vec({x})};
  s.initial_leader = vec({0.0});
  s.horizon = horizon;
  return s;
}

}  // namespace

TEST_SUITE("game") {

TEST_CASE("cooperative stage cost") {
  const auto cfg = fleet();
  const GameWeights w = cfg.weights(GameMode::cooperative);
  const GraphTopology t = cfg.topology();
  const Vec z1 = Vec::Zero(1), one = Vec::Ones(1);
  CHECK(stage_cost_coop(w, t, 3, Vec::Zero(2), z1, {{0, z1}}, z1, {{0, z1}}) == 0.0);
  CHECK(stage_cost_coop(w, t, 3, vec({1.0, 0.0}), one, {{0, z1}}, one, {{0, z1}}) == doctest::Approx(1.0));
  CHECK(stage_cost_coop(w, t, 3, Vec::Zero(2), z1, {{0, z1}}, one, {{0, z1}}) == doctest::Approx(-1.0));
  CHECK(stage_cost_coop(w, t, 3, Vec::Zero(2), z1, {{0, one}}, z1, {{0, z1}}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(stage_cost_noncoop(w, t, 3, Vec::Zero(2), z1, {{0, z1}}, z1, {{0, z1}}), Error);
  CHECK_THROWS_AS(stage_cost_coop(w, t, 3, Vec::Zero(2), z1, {}, z1, {{0, z1}}), Error);
}

TEST_CASE("non-cooperative stage cost penalizes neighbor controls negatively") {
  const auto cfg = fleet();
  const GameWeights w = cfg.weights(GameMode::noncooperative);
  const GraphTopology t = cfg.topology();
  const Vec z1 = Vec::Zero(1), one = Vec::Ones(1);
  CHECK(stage_cost_noncoop(w, t, 3, Vec::Zero(2), z1, {{0, z1}}, z1, {{0, z1}}) == 0.0);
  CHECK(stage_cost_noncoop(w, t, 3, Vec::Zero(2), z1, {{0, one}}, z1, {{0, z1}}) == doctest::Approx(-1.0));
  CHECK(stage_cost_noncoop(w, t, 3, Vec::Zero(2), z1, {{0, z1}}, z1, {{0, one}}) == doctest::Approx(-1.0));
  CHECK(stage_cost_noncoop(w, t, 3, vec({1.0, 1.0}), one, {{0, z1}}, z1, {{0, z1}}) == doctest::Approx(3.0));
}

TEST_CASE("cost-to-go") {
  ScalarGame g;
  SUBCASE("zero trajectory") {
    const TrajectoryLog log = simulate(g.model, g.topo, g.weights, single_setup(FeedbackPolicy::zero(1, 1, 1), 0.0, 20));
    CHECK(cost_to_go(log, 0).total == 0.0);
  }
  SUBCASE("one-step log equals the first stage cost") {
    const TrajectoryLog log =
        simulate(g.model, g.topo, g.weights, single_setup(FeedbackPolicy::linear(scalar(0.3), scalar(-0.1)), 1.0, 1));
    CHECK(cost_to_go(log, 0).total == log.costs[0][0]);
  }
  SUBCASE("saddle rollout reproduces the Riccati value") {
    const ValueKernel v = riccati_oracle_single_agent(g.model, g.topo, g.weights, 0);
    const auto [k, l] = saddle_gains(g.model, g.topo, g.weights, 0, v.P);
    const TrajectoryLog log =
        simulate(g.model, g.topo, g.weights, single_setup(FeedbackPolicy::linear(k, l), 1.5, 300));
    const CostToGo c = cost_to_go(log, 0);
    const double d0 = log.errors[0][0](0);
    CHECK(c.total == doctest::Approx(d0 * v.P(0, 0) * d0).epsilon(1e-10));
    CHECK(c.tail < 1e-12);
  }
}

TEST_CASE("policies from a value kernel, cooperative") {
  const FleetModel unit(scalar(0.5), {scalar(1.0)}, {scalar(1.0)});
  const GraphTopology pin = GraphTopology::build({}, {0}, 1);
  const GameWeights w =
      GameWeights::uniform(unit, pin, GameMode::cooperative, scalar(1), scalar(1), scalar(1), scalar(1), scalar(1), 1.0);
  const ValueKernel v{0, scalar(1.0)};
  const auto zero = policies_from_value_coop(unit, pin, w, 0, v, vec({0.0}));
  CHECK(zero.u.isZero());
  CHECK(zero.w.isZero());
  const auto pair = policies_from_value_coop(unit, pin, w, 0, v, vec({0.7}));
  CHECK(pair.u(0) == doctest::Approx(0.7));
  CHECK(pair.w(0) == doctest::Approx(-0.7));

  // Simultaneous solve: the pair must be consistent with the next error it produces.
  ScalarGame g;
  const ValueKernel pv{0, scalar(1.3)};
  const Vec d = vec({0.9});
  const auto st = stationary_policies_from_value_coop(g.model, g.topo, g.weights, 0, pv, d, Vec::Zero(1));
  const Vec next = step_error_dynamics(g.model, g.topo, 0, d, st.u, {}, st.w, {});
  const auto check = policies_from_value_coop(g.model, g.topo, g.weights, 0, pv, next);
  CHECK(std::abs(check.u(0) - st.u(0)) < 1e-12);
  CHECK(std::abs(check.w(0) - st.w(0)) < 1e-12);
}

TEST_CASE("policies from a value kernel, non-cooperative") {
  const auto cfg = fleet();
  const FleetModel m = cfg.model();
  const GraphTopology t = cfg.topology();
  const GameWeights w = cfg.weights(GameMode::noncooperative);
  const ValueKernel v{3, Mat::Identity(2, 2)};
  const auto zero = policies_from_value_noncoop(m, t, w, 3, v, Vec::Zero(2));
  CHECK(zero.u.isZero());
  CHECK(zero.w.isZero());
  CHECK(zero.u_neighbors.size() == 1);
  CHECK(zero.u_neighbors[0].isZero());
  const Vec next = vec({1.0, 1.0});
  const auto a = policies_from_value_noncoop(m, t, w, 3, v, next);
  const double ei = m.disturbance_input(3).col(0).dot(next), ej = m.disturbance_input(0).col(0).dot(next);
  CHECK(a.w(0) == doctest::Approx(-1.4 * ei));
  CHECK(a.w_neighbors[0](0) == doctest::Approx(0.4 * ej));
  CHECK(a.u(0) == doctest::Approx(1.4 * m.control_input(3).col(0).dot(next)));
  CHECK(a.u_neighbors[0](0) == doctest::Approx(0.4 * m.control_input(0).col(0).dot(next)));
  ScalarGame g(2.0, GameMode::noncooperative);
  const auto lone = policies_from_value_noncoop(g.model, g.topo, g.weights, 0, ValueKernel{0, scalar(1)}, vec({1.0}));
  CHECK(lone.u_neighbors.empty());
  CHECK(lone.w_neighbors.empty());
}

TEST_CASE("attenuation checks") {
  const auto cfg = fleet();
  const FleetModel m = cfg.model();
  const GraphTopology t = cfg.topology();
  SUBCASE("reference fleet margins against closed-form eigenvalues") {
    const auto rep = check_attenuation_coop(m, t, cfg.weights(GameMode::cooperative));
    REQUIRE(rep.size() == 4);
    for (int i = 0; i < 4; ++i) {
      const Mat b = m.control_input(i), e = m.disturbance_input(i);
      const double expected = min_eig_2x2(b * b.transpose() - e * e.transpose());
      CHECK(rep[i].margin == doctest::Approx(expected).epsilon(1e-12));
      CHECK(rep[i].pass == (expected >= -1e-12));
    }
  }
  SUBCASE("large attenuation always passes") {
    GameWeights w = cfg.weights(GameMode::cooperative);
    w.attenuation = 1e8;
    for (const auto& r : check_attenuation_coop(m, t, w)) CHECK(r.pass);
  }
  SUBCASE("E = B, R = T, beta = 0.5 is violated") {
    const Mat b = mat({{0.3}, {0.4}});
    const FleetModel same(m.drift(), {b}, {b});
    const GraphTopology pin = GraphTopology::build({}, {0}, 1);
    const GameWeights w = GameWeights::uniform(same, pin, GameMode::cooperative, Mat::Identity(2, 2), scalar(1),
                                               scalar(1), scalar(1), scalar(1), 0.5);
    const auto rep = check_attenuation_coop(same, pin, w);
    CHECK_FALSE(rep[0].pass);
    CHECK(rep[0].margin == doctest::Approx(-3.0 * 0.25));
  }
  SUBCASE("non-cooperative: isolated agent without disturbance passes") {
    const FleetModel quiet(m.drift(), {mat({{0.2}, {0.1}})}, {mat({{0.0}, {0.0}})});
    const GraphTopology pin = GraphTopology::build({}, {0}, 1);
    const GameWeights w = GameWeights::uniform(quiet, pin, GameMode::noncooperative, Mat::Identity(2, 2), scalar(1),
                                               scalar(1), scalar(1), scalar(1), 0.1);
    CHECK(check_attenuation_noncoop(quiet, pin, w)[0].pass);
  }
  SUBCASE("non-cooperative: strong coupling with small attenuation is violated") {
    const FleetModel two(m.drift(), {m.control_input(0), m.control_input(1)}, {m.disturbance_input(0), m.disturbance_input(1)});
    const GraphTopology strong = GraphTopology::build({{0, 1, 50.0}}, {0}, 2);
    const GameWeights w = GameWeights::uniform(two, strong, GameMode::noncooperative, Mat::Identity(2, 2), scalar(1),
                                               scalar(1), scalar(1), scalar(1), 0.5);
    CHECK_FALSE(check_attenuation_noncoop(two, strong, w)[1].pass);
  }
}

TEST_CASE("saddle gap") {
  ScalarGame g;
  const ValueKernel v = riccati_oracle_single_agent(g.model, g.topo, g.weights, 0);
  const auto [k, l] = saddle_gains(g.model, g.topo, g.weights, 0, v.P);
  const SimulationSetup s = single_setup(FeedbackPolicy::linear(k, l), 1.0, 300);
  SUBCASE("zero perturbation") {
    const auto gaps = saddle_gap(g.model, g.topo, g.weights, s, 0.0, 10, 1);
    CHECK(gaps[0].gap_u == 0.0);
    CHECK(gaps[0].gap_w == 0.0);
  }
  SUBCASE("exact saddle of the scalar game") {
    const auto gaps = saddle_gap(g.model, g.topo, g.weights, s, 0.1, 200, 3);
    CHECK(gaps[0].gap_u >= -1e-8);
    CHECK(gaps[0].gap_w <= 1e-8);
  }
}

TEST_CASE("L2-gain check") {
  ScalarGame g;
  SUBCASE("no disturbance, no initial error") {
    const TrajectoryLog log =
        simulate(g.model, g.topo, g.weights, single_setup(FeedbackPolicy::linear(scalar(0.5), scalar(0.0)), 0.0, 50));
    const auto res = l2_gain_check(log, g.topo, g.weights, {0.25});
    CHECK(res[0].slack == 0.25);
    CHECK(res[0].pass);
  }
  SUBCASE("saddle control against a sinusoidal disturbance") {
    const ValueKernel v = riccati_oracle_single_agent(g.model, g.topo, g.weights, 0);
    const auto [k, l] = saddle_gains(g.model, g.topo, g.weights, 0, v.P);
    SimulationSetup s = single_setup(FeedbackPolicy::linear(k, l), 1.0, 400);
    s.actuate_disturbance_policy = false;
    s.external = {DisturbanceModel{DisturbanceKind::decaying_sinusoid, vec({0.5}), 0.05, 0.5, 0}};
    const TrajectoryLog log = simulate(g.model, g.topo, g.weights, s);
    const double d0 = log.errors[0][0](0);
    const auto res = l2_gain_check(log, g.topo, g.weights, {d0 * v.P(0, 0) * d0});
    CHECK(res[0].slack >= 0.0);
    CHECK(res[0].pass);
  }
  SUBCASE("a truncated horizon is refused") {
    SimulationSetup s = single_setup(FeedbackPolicy::zero(1, 1, 1), 1.0, 8);
    const TrajectoryLog log = simulate(g.model, g.topo, g.weights, s);
    CHECK_THROWS_AS(l2_gain_check(log, g.topo, g.weights, {1.0}), Error);
  }
}

}

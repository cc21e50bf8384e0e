#include "fixtures.hpp"

#include "qgame/errors.hpp"

#include <doctest.h>

using namespace qgame;
using namespace fixtures;

TEST_SUITE("graph") {

TEST_CASE("reference topology builds with expected in-degrees") {
  const GraphTopology t = fleet().topology();
  CHECK(t.n_agents() == 4);
  CHECK(t.in_degrees()(0) == doctest::Approx(1.5));
  CHECK(t.in_degrees()(1) == doctest::Approx(1.2));
  CHECK(t.in_degrees()(2) == doctest::Approx(0.8));
  CHECK(t.in_degrees()(3) == doctest::Approx(0.4));
  CHECK(t.pinning()(3) == 1.0);
  CHECK(t.pinning().head(3).isZero());
  // a_12 = 0.8: agent 0 listens to agent 1.
  CHECK(t.weight(0, 1) == 0.8);
  CHECK(t.weight(0, 3) == 0.7);
  CHECK(t.neighbors(1) == std::vector<int>{0, 2});
  CHECK(t.neighbors(3) == std::vector<int>{0});
  CHECK((t.laplacian() * Vec::Ones(4)).norm() < 1e-15);
  for (int i = 0; i < 4; ++i) CHECK(t.adjacency()(i, i) == 0.0);
}

TEST_CASE("invalid topologies are rejected") {
  auto kind_of = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  CHECK(kind_of([] { GraphTopology::build({}, {}, 2); }) == ErrorKind::NoSpanningTree);
  CHECK(kind_of([] { GraphTopology::build({{0, 1, 1.0}}, {1}, 2); }) == ErrorKind::NoSpanningTree);
  CHECK(kind_of([] { GraphTopology::build({{0, 0, 1.0}}, {0}, 1); }) == ErrorKind::SelfLoop);
  CHECK(kind_of([] { GraphTopology::build({{0, 1, -1.0}}, {0}, 2); }) == ErrorKind::NonPositiveWeight);
  CHECK(kind_of([] { GraphTopology::build({{0, 5, 1.0}}, {0}, 2); }) == ErrorKind::UnknownAgent);
  // Chain leader -> 0 -> 1 is fine.
  CHECK_NOTHROW(GraphTopology::build({{0, 1, 1.0}}, {0}, 2));
}

TEST_CASE("neighborhood error of a single pinned agent") {
  const GraphTopology t = GraphTopology::build({}, {0}, 1);
  const Vec d = neighborhood_error(t, {vec({0.8, 1.1})}, vec({0.4, 0.5}), 0);
  CHECK(d(0) == doctest::Approx(-0.4));
  CHECK(d(1) == doctest::Approx(-0.6));
}

TEST_CASE("synchronized fleet has zero neighborhood error") {
  const GraphTopology t = fleet().topology();
  const Vec x0 = vec({0.4, 0.5});
  for (int i = 0; i < 4; ++i) CHECK(neighborhood_error(t, {x0, x0, x0, x0}, x0, i).norm() == 0.0);
}

TEST_CASE("per-agent and stacked neighborhood errors agree") {
  const GraphTopology t = fleet().topology();
  const auto xs = fleet_states();
  const Vec x0 = vec({0.4, 0.5});
  const Vec stacked = stacked_neighborhood_error(t, xs, x0);
  // Hand evaluation for agent 0: 0.8 (x2 - x1) + 0.7 (x4 - x1).
  const Vec hand = 0.8 * (xs[1] - xs[0]) + 0.7 * (xs[3] - xs[0]);
  CHECK((neighborhood_error(t, xs, x0, 0) - hand).norm() < 1e-15);
  for (int i = 0; i < 4; ++i) CHECK((stacked.segment(2 * i, 2) - neighborhood_error(t, xs, x0, i)).norm() < 1e-14);
}

TEST_CASE("disagreement bound") {
  const GraphTopology t = fleet().topology();
  CHECK(disagreement_bound(t, 0.0, 2) == 0.0);
  const GraphTopology single = GraphTopology::build({}, {0}, 1);
  CHECK(disagreement_bound(single, 0.7, 3) == doctest::Approx(0.7));
  // Frozen from an independent SVD of L + G.
  CHECK(pinned_min_singular_value(t) == doctest::Approx(0.1766262708603586).epsilon(1e-12));
  const auto xs = fleet_states();
  const Vec x0 = vec({0.4, 0.5});
  double eps = 0.0;
  for (const Vec& x : xs) eps += (x - x0).squaredNorm();
  CHECK(std::sqrt(eps) <= disagreement_bound(t, stacked_neighborhood_error(t, xs, x0).norm(), 2) + 1e-12);
}

}

#include "qgame/graph.hpp"

#include "qgame/errors.hpp"

#include <queue>
#include <string>

namespace qgame {

GraphTopology GraphTopology::build(const std::vector<Edge>& edges, const std::vector<int>& pins, int n_agents) {
  if (n_agents <= 0) throw Error(ErrorKind::InvalidArgument, "n_agents must be positive");
  GraphTopology g;
  g.adjacency_ = Mat::Zero(n_agents, n_agents);
  g.pinning_ = Vec::Zero(n_agents);
  for (const Edge& e : edges) {
    if (e.from < 0 || e.from >= n_agents || e.to < 0 || e.to >= n_agents)
      throw Error(ErrorKind::UnknownAgent,
                  "edge " + std::to_string(e.from) + "->" + std::to_string(e.to) + " references an unknown agent");
    if (e.from == e.to) throw Error(ErrorKind::SelfLoop, "self edge on agent " + std::to_string(e.from));
    if (!(e.weight > 0.0))
      throw Error(ErrorKind::NonPositiveWeight,
                  "edge " + std::to_string(e.from) + "->" + std::to_string(e.to) + " has non-positive weight");
    g.adjacency_(e.to, e.from) = e.weight;
  }
  for (int p : pins) {
    if (p < 0 || p >= n_agents) throw Error(ErrorKind::UnknownAgent, "pin references unknown agent " + std::to_string(p));
    g.pinning_(p) = 1.0;
  }
  g.in_degrees_ = g.adjacency_.rowwise().sum();
  g.laplacian_ = Mat(g.in_degrees_.asDiagonal()) - g.adjacency_;
  g.neighbors_.resize(n_agents);
  for (int i = 0; i < n_agents; ++i)
    for (int j = 0; j < n_agents; ++j)
      if (g.adjacency_(i, j) > 0.0) g.neighbors_[i].push_back(j);

  // Reachability from a virtual leader over leader->i (pinned) and j->i (a_ij > 0).
  std::vector<bool> seen(n_agents, false);
  std::queue<int> frontier;
  for (int i = 0; i < n_agents; ++i)
    if (g.pinning_(i) > 0.0) {
      seen[i] = true;
      frontier.push(i);
    }
  while (!frontier.empty()) {
    int j = frontier.front();
    frontier.pop();
    for (int i = 0; i < n_agents; ++i)
      if (!seen[i] && g.adjacency_(i, j) > 0.0) {
        seen[i] = true;
        frontier.push(i);
      }
  }
  for (int i = 0; i < n_agents; ++i)
    if (!seen[i])
      throw Error(ErrorKind::NoSpanningTree, "agent " + std::to_string(i) + " is not reachable from the leader");
  return g;
}

Mat GraphTopology::pinned_laplacian() const { return laplacian_ + Mat(pinning_.asDiagonal()); }

const std::vector<int>& GraphTopology::neighbors(int i) const {
  check_agent(i);
  return neighbors_[i];
}

void GraphTopology::check_agent(int i) const {
  if (i < 0 || i >= n_agents()) throw Error(ErrorKind::UnknownAgent, "agent index " + std::to_string(i));
}

Vec neighborhood_error(const GraphTopology& topology, const std::vector<Vec>& followers, const Vec& leader, int i) {
  topology.check_agent(i);
  if (static_cast<int>(followers.size()) != topology.n_agents())
    throw Error(ErrorKind::DimensionMismatch, "follower count differs from topology size");
  const Eigen::Index n = leader.size();
  for (const Vec& x : followers)
    if (x.size() != n) throw Error(ErrorKind::DimensionMismatch, "state dimensions differ");
  Vec delta = Vec::Zero(n);
  for (int j : topology.neighbors(i)) delta += topology.weight(i, j) * (followers[j] - followers[i]);
  delta += topology.pinning()(i) * (leader - followers[i]);
  return delta;
}

Vec stacked_neighborhood_error(const GraphTopology& topology, const std::vector<Vec>& followers, const Vec& leader) {
  const int n_agents = topology.n_agents();
  const Eigen::Index n = leader.size();
  if (static_cast<int>(followers.size()) != n_agents)
    throw Error(ErrorKind::DimensionMismatch, "follower count differs from topology size");
  Vec eps(n_agents * n);
  for (int i = 0; i < n_agents; ++i) {
    if (followers[i].size() != n) throw Error(ErrorKind::DimensionMismatch, "state dimensions differ");
    eps.segment(i * n, n) = followers[i] - leader;
  }
  return -kron(topology.pinned_laplacian(), Mat::Identity(n, n)) * eps;
}

double pinned_min_singular_value(const GraphTopology& topology) {
  return min_singular_value(topology.pinned_laplacian());
}

double disagreement_bound(const GraphTopology& topology, double delta_norm, int n) {
  if (delta_norm < 0.0) throw Error(ErrorKind::InvalidArgument, "negative error norm");
  if (n <= 0) throw Error(ErrorKind::InvalidArgument, "state dimension must be positive");
  // Singular values of (L+G) kron I_n are those of L+G repeated n times.
  const double smin = pinned_min_singular_value(topology);
  if (smin < 1e-12) throw Error(ErrorKind::SingularPinnedLaplacian, "sigma_min(L+G) below 1e-12");
  return delta_norm / smin;
}

}  // namespace qgame

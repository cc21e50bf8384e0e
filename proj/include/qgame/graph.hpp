#pragma once

#include "qgame/linalg.hpp"

#include <vector>

namespace qgame {

// Directed edge carrying information from agent `from` to agent `to`.
// Agents are indexed from 0 throughout the library.
struct Edge {
  int from;
  int to;
  double weight;
};

class GraphTopology {
 public:
  static GraphTopology build(const std::vector<Edge>& edges, const std::vector<int>& pins, int n_agents);

  int n_agents() const { return static_cast<int>(adjacency_.rows()); }
  const Mat& adjacency() const { return adjacency_; }
  const Vec& pinning() const { return pinning_; }
  const Vec& in_degrees() const { return in_degrees_; }
  const Mat& laplacian() const { return laplacian_; }
  // L + G
  Mat pinned_laplacian() const;

  double weight(int i, int j) const { return adjacency_(i, j); }
  // d_i + g_i
  double coupling(int i) const { return in_degrees_(i) + pinning_(i); }
  // Agents j with a_ij > 0, ascending.
  const std::vector<int>& neighbors(int i) const;

  void check_agent(int i) const;

 private:
  Mat adjacency_;
  Vec pinning_;
  Vec in_degrees_;
  Mat laplacian_;
  std::vector<std::vector<int>> neighbors_;
};

Vec neighborhood_error(const GraphTopology& topology, const std::vector<Vec>& followers, const Vec& leader, int i);

// Stacked form -((L+G) kron I_n) eps with eps_i = x_i - x_0.
Vec stacked_neighborhood_error(const GraphTopology& topology, const std::vector<Vec>& followers, const Vec& leader);

double pinned_min_singular_value(const GraphTopology& topology);

// Upper bound on the global disagreement norm given the stacked error norm.
double disagreement_bound(const GraphTopology& topology, double delta_norm, int n);

}  // namespace qgame

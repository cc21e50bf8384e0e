#pragma once

#include "qgame/graph.hpp"
#include "qgame/linalg.hpp"

#include <map>
#include <vector>

namespace qgame {

// Common drift A shared by leader and followers, per-follower input maps.
class FleetModel {
 public:
  FleetModel(Mat drift, std::vector<Mat> control_inputs, std::vector<Mat> disturbance_inputs);

  int n_agents() const { return static_cast<int>(control_inputs_.size()); }
  int state_dim() const { return static_cast<int>(drift_.rows()); }
  int control_dim() const { return static_cast<int>(control_inputs_.front().cols()); }
  int disturbance_dim() const { return static_cast<int>(disturbance_inputs_.front().cols()); }

  const Mat& drift() const { return drift_; }
  const Mat& control_input(int i) const;
  const Mat& disturbance_input(int i) const;

  void check_agent(int i) const;

 private:
  Mat drift_;
  std::vector<Mat> control_inputs_;
  std::vector<Mat> disturbance_inputs_;
};

bool is_reachable(const Mat& a, const Mat& b);

// Index ranges inside z_i = col(delta, u_i, u_-i, w_i, w_-i).
struct BlockMap {
  int n = 0;
  int p = 0;
  int q = 0;
  int n_neighbors = 0;

  BlockMap() = default;
  BlockMap(int n_, int p_, int q_, int neighbors) : n(n_), p(p_), q(q_), n_neighbors(neighbors) {}
  static BlockMap for_agent(const FleetModel& model, const GraphTopology& topology, int i);

  int size() const { return n + (p + q) * (1 + n_neighbors); }
  int delta() const { return 0; }
  int control() const { return n; }
  int neighbor_control(int a) const { return n + p + a * p; }
  int neighbor_controls() const { return n + p; }
  int disturbance() const { return n + p * (1 + n_neighbors); }
  int neighbor_disturbance(int a) const { return disturbance() + q + a * q; }
  int neighbor_disturbances() const { return disturbance() + q; }
  int action_size() const { return size() - n; }

  Vec assemble(const Vec& delta, const Vec& u, const std::vector<Vec>& u_neighbors, const Vec& w,
               const std::vector<Vec>& w_neighbors) const;
};

using NeighborInputs = std::map<int, Vec>;

// Orders a neighbor map by the topology's neighbor list, rejecting missing or extra keys.
std::vector<Vec> ordered_neighbor_inputs(const GraphTopology& topology, int i, const NeighborInputs& inputs, int dim);

}  // namespace qgame

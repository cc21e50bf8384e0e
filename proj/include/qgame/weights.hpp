#pragma once

#include "qgame/model.hpp"

#include <string>
#include <vector>

namespace qgame {

enum class GameMode { cooperative, noncooperative };

const char* mode_name(GameMode mode);
GameMode parse_mode(const std::string& name);

struct GameWeights {
  GameMode mode = GameMode::cooperative;
  std::vector<Mat> state_weight;        // Q_ii
  std::vector<Mat> control_weight;      // R_ii
  std::vector<Mat> disturbance_weight;  // T_ii
  // Per agent, in the topology's neighbor order.
  std::vector<std::vector<Mat>> neighbor_control_weight;      // R_ij
  std::vector<std::vector<Mat>> neighbor_disturbance_weight;  // T_ij
  double attenuation = 1.0;

  static GameWeights uniform(const FleetModel& model, const GraphTopology& topology, GameMode mode, const Mat& q,
                             const Mat& r, const Mat& t, const Mat& r_neighbor, const Mat& t_neighbor,
                             double attenuation);

  void validate(const FleetModel& model, const GraphTopology& topology) const;
};

// Block-diagonal stage cost matrix so that r_i = z' Lambda z.
Mat cost_matrix(const GameWeights& weights, const BlockMap& blocks, int i);

// Stage cost for the weights' own mode with neighbor inputs in neighbor order.
double stage_cost(const GameWeights& weights, int i, const Vec& delta, const Vec& u, const std::vector<Vec>& u_neighbors,
                  const Vec& w, const std::vector<Vec>& w_neighbors);

}  // namespace qgame

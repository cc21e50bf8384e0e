#pragma once

#include "qgame/dynamics.hpp"
#include "qgame/weights.hpp"

#include <string>
#include <vector>

namespace qgame {

// V(delta) = delta' P delta
struct ValueKernel {
  int agent = 0;
  Mat P;
};

double stage_cost_coop(const GameWeights& weights, const GraphTopology& topology, int i, const Vec& delta,
                       const Vec& u, const NeighborInputs& u_neighbors, const Vec& w,
                       const NeighborInputs& w_neighbors);
double stage_cost_noncoop(const GameWeights& weights, const GraphTopology& topology, int i, const Vec& delta,
                          const Vec& u, const NeighborInputs& u_neighbors, const Vec& w,
                          const NeighborInputs& w_neighbors);

struct CostToGo {
  double total = 0.0;
  double tail = 0.0;  // partial sum over the last quarter of the horizon
};

CostToGo cost_to_go(const TrajectoryLog& log, int i);

struct ControlDisturbancePair {
  Vec u;
  Vec w;
};

ControlDisturbancePair policies_from_value_coop(const FleetModel& model, const GraphTopology& topology,
                                                const GameWeights& weights, int i, const ValueKernel& value,
                                                const Vec& delta_next);

// Resolves the dependence of delta_next on (u, w) by a simultaneous linear solve.
// Neighbor inputs enter as the fixed offset `neighbor_drive` = sum_j a_ij (B_j u_j + E_j w_j).
ControlDisturbancePair stationary_policies_from_value_coop(const FleetModel& model, const GraphTopology& topology,
                                                           const GameWeights& weights, int i,
                                                           const ValueKernel& value, const Vec& delta,
                                                           const Vec& neighbor_drive);

struct WorstCaseActions {
  Vec u;
  std::vector<Vec> u_neighbors;
  Vec w;
  std::vector<Vec> w_neighbors;
};

WorstCaseActions policies_from_value_noncoop(const FleetModel& model, const GraphTopology& topology,
                                             const GameWeights& weights, int i, const ValueKernel& value,
                                             const Vec& delta_next);

struct AttenuationMargin {
  int agent = 0;
  std::string condition;
  double margin = 0.0;
  bool pass = false;
};

std::vector<AttenuationMargin> check_attenuation_coop(const FleetModel& model, const GraphTopology& topology,
                                                      const GameWeights& weights);
std::vector<AttenuationMargin> check_attenuation_noncoop(const FleetModel& model, const GraphTopology& topology,
                                                         const GameWeights& weights);

struct SaddleGap {
  double gap_u = 0.0;
  double gap_w = 0.0;
};

// Rollout-based J_i under the nominal setup versus Gaussian open-loop perturbations of one agent's
// control or disturbance sequence. Probing noise in the setup is ignored.
std::vector<SaddleGap> saddle_gap(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                                  const SimulationSetup& nominal, double perturbation_scale, int samples,
                                  std::uint64_t seed);

struct L2GainResult {
  bool pass = false;
  double slack = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double tail_fraction = 0.0;
};

std::vector<L2GainResult> l2_gain_check(const TrajectoryLog& log, const GraphTopology& topology,
                                        const GameWeights& weights, const std::vector<double>& initial_values);

}  // namespace qgame

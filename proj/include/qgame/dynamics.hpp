#pragma once

#include "qgame/graph.hpp"
#include "qgame/model.hpp"
#include "qgame/weights.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace qgame {

Vec step_leader(const FleetModel& model, const Vec& x0);
Vec step_follower(const FleetModel& model, int i, const Vec& x, const Vec& u, const Vec& w);

Vec step_error_dynamics(const FleetModel& model, const GraphTopology& topology, int i, const Vec& delta, const Vec& u,
                        const NeighborInputs& u_neighbors, const Vec& w, const NeighborInputs& w_neighbors);

// M_i with delta_{k+1} = M_i z_k. neighbor_order must be a permutation of the neighborhood;
// the rest of the library always uses ascending order.
Mat stacked_input_matrix(const FleetModel& model, const GraphTopology& topology, int i,
                         const std::vector<int>& neighbor_order);
Mat stacked_input_matrix(const FleetModel& model, const GraphTopology& topology, int i);

enum class Basis { identity, quadratic };

const char* basis_name(Basis basis);
Basis parse_basis(const std::string& name);
int basis_dim(Basis basis, int n);
Vec features(Basis basis, const Vec& delta);

// u = Wc' phi(delta), w = Wd' phi(delta).
struct FeedbackPolicy {
  Basis basis = Basis::identity;
  Mat control_weights;
  Mat disturbance_weights;

  static FeedbackPolicy linear(const Mat& control_gain, const Mat& disturbance_gain);
  static FeedbackPolicy zero(int n, int p, int q);

  Vec control(const Vec& delta) const;
  Vec disturbance(const Vec& delta) const;
  // Gains for the identity basis.
  Mat control_gain() const;
  Mat disturbance_gain() const;
};

enum class DisturbanceKind { zero, decaying_sinusoid, seeded_decaying_noise };

const char* disturbance_kind_name(DisturbanceKind kind);
DisturbanceKind parse_disturbance_kind(const std::string& name);

struct DisturbanceModel {
  DisturbanceKind kind = DisturbanceKind::zero;
  Vec amplitude;
  double decay = 0.05;
  double frequency = 0.5;
  std::uint64_t seed = 0;

  // w_{agent,k}; noise samples are random-access by (seed, agent, k).
  Vec sample(int agent, long k, int q) const;
};

struct ProbeSpec {
  double amplitude = 0.1;
  double decay = 0.001;
  std::uint64_t seed = 0;
};

// Sequential uniform probing noise in [-a, a] scaled by exp(-decay k).
class ProbeNoise {
 public:
  explicit ProbeNoise(const ProbeSpec& spec);
  Vec next(long k, int dim);

 private:
  ProbeSpec spec_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uniform_{-1.0, 1.0};
};

struct TrajectoryLog {
  int horizon = 0;
  std::vector<Vec> leader;                      // K+1
  std::vector<std::vector<Vec>> states;         // K+1 x N
  std::vector<std::vector<Vec>> errors;         // K+1 x N
  std::vector<std::vector<Vec>> controls;       // K x N
  std::vector<std::vector<Vec>> disturbances;   // K x N
  std::vector<std::vector<double>> costs;       // K x N

  int n_agents() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }
  bool operator==(const TrajectoryLog& other) const;
};

// Open-loop additive offsets applied on top of one agent's feedback actions.
struct InputOffsets {
  int agent = -1;
  std::vector<Vec> control;
  std::vector<Vec> disturbance;
};

struct SimulationSetup {
  std::vector<FeedbackPolicy> policies;
  std::vector<DisturbanceModel> external;  // empty means no external disturbance
  std::vector<Vec> initial_states;
  Vec initial_leader;
  int horizon = 0;
  std::optional<ProbeSpec> probe;
  bool actuate_disturbance_policy = true;
};

TrajectoryLog simulate(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                       const SimulationSetup& setup, const InputOffsets& offsets = {});

// delta sequence obtained by iterating the local error dynamics from the logged initial errors
// with the logged inputs.
std::vector<std::vector<Vec>> iterate_error_dynamics(const FleetModel& model, const GraphTopology& topology,
                                                     const TrajectoryLog& log);

}  // namespace qgame

#pragma once

#include "qgame/dynamics.hpp"
#include "qgame/game.hpp"
#include "qgame/pi_solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qgame {

struct LearnerRates {
  double critic = 0.1;
  double actor = 0.1;
  double disturber = 0.1;
  double adversary_control = 0.05;
  double adversary_disturbance = 0.05;
};

struct LearnerState {
  int agent = 0;
  GameMode mode = GameMode::cooperative;
  Basis basis = Basis::identity;
  BlockMap blocks;
  Mat critic;                                // m x m, symmetric
  Mat actor;                                 // basis_dim x p
  Mat disturber;                             // basis_dim x q
  std::vector<Mat> adversary_control;        // per neighbor, basis_dim x p
  std::vector<Mat> adversary_disturbance;    // per neighbor, basis_dim x q
  LearnerRates rates;

  FeedbackPolicy policy() const { return FeedbackPolicy{basis, actor, disturber}; }
};

double td_error(const LearnerState& state, const Vec& z, double r, const Vec& z_next);
LearnerState critic_update(const LearnerState& state, const Vec& z, const Vec& z_next, double td);

// W - rate * phi (W' phi - target)'
Mat network_update(const Mat& weights, const Vec& phi, const Vec& target, double rate);
LearnerState actor_update(const LearnerState& state, const Vec& delta, const Vec& target);
LearnerState disturber_update(const LearnerState& state, const Vec& delta, const Vec& target);
LearnerState adversary_update(const LearnerState& state, int neighbor_slot, const Vec& delta, const Vec& control_target,
                              const Vec& disturbance_target);

ControlDisturbancePair coop_targets(const LearnerState& state, const Vec& delta, const std::vector<Vec>& u_neighbors,
                                    const std::vector<Vec>& w_neighbors);
WorstCaseActions noncoop_targets(const LearnerState& state, const Vec& delta);

struct LearnerInit {
  Basis basis = Basis::identity;
  LearnerRates rates;
  // Critic starts at Lambda + scale M'M.
  double critic_value_scale = 2.0;
  // Actor starts at the critic's stationary control policy; otherwise at zero.
  bool actor_from_critic = true;
};

std::vector<LearnerState> initial_learner_states(const FleetModel& model, const GraphTopology& topology,
                                                 const GameWeights& weights, const LearnerInit& init);

enum class TrainingDisturbance { learned, external, learned_plus_external };

const char* training_disturbance_name(TrainingDisturbance t);
TrainingDisturbance parse_training_disturbance(const std::string& name);

struct OnlineOptions {
  int horizon = 500;
  TrainingDisturbance training = TrainingDisturbance::learned;
  std::vector<DisturbanceModel> external;
  std::optional<ProbeSpec> probe = ProbeSpec{};
  std::vector<Vec> initial_states;
  Vec initial_leader;
};

struct WeightRecord {
  int step = 0;
  int agent = 0;
  std::string net;
  double frobenius_norm = 0.0;
};

struct WeightSnapshot {
  Mat critic;
  Mat actor;
  Mat disturber;
};

struct OnlineResult {
  std::vector<LearnerState> final_states;
  TrajectoryLog log;
  std::vector<WeightRecord> history;
  std::vector<std::vector<WeightSnapshot>> snapshots;  // step x agent, step 0 is the initial state
  std::vector<std::vector<double>> td_errors;          // update x agent
  std::vector<int> skipped_updates;
  std::vector<double> max_critic_activation;  // max |z|^2 difference norm per agent
  std::vector<double> max_actor_activation;   // max |phi(delta)| per agent
};

OnlineResult run_online(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                        const std::vector<LearnerState>& init, const OnlineOptions& options);

struct LyapunovDiagnostic {
  std::vector<std::vector<double>> series;  // agent x step
  std::vector<double> final_window_sup;     // sup over the final 20% of steps
  std::vector<bool> bounded;                // final-window sup does not exceed the series maximum
  std::vector<bool> rates_sufficient;       // learning-rate conditions with empirical activation bounds
};

struct ReferenceWeights {
  Mat critic;
  Mat actor;
  Mat disturber;
};

LyapunovDiagnostic lyapunov_diagnostic(const OnlineResult& run, const std::vector<ReferenceWeights>& reference,
                                       double actor_weighting = 1.0, double disturber_weighting = 1.0);

}  // namespace qgame

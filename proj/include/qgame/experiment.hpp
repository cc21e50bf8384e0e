#pragma once

#include "qgame/dynamics.hpp"
#include "qgame/game.hpp"
#include "qgame/online_learner.hpp"
#include "qgame/pi_solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qgame {

enum class Algorithm { simulate, pi_coop, pi_noncoop, learn_coop, learn_noncoop, verify };

const char* algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct SaddleSettings {
  double scale = 0.1;
  int samples = 200;
};

struct ExperimentConfig {
  int n_agents = 0;
  std::vector<Edge> edges;  // 0-based
  std::vector<int> pins;    // 0-based
  Mat drift;
  std::vector<Mat> control_inputs;
  std::vector<Mat> disturbance_inputs;
  GameMode mode = GameMode::cooperative;
  Mat state_weight, control_weight, disturbance_weight, neighbor_control_weight, neighbor_disturbance_weight;
  double attenuation = 1.0;
  std::vector<Vec> initial_states;
  Vec initial_leader;
  Algorithm algorithm = Algorithm::simulate;
  int horizon = 500;
  std::uint64_t seed = 1;
  DisturbanceModel disturbance;
  bool probe_enabled = true;
  ProbeSpec probe;
  LearnerInit learner;
  TrainingDisturbance training = TrainingDisturbance::learned;
  PiOptions pi;
  std::vector<Mat> pi_initial_gains;  // empty: local LQR gains
  std::vector<Mat> policy_control_gains;      // simulate; empty: zero
  std::vector<Mat> policy_disturbance_gains;  // simulate; empty: zero
  SaddleSettings saddle;
  std::string output;

  FleetModel model() const;
  GraphTopology topology() const;
  // Weights for the given mode (defaults to the configured one).
  GameWeights weights(std::optional<GameMode> mode = std::nullopt) const;
  std::vector<DisturbanceModel> external_disturbances() const;
  std::optional<ProbeSpec> probe_spec() const;

  nlohmann::json to_json() const;
  // Applies a seed to every seeded component.
  void set_seed(std::uint64_t s);
};

// Parses and validates; unknown keys are rejected with their JSON path.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct AgentMetrics {
  double final_error = 0.0;  // |x_i - x_0| at the last logged step
  double max_error = 0.0;
  double final_delta = 0.0;
  double cost_to_go = 0.0;
  double cost_tail = 0.0;
};

struct Metrics {
  std::vector<AgentMetrics> agents;
  std::optional<int> sync_time;  // first k with all |delta_i| < 0.05 from then on
  double final_window_max_error = 0.0;  // max_i |x_i - x_0| over the final 10%
};

Metrics metrics(const TrajectoryLog& log, double threshold = 0.05);
nlohmann::json metrics_json(const Metrics& m);

// Relative change of a weight-norm series over its final 10%: (max - min) / max.
double final_window_relative_change(const std::vector<WeightRecord>& history, int agent, const std::string& net);

struct RunOutcome {
  nlohmann::json summary;
};

RunOutcome run_simulate(const ExperimentConfig& cfg, const std::filesystem::path& outdir);
RunOutcome run_policy_iteration(const ExperimentConfig& cfg, GameMode mode, const std::filesystem::path& outdir);
RunOutcome run_learning(const ExperimentConfig& cfg, GameMode mode, const std::filesystem::path& outdir);
RunOutcome run_verify(const ExperimentConfig& cfg, const std::filesystem::path& outdir);

enum class ReproCase { coop, noncoop };

RunOutcome reproduce_reference(ReproCase which, const std::filesystem::path& outdir);
RunOutcome reproduce(const ExperimentConfig& cfg, GameMode mode, const std::filesystem::path& outdir);

// Pieces shared by the commands and the acceptance harness.
struct LearnedFleet {
  OnlineResult run;
  std::vector<FeedbackPolicy> policies;
};

LearnedFleet learn(const ExperimentConfig& cfg, GameMode mode);

// Nominal setup at learned policies: learned disturbance actuated, no probing, no external input.
SimulationSetup learned_setup(const ExperimentConfig& cfg, const std::vector<FeedbackPolicy>& policies);

// Per agent: undisturbed cost-to-go as V0 and a rollout with the configured disturbance added on that agent only.
std::vector<L2GainResult> l2_at_policies(const ExperimentConfig& cfg, const GameWeights& weights,
                                         const std::vector<FeedbackPolicy>& policies);

}  // namespace qgame

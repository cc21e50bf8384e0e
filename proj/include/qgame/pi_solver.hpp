#pragma once

#include "qgame/dynamics.hpp"
#include "qgame/game.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace qgame {

// Q(z) = z' S z over z = col(delta, u_i, u_-i, w_i, w_-i).
struct QKernel {
  int agent = 0;
  Mat S;
  BlockMap blocks;
  GameMode mode = GameMode::cooperative;
  double residual_rms = 0.0;

  Mat block(int row, int rows, int col, int cols) const { return S.block(row, col, rows, cols); }
  double condition_number() const;
};

QKernel qkernel_from_value(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights, int i,
                           const ValueKernel& value);

struct EvaluationDataset {
  int agent = 0;
  BlockMap blocks;
  std::vector<Vec> z;
  std::vector<double> r;
  std::vector<Vec> z_next;

  int count() const { return static_cast<int>(z.size()); }
};

// Batch least squares on z'Sz - z_next'S z_next = r. The residual threshold is relative to the RMS of r.
QKernel policy_eval_lsq(const EvaluationDataset& data, GameMode mode,
                        double residual_threshold = std::numeric_limits<double>::infinity());

Vec improve_disturbance_coop(const QKernel& kernel, const Vec& delta, const Vec& u, const std::vector<Vec>& u_neighbors,
                             const std::vector<Vec>& w_neighbors);
Vec improve_control_coop(const QKernel& kernel, const Vec& delta, const std::vector<Vec>& u_neighbors, const Vec& w,
                         const std::vector<Vec>& w_neighbors);

// Linear maps from (delta, u_-i, w_-i) to the joint stationary (u_i, w_i).
struct CoopGains {
  Mat control_delta;
  Mat control_neighbor_u;
  Mat control_neighbor_w;
  Mat disturbance_delta;
  Mat disturbance_neighbor_u;
  Mat disturbance_neighbor_w;

  Vec control(const Vec& delta, const Vec& u_neighbors, const Vec& w_neighbors) const;
  Vec disturbance(const Vec& delta, const Vec& u_neighbors, const Vec& w_neighbors) const;
};

CoopGains joint_stationary_policies_coop(const QKernel& kernel);

// Gain mapping delta to the stacked (u_i, u_-i, w_i, w_-i).
Mat joint_stationary_policies_noncoop(const QKernel& kernel);

// Zero-sum recursion for x+ = A x + B u + E w with cost x'Qx + u'Ru - beta^2 w'Tw.
Mat zero_sum_riccati(const Mat& a, const Mat& b, const Mat& e, const Mat& q, const Mat& r, const Mat& t,
                     double attenuation, double tol, int max_iter);

ValueKernel riccati_oracle_single_agent(const FleetModel& model, const GraphTopology& topology,
                                        const GameWeights& weights, int i, double tol = 1e-13,
                                        int max_iter = 200000);

// Feedback gains of the zero-sum saddle for the value P of an isolated agent.
std::pair<Mat, Mat> saddle_gains(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                                 int i, const Mat& P);

// Value of the stacked local policy G (z = [I; G] delta) on the synchronized local loop.
ValueKernel evaluate_local_policy(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                                  int i, const Mat& action_gain);

enum class Evaluation { model_based, data_driven };

struct PiOptions {
  Evaluation evaluation = Evaluation::model_based;
  double eps_inner = 1e-6;
  double eps_outer = 1e-6;
  int max_inner = 200;
  int max_outer = 200;
  int probe_states = 20;
  std::uint64_t seed = 1;
  int transitions = 400;
  double excitation = 0.1;
  double residual_threshold = std::numeric_limits<double>::infinity();
  bool keep_kernels = false;
};

struct PiIteration {
  int iter_outer = 0;
  int iter_inner = 0;
  double inner_norm = 0.0;
  double outer_norm = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> probe_values;  // agent x probe state
};

struct MonotonicityReport {
  int inner_violations = 0;
  int outer_violations = 0;
  double worst_inner_decrease = 0.0;
  double worst_outer_increase = 0.0;
};

struct PiResult {
  std::vector<QKernel> kernels;
  std::vector<Mat> action_gains;
  std::vector<Mat> control_gains;
  std::vector<Mat> disturbance_gains;
  std::vector<PiIteration> log;
  std::vector<std::vector<Vec>> kernel_snapshots;  // per evaluation, per agent, half-vectorized
  MonotonicityReport monotonicity;
  int outer_iterations = 0;
};

MonotonicityReport check_monotonicity(const std::vector<PiIteration>& log, double slack = 1e-8);

// Spectral radius of the global error dynamics under u_i = K_i delta_i and zero disturbance.
double closed_loop_radius(const FleetModel& model, const GraphTopology& topology, const std::vector<Mat>& control_gains,
                          const std::vector<Mat>& disturbance_gains = {});

PiResult run_pi_coop(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                     const std::vector<Mat>& initial_control_gains, const PiOptions& options = {});
PiResult run_pi_noncoop(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                        const std::vector<Mat>& initial_control_gains, const PiOptions& options = {});

// LQR gains of each synchronized local loop A - (d_i+g_i) B_i K with disturbances ignored.
// A gain that is merely stabilizing can leave the inner maximization unbounded.
std::vector<Mat> local_lqr_gains(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights);

}  // namespace qgame

#include "qgame/game.hpp"

#include "qgame/errors.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace qgame {

namespace {

Mat checked_inverse(const Mat& m, const char* what) {
  Eigen::FullPivLU<Mat> lu(m);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularWeight, std::string(what) + " is singular");
  return lu.inverse();
}

double stage_cost_checked(const GameWeights& weights, const GraphTopology& topology, int i, const Vec& delta,
                          const Vec& u, const NeighborInputs& u_neighbors, const Vec& w,
                          const NeighborInputs& w_neighbors) {
  topology.check_agent(i);
  const int p = static_cast<int>(weights.control_weight.at(i).rows());
  const int q = static_cast<int>(weights.disturbance_weight.at(i).rows());
  const auto un = ordered_neighbor_inputs(topology, i, u_neighbors, p);
  const auto wn = ordered_neighbor_inputs(topology, i, w_neighbors, q);
  if (delta.size() != weights.state_weight.at(i).rows() || u.size() != p || w.size() != q)
    throw Error(ErrorKind::DimensionMismatch, "stage cost arguments have wrong sizes");
  return stage_cost(weights, i, delta, u, un, w, wn);
}

}  // namespace

double stage_cost_coop(const GameWeights& weights, const GraphTopology& topology, int i, const Vec& delta,
                       const Vec& u, const NeighborInputs& u_neighbors, const Vec& w,
                       const NeighborInputs& w_neighbors) {
  if (weights.mode != GameMode::cooperative) throw Error(ErrorKind::WrongMode, "weights are not cooperative");
  return stage_cost_checked(weights, topology, i, delta, u, u_neighbors, w, w_neighbors);
}

double stage_cost_noncoop(const GameWeights& weights, const GraphTopology& topology, int i, const Vec& delta,
                          const Vec& u, const NeighborInputs& u_neighbors, const Vec& w,
                          const NeighborInputs& w_neighbors) {
  if (weights.mode != GameMode::noncooperative) throw Error(ErrorKind::WrongMode, "weights are not non-cooperative");
  return stage_cost_checked(weights, topology, i, delta, u, u_neighbors, w, w_neighbors);
}

CostToGo cost_to_go(const TrajectoryLog& log, int i) {
  CostToGo out;
  const int k_tail = log.horizon - log.horizon / 4;
  for (int k = 0; k < log.horizon; ++k) {
    const double c = log.costs[k].at(i);
    out.total += c;
    if (k >= k_tail) out.tail += c;
  }
  return out;
}

ControlDisturbancePair policies_from_value_coop(const FleetModel& model, const GraphTopology& topology,
                                                const GameWeights& weights, int i, const ValueKernel& value,
                                                const Vec& delta_next) {
  const double s = topology.coupling(i);
  const double b2 = weights.attenuation * weights.attenuation;
  const Vec grad = 2.0 * value.P * delta_next;
  ControlDisturbancePair out;
  out.u = (s / 2.0) * checked_inverse(weights.control_weight[i], "R_ii") * model.control_input(i).transpose() * grad;
  out.w = -(s / (2.0 * b2)) * checked_inverse(weights.disturbance_weight[i], "T_ii") *
          model.disturbance_input(i).transpose() * grad;
  return out;
}

ControlDisturbancePair stationary_policies_from_value_coop(const FleetModel& model, const GraphTopology& topology,
                                                           const GameWeights& weights, int i,
                                                           const ValueKernel& value, const Vec& delta,
                                                           const Vec& neighbor_drive) {
  const int p = model.control_dim(), q = model.disturbance_dim(), n = model.state_dim();
  const double s = topology.coupling(i);
  const double b2 = weights.attenuation * weights.attenuation;
  Mat g(p + q, n);
  g.topRows(p) = s * checked_inverse(weights.control_weight[i], "R_ii") * model.control_input(i).transpose();
  g.bottomRows(q) =
      -(s / b2) * checked_inverse(weights.disturbance_weight[i], "T_ii") * model.disturbance_input(i).transpose();
  Mat inputs(n, p + q);
  inputs << model.control_input(i), model.disturbance_input(i);
  const Mat lhs = Mat::Identity(p + q, p + q) + s * g * value.P * inputs;
  Eigen::FullPivLU<Mat> lu(lhs);
  if (!lu.isInvertible()) throw Error(ErrorKind::Singular, "stationarity system is singular");
  const Vec v = lu.solve(g * value.P * (model.drift() * delta + neighbor_drive));
  return {v.head(p), v.tail(q)};
}

WorstCaseActions policies_from_value_noncoop(const FleetModel& model, const GraphTopology& topology,
                                             const GameWeights& weights, int i, const ValueKernel& value,
                                             const Vec& delta_next) {
  const double s = topology.coupling(i);
  const double b2 = weights.attenuation * weights.attenuation;
  const Vec grad = 2.0 * value.P * delta_next;
  WorstCaseActions out;
  out.u = (s / 2.0) * checked_inverse(weights.control_weight[i], "R_ii") * model.control_input(i).transpose() * grad;
  out.w = -(s / (2.0 * b2)) * checked_inverse(weights.disturbance_weight[i], "T_ii") *
          model.disturbance_input(i).transpose() * grad;
  const auto& nb = topology.neighbors(i);
  for (std::size_t a = 0; a < nb.size(); ++a) {
    const int j = nb[a];
    const double c = topology.weight(i, j) / (2.0 * b2);
    out.u_neighbors.push_back(c * checked_inverse(weights.neighbor_control_weight[i][a], "R_ij") *
                              model.control_input(j).transpose() * grad);
    out.w_neighbors.push_back(c * checked_inverse(weights.neighbor_disturbance_weight[i][a], "T_ij") *
                              model.disturbance_input(j).transpose() * grad);
  }
  return out;
}

namespace {

constexpr double kMarginTolerance = 1e-12;

}  // namespace

std::vector<AttenuationMargin> check_attenuation_coop(const FleetModel& model, const GraphTopology& topology,
                                                      const GameWeights& weights) {
  if (weights.mode != GameMode::cooperative) throw Error(ErrorKind::WrongMode, "weights are not cooperative");
  const double b2 = weights.attenuation * weights.attenuation;
  std::vector<AttenuationMargin> out;
  for (int l = 0; l < model.n_agents(); ++l) {
    const Mat& b = model.control_input(l);
    const Mat& e = model.disturbance_input(l);
    double margin = min_eigenvalue(b * checked_inverse(weights.control_weight[l], "R_ll") * b.transpose() -
                                   e * checked_inverse(weights.disturbance_weight[l], "T_ll") * e.transpose() / b2);
    const auto& nb = topology.neighbors(l);
    for (std::size_t a = 0; a < nb.size(); ++a) {
      const Mat diff = b * checked_inverse(weights.neighbor_control_weight[l][a], "R_lj") * b.transpose() -
                       e * checked_inverse(weights.neighbor_disturbance_weight[l][a], "T_lj") * e.transpose() / b2;
      margin = std::min(margin, min_eigenvalue(diff));
    }
    out.push_back({l, "B R^-1 B' - E T^-1 E' / beta^2 >= 0 over own and neighbor weights", margin,
                   margin >= -kMarginTolerance});
  }
  return out;
}

std::vector<AttenuationMargin> check_attenuation_noncoop(const FleetModel& model, const GraphTopology& topology,
                                                         const GameWeights& weights) {
  if (weights.mode != GameMode::noncooperative) throw Error(ErrorKind::WrongMode, "weights are not non-cooperative");
  const double b2 = weights.attenuation * weights.attenuation;
  std::vector<AttenuationMargin> out;
  for (int i = 0; i < model.n_agents(); ++i) {
    const double s = topology.coupling(i);
    const Mat& b = model.control_input(i);
    const Mat& e = model.disturbance_input(i);
    Mat diff = s * s * b * checked_inverse(weights.control_weight[i], "R_ii") * b.transpose() -
               (s * s / b2) * e * checked_inverse(weights.disturbance_weight[i], "T_ii") * e.transpose();
    const auto& nb = topology.neighbors(i);
    for (std::size_t a = 0; a < nb.size(); ++a) {
      const int j = nb[a];
      const double aij = topology.weight(i, j);
      const Mat& bj = model.control_input(j);
      const Mat& ej = model.disturbance_input(j);
      diff -= (aij * aij / b2) * (bj * checked_inverse(weights.neighbor_control_weight[i][a], "R_ij") * bj.transpose() +
                                  ej * checked_inverse(weights.neighbor_disturbance_weight[i][a], "T_ij") *
                                      ej.transpose());
    }
    const double margin = min_eigenvalue(diff);
    out.push_back({i, "own authority dominates own and neighbor disturbance channels", margin,
                   margin >= -kMarginTolerance});
  }
  return out;
}

std::vector<SaddleGap> saddle_gap(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                                  const SimulationSetup& nominal, double perturbation_scale, int samples,
                                  std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, "samples must be positive");
  if (perturbation_scale < 0.0) throw Error(ErrorKind::InvalidArgument, "perturbation scale must be non-negative");
  SimulationSetup setup = nominal;
  setup.probe.reset();
  const int n_agents = model.n_agents();
  const int p = model.control_dim(), q = model.disturbance_dim();
  const TrajectoryLog base = simulate(model, topology, weights, setup);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto draw = [&](int dim) {
    std::vector<Vec> seq(setup.horizon, Vec(dim));
    for (Vec& v : seq)
      for (int c = 0; c < dim; ++c) v(c) = perturbation_scale * normal(rng);
    return seq;
  };
  std::vector<SaddleGap> out(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const double j0 = cost_to_go(base, i).total;
    double gap_u = std::numeric_limits<double>::infinity();
    double gap_w = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      InputOffsets du;
      du.agent = i;
      du.control = draw(p);
      gap_u = std::min(gap_u, cost_to_go(simulate(model, topology, weights, setup, du), i).total - j0);
      InputOffsets dw;
      dw.agent = i;
      dw.disturbance = draw(q);
      gap_w = std::max(gap_w, cost_to_go(simulate(model, topology, weights, setup, dw), i).total - j0);
    }
    out[i] = {gap_u, gap_w};
  }
  return out;
}

std::vector<L2GainResult> l2_gain_check(const TrajectoryLog& log, const GraphTopology& topology,
                                        const GameWeights& weights, const std::vector<double>& initial_values) {
  const int n_agents = log.n_agents();
  if (static_cast<int>(initial_values.size()) != n_agents)
    throw Error(ErrorKind::DimensionMismatch, "one initial value per agent required");
  const double b2 = weights.attenuation * weights.attenuation;
  const bool coop = weights.mode == GameMode::cooperative;
  const int k_tail = log.horizon - log.horizon / 4;
  std::vector<L2GainResult> out(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const auto& nb = topology.neighbors(i);
    double performance = 0.0, disturbance = 0.0, tail = 0.0;
    for (int k = 0; k < log.horizon; ++k) {
      const Vec& d = log.errors[k][i];
      const Vec& u = log.controls[k][i];
      const Vec& w = log.disturbances[k][i];
      double perf = d.dot(weights.state_weight[i] * d) + u.dot(weights.control_weight[i] * u);
      double dist = w.dot(weights.disturbance_weight[i] * w);
      for (std::size_t a = 0; a < nb.size(); ++a) {
        const Vec& uj = log.controls[k][nb[a]];
        const Vec& wj = log.disturbances[k][nb[a]];
        const double uterm = uj.dot(weights.neighbor_control_weight[i][a] * uj);
        if (coop)
          perf += uterm;
        else
          dist += uterm;
        dist += wj.dot(weights.neighbor_disturbance_weight[i][a] * wj);
      }
      performance += perf;
      disturbance += b2 * dist;
      if (k >= k_tail) tail += perf + b2 * dist;
    }
    L2GainResult& r = out[i];
    r.lhs = performance;
    r.rhs = initial_values[i] + disturbance;
    r.slack = r.rhs - r.lhs;
    const double total = performance + disturbance;
    r.tail_fraction = total > 0.0 ? tail / total : 0.0;
    if (r.tail_fraction >= 0.01)
      throw Error(ErrorKind::TailTooLarge, "truncation tail of agent " + std::to_string(i) + " is not negligible");
    r.pass = r.slack >= 0.0;
  }
  return out;
}

}  // namespace qgame

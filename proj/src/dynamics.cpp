#include "qgame/dynamics.hpp"

#include "qgame/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qgame {

Vec step_leader(const FleetModel& model, const Vec& x0) {
  if (x0.size() != model.state_dim()) throw Error(ErrorKind::DimensionMismatch, "leader state has wrong size");
  return model.drift() * x0;
}

Vec step_follower(const FleetModel& model, int i, const Vec& x, const Vec& u, const Vec& w) {
  model.check_agent(i);
  if (x.size() != model.state_dim() || u.size() != model.control_dim() || w.size() != model.disturbance_dim())
    throw Error(ErrorKind::DimensionMismatch, "follower step arguments have wrong sizes");
  return model.drift() * x + model.control_input(i) * u + model.disturbance_input(i) * w;
}

Vec step_error_dynamics(const FleetModel& model, const GraphTopology& topology, int i, const Vec& delta, const Vec& u,
                        const NeighborInputs& u_neighbors, const Vec& w, const NeighborInputs& w_neighbors) {
  model.check_agent(i);
  if (delta.size() != model.state_dim() || u.size() != model.control_dim() || w.size() != model.disturbance_dim())
    throw Error(ErrorKind::DimensionMismatch, "error step arguments have wrong sizes");
  const auto un = ordered_neighbor_inputs(topology, i, u_neighbors, model.control_dim());
  const auto wn = ordered_neighbor_inputs(topology, i, w_neighbors, model.disturbance_dim());
  const double s = topology.coupling(i);
  Vec next = model.drift() * delta - s * model.control_input(i) * u - s * model.disturbance_input(i) * w;
  const auto& nb = topology.neighbors(i);
  for (std::size_t a = 0; a < nb.size(); ++a) {
    const int j = nb[a];
    next += topology.weight(i, j) * (model.control_input(j) * un[a] + model.disturbance_input(j) * wn[a]);
  }
  return next;
}

Mat stacked_input_matrix(const FleetModel& model, const GraphTopology& topology, int i,
                         const std::vector<int>& neighbor_order) {
  model.check_agent(i);
  std::vector<int> sorted = neighbor_order;
  std::sort(sorted.begin(), sorted.end());
  if (sorted != topology.neighbors(i))
    throw Error(ErrorKind::BadNeighborOrder, "neighbor order is not a permutation of the neighborhood");
  const BlockMap blocks = BlockMap::for_agent(model, topology, i);
  const int n = blocks.n, p = blocks.p, q = blocks.q;
  const double s = topology.coupling(i);
  Mat m = Mat::Zero(n, blocks.size());
  m.middleCols(blocks.delta(), n) = model.drift();
  m.middleCols(blocks.control(), p) = -s * model.control_input(i);
  m.middleCols(blocks.disturbance(), q) = -s * model.disturbance_input(i);
  for (std::size_t a = 0; a < neighbor_order.size(); ++a) {
    const int j = neighbor_order[a];
    m.middleCols(blocks.neighbor_control(static_cast<int>(a)), p) = topology.weight(i, j) * model.control_input(j);
    m.middleCols(blocks.neighbor_disturbance(static_cast<int>(a)), q) =
        topology.weight(i, j) * model.disturbance_input(j);
  }
  return m;
}

Mat stacked_input_matrix(const FleetModel& model, const GraphTopology& topology, int i) {
  return stacked_input_matrix(model, topology, i, topology.neighbors(i));
}

const char* basis_name(Basis basis) { return basis == Basis::identity ? "identity" : "quadratic"; }

Basis parse_basis(const std::string& name) {
  if (name == "identity") return Basis::identity;
  if (name == "quadratic") return Basis::quadratic;
  throw Error(ErrorKind::ValidationError, "unknown basis '" + name + "'");
}

int basis_dim(Basis basis, int n) { return basis == Basis::identity ? n : n + n * (n + 1) / 2; }

Vec features(Basis basis, const Vec& delta) {
  if (basis == Basis::identity) return delta;
  const int n = static_cast<int>(delta.size());
  Vec phi(basis_dim(basis, n));
  phi.head(n) = delta;
  int k = n;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) phi(k++) = delta(a) * delta(b);
  return phi;
}

FeedbackPolicy FeedbackPolicy::linear(const Mat& control_gain, const Mat& disturbance_gain) {
  if (control_gain.cols() != disturbance_gain.cols())
    throw Error(ErrorKind::DimensionMismatch, "gains act on different state sizes");
  return FeedbackPolicy{Basis::identity, control_gain.transpose(), disturbance_gain.transpose()};
}

FeedbackPolicy FeedbackPolicy::zero(int n, int p, int q) {
  return FeedbackPolicy{Basis::identity, Mat::Zero(n, p), Mat::Zero(n, q)};
}

Vec FeedbackPolicy::control(const Vec& delta) const { return control_weights.transpose() * features(basis, delta); }

Vec FeedbackPolicy::disturbance(const Vec& delta) const {
  return disturbance_weights.transpose() * features(basis, delta);
}

Mat FeedbackPolicy::control_gain() const {
  if (basis != Basis::identity) throw Error(ErrorKind::InvalidArgument, "gain requested from a nonlinear policy");
  return control_weights.transpose();
}

Mat FeedbackPolicy::disturbance_gain() const {
  if (basis != Basis::identity) throw Error(ErrorKind::InvalidArgument, "gain requested from a nonlinear policy");
  return disturbance_weights.transpose();
}

const char* disturbance_kind_name(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::zero: return "zero";
    case DisturbanceKind::decaying_sinusoid: return "decaying_sinusoid";
    case DisturbanceKind::seeded_decaying_noise: return "seeded_decaying_noise";
  }
  return "zero";
}

DisturbanceKind parse_disturbance_kind(const std::string& name) {
  if (name == "zero") return DisturbanceKind::zero;
  if (name == "decaying_sinusoid") return DisturbanceKind::decaying_sinusoid;
  if (name == "seeded_decaying_noise") return DisturbanceKind::seeded_decaying_noise;
  throw Error(ErrorKind::ValidationError, "unknown disturbance kind '" + name + "'");
}

Vec DisturbanceModel::sample(int agent, long k, int q) const {
  if (kind == DisturbanceKind::zero) return Vec::Zero(q);
  if (amplitude.size() != q) throw Error(ErrorKind::DimensionMismatch, "disturbance amplitude has wrong size");
  if (!(decay > 0.0)) throw Error(ErrorKind::ValidationError, "disturbance decay must be positive");
  const double envelope = std::exp(-decay * static_cast<double>(k));
  if (kind == DisturbanceKind::decaying_sinusoid)
    return amplitude * (envelope * std::sin(frequency * static_cast<double>(k)));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(agent), static_cast<std::uint32_t>(k)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  Vec w(q);
  for (int c = 0; c < q; ++c) w(c) = amplitude(c) * envelope * normal(rng);
  return w;
}

ProbeNoise::ProbeNoise(const ProbeSpec& spec) : spec_(spec), rng_(spec.seed) {}

Vec ProbeNoise::next(long k, int dim) {
  const double scale = spec_.amplitude * std::exp(-spec_.decay * static_cast<double>(k));
  Vec v(dim);
  for (int c = 0; c < dim; ++c) v(c) = scale * uniform_(rng_);
  return v;
}

bool TrajectoryLog::operator==(const TrajectoryLog& o) const {
  auto same = [](const std::vector<std::vector<Vec>>& a, const std::vector<std::vector<Vec>>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a[k].size() != b[k].size()) return false;
      for (std::size_t i = 0; i < a[k].size(); ++i)
        if (a[k][i].size() != b[k][i].size() || a[k][i] != b[k][i]) return false;
    }
    return true;
  };
  if (horizon != o.horizon || leader.size() != o.leader.size() || costs != o.costs) return false;
  for (std::size_t k = 0; k < leader.size(); ++k)
    if (leader[k] != o.leader[k]) return false;
  return same(states, o.states) && same(errors, o.errors) && same(controls, o.controls) &&
         same(disturbances, o.disturbances);
}

namespace {

std::vector<Vec> all_errors(const GraphTopology& topology, const std::vector<Vec>& x, const Vec& x0) {
  std::vector<Vec> out;
  out.reserve(x.size());
  for (int i = 0; i < topology.n_agents(); ++i) out.push_back(neighborhood_error(topology, x, x0, i));
  return out;
}

void require_finite(const std::vector<Vec>& v, long k, const char* what) {
  for (const Vec& x : v)
    if (!x.allFinite()) throw Error(ErrorKind::NumericalDivergence, std::string("non-finite ") + what, k);
}

}  // namespace

TrajectoryLog simulate(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                       const SimulationSetup& setup, const InputOffsets& offsets) {
  const int n_agents = model.n_agents();
  const int n = model.state_dim(), p = model.control_dim(), q = model.disturbance_dim();
  const int horizon = setup.horizon;
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  if (topology.n_agents() != n_agents) throw Error(ErrorKind::DimensionMismatch, "topology and model sizes differ");
  if (static_cast<int>(setup.policies.size()) != n_agents ||
      static_cast<int>(setup.initial_states.size()) != n_agents)
    throw Error(ErrorKind::DimensionMismatch, "one policy and one initial state per agent required");
  if (!setup.external.empty() && static_cast<int>(setup.external.size()) != n_agents)
    throw Error(ErrorKind::DimensionMismatch, "external disturbances must be given per agent");
  if (setup.initial_leader.size() != n) throw Error(ErrorKind::DimensionMismatch, "leader state has wrong size");
  for (const Vec& x : setup.initial_states)
    if (x.size() != n) throw Error(ErrorKind::DimensionMismatch, "initial state has wrong size");
  auto offset_at = [&](const std::vector<Vec>& seq, int k, int dim) -> Vec {
    if (k < static_cast<int>(seq.size())) return seq[k];
    return Vec::Zero(dim);
  };

  std::optional<ProbeNoise> probe;
  if (setup.probe) probe.emplace(*setup.probe);

  TrajectoryLog log;
  log.horizon = horizon;
  std::vector<Vec> x = setup.initial_states;
  Vec x0 = setup.initial_leader;
  for (int k = 0; k < horizon; ++k) {
    std::vector<Vec> delta = all_errors(topology, x, x0);
    std::vector<Vec> u(n_agents), w(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      u[i] = setup.policies[i].control(delta[i]);
      if (probe) u[i] += probe->next(k, p);
      w[i] = setup.actuate_disturbance_policy ? setup.policies[i].disturbance(delta[i]) : Vec(Vec::Zero(q));
      if (!setup.external.empty()) w[i] += setup.external[i].sample(i, k, q);
      if (i == offsets.agent) {
        u[i] += offset_at(offsets.control, k, p);
        w[i] += offset_at(offsets.disturbance, k, q);
      }
    }
    require_finite(u, k, "control");
    require_finite(w, k, "disturbance");
    std::vector<double> cost(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      std::vector<Vec> un, wn;
      for (int j : topology.neighbors(i)) {
        un.push_back(u[j]);
        wn.push_back(w[j]);
      }
      cost[i] = stage_cost(weights, i, delta[i], u[i], un, w[i], wn);
      if (!std::isfinite(cost[i])) throw Error(ErrorKind::NumericalDivergence, "non-finite stage cost", k);
    }
    log.leader.push_back(x0);
    log.states.push_back(x);
    log.errors.push_back(std::move(delta));
    log.controls.push_back(u);
    log.disturbances.push_back(w);
    log.costs.push_back(std::move(cost));
    for (int i = 0; i < n_agents; ++i) x[i] = step_follower(model, i, x[i], u[i], w[i]);
    x0 = step_leader(model, x0);
    require_finite(x, k + 1, "state");
    if (!x0.allFinite()) throw Error(ErrorKind::NumericalDivergence, "non-finite leader state", k + 1);
  }
  log.leader.push_back(x0);
  log.states.push_back(x);
  log.errors.push_back(all_errors(topology, x, x0));
  return log;
}

std::vector<std::vector<Vec>> iterate_error_dynamics(const FleetModel& model, const GraphTopology& topology,
                                                     const TrajectoryLog& log) {
  const int n_agents = log.n_agents();
  std::vector<std::vector<Vec>> path;
  path.reserve(log.horizon + 1);
  path.push_back(log.errors.front());
  for (int k = 0; k < log.horizon; ++k) {
    std::vector<Vec> next(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      NeighborInputs un, wn;
      for (int j : topology.neighbors(i)) {
        un[j] = log.controls[k][j];
        wn[j] = log.disturbances[k][j];
      }
      next[i] = step_error_dynamics(model, topology, i, path.back()[i], log.controls[k][i], un,
                                    log.disturbances[k][i], wn);
    }
    path.push_back(std::move(next));
  }
  return path;
}

}  // namespace qgame

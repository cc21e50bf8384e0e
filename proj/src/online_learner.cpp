#include "qgame/online_learner.hpp"

#include "qgame/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qgame {

namespace {

constexpr double kDivergenceNorm = 1e8;

void require_finite(const Mat& w, const char* net) {
  if (!w.allFinite()) throw Error(ErrorKind::NonFiniteWeights, std::string(net) + " weights became non-finite");
}

}  // namespace

double td_error(const LearnerState& state, const Vec& z, double r, const Vec& z_next) {
  const int m = static_cast<int>(state.critic.rows());
  if (z.size() != m || z_next.size() != m) throw Error(ErrorKind::DimensionMismatch, "stacked vector has wrong size");
  return r + z_next.dot(state.critic * z_next) - z.dot(state.critic * z);
}

LearnerState critic_update(const LearnerState& state, const Vec& z, const Vec& z_next, double td) {
  LearnerState out = state;
  out.critic = state.critic - state.rates.critic * td * (z_next * z_next.transpose() - z * z.transpose());
  out.critic = symmetrize(out.critic);
  require_finite(out.critic, "critic");
  return out;
}

Mat network_update(const Mat& weights, const Vec& phi, const Vec& target, double rate) {
  Mat out = weights - rate * phi * (weights.transpose() * phi - target).transpose();
  require_finite(out, "policy network");
  return out;
}

LearnerState actor_update(const LearnerState& state, const Vec& delta, const Vec& target) {
  LearnerState out = state;
  out.actor = network_update(state.actor, features(state.basis, delta), target, state.rates.actor);
  return out;
}

LearnerState disturber_update(const LearnerState& state, const Vec& delta, const Vec& target) {
  LearnerState out = state;
  out.disturber = network_update(state.disturber, features(state.basis, delta), target, state.rates.disturber);
  return out;
}

LearnerState adversary_update(const LearnerState& state, int slot, const Vec& delta, const Vec& control_target,
                              const Vec& disturbance_target) {
  if (slot < 0 || slot >= static_cast<int>(state.adversary_control.size()))
    throw Error(ErrorKind::UnknownAgent, "adversary slot out of range");
  LearnerState out = state;
  const Vec phi = features(state.basis, delta);
  out.adversary_control[slot] =
      network_update(state.adversary_control[slot], phi, control_target, state.rates.adversary_control);
  out.adversary_disturbance[slot] =
      network_update(state.adversary_disturbance[slot], phi, disturbance_target, state.rates.adversary_disturbance);
  return out;
}

namespace {

QKernel critic_kernel(const LearnerState& state) {
  QKernel k;
  k.agent = state.agent;
  k.S = state.critic;
  k.blocks = state.blocks;
  k.mode = state.mode;
  return k;
}

Vec stack(const std::vector<Vec>& parts) {
  Eigen::Index len = 0;
  for (const Vec& v : parts) len += v.size();
  Vec out(len);
  Eigen::Index off = 0;
  for (const Vec& v : parts) {
    out.segment(off, v.size()) = v;
    off += v.size();
  }
  return out;
}

}  // namespace

ControlDisturbancePair coop_targets(const LearnerState& state, const Vec& delta, const std::vector<Vec>& u_neighbors,
                                    const std::vector<Vec>& w_neighbors) {
  const CoopGains g = joint_stationary_policies_coop(critic_kernel(state));
  const Vec un = stack(u_neighbors), wn = stack(w_neighbors);
  return {g.control(delta, un, wn), g.disturbance(delta, un, wn)};
}

WorstCaseActions noncoop_targets(const LearnerState& state, const Vec& delta) {
  const BlockMap& b = state.blocks;
  const Vec act = joint_stationary_policies_noncoop(critic_kernel(state)) * delta;
  WorstCaseActions out;
  out.u = act.segment(b.control() - b.n, b.p);
  out.w = act.segment(b.disturbance() - b.n, b.q);
  for (int a = 0; a < b.n_neighbors; ++a) {
    out.u_neighbors.push_back(act.segment(b.neighbor_control(a) - b.n, b.p));
    out.w_neighbors.push_back(act.segment(b.neighbor_disturbance(a) - b.n, b.q));
  }
  return out;
}

std::vector<LearnerState> initial_learner_states(const FleetModel& model, const GraphTopology& topology,
                                                 const GameWeights& weights, const LearnerInit& init) {
  weights.validate(model, topology);
  const int n = model.state_dim(), p = model.control_dim(), q = model.disturbance_dim();
  const int dim = basis_dim(init.basis, n);
  std::vector<LearnerState> states;
  for (int i = 0; i < model.n_agents(); ++i) {
    LearnerState s;
    s.agent = i;
    s.mode = weights.mode;
    s.basis = init.basis;
    s.blocks = BlockMap::for_agent(model, topology, i);
    s.rates = init.rates;
    const Mat m = stacked_input_matrix(model, topology, i);
    s.critic = symmetrize(cost_matrix(weights, s.blocks, i) + init.critic_value_scale * m.transpose() * m);
    s.actor = Mat::Zero(dim, p);
    s.disturber = Mat::Zero(dim, q);
    if (weights.mode == GameMode::noncooperative) {
      s.adversary_control.assign(s.blocks.n_neighbors, Mat::Zero(dim, p));
      s.adversary_disturbance.assign(s.blocks.n_neighbors, Mat::Zero(dim, q));
    }
    if (init.actor_from_critic) {
      Mat gain;
      if (weights.mode == GameMode::cooperative)
        gain = joint_stationary_policies_coop(critic_kernel(s)).control_delta;
      else
        gain = joint_stationary_policies_noncoop(critic_kernel(s)).topRows(p);
      s.actor.topRows(n) = gain.transpose();
    }
    states.push_back(std::move(s));
  }
  return states;
}

const char* training_disturbance_name(TrainingDisturbance t) {
  switch (t) {
    case TrainingDisturbance::learned: return "learned";
    case TrainingDisturbance::external: return "external";
    case TrainingDisturbance::learned_plus_external: return "learned_plus_external";
  }
  return "learned";
}

TrainingDisturbance parse_training_disturbance(const std::string& name) {
  if (name == "learned") return TrainingDisturbance::learned;
  if (name == "external") return TrainingDisturbance::external;
  if (name == "learned_plus_external") return TrainingDisturbance::learned_plus_external;
  throw Error(ErrorKind::ValidationError, "unknown training disturbance '" + name + "'");
}

namespace {

void record_weights(OnlineResult& res, int step, const std::vector<LearnerState>& states) {
  std::vector<WeightSnapshot> snap;
  for (const LearnerState& s : states) {
    const int id = s.agent;
    res.history.push_back({step, id, "critic", s.critic.norm()});
    res.history.push_back({step, id, "actor", s.actor.norm()});
    res.history.push_back({step, id, "disturber", s.disturber.norm()});
    for (std::size_t a = 0; a < s.adversary_control.size(); ++a) {
      res.history.push_back({step, id, "adversary_control_" + std::to_string(a), s.adversary_control[a].norm()});
      res.history.push_back(
          {step, id, "adversary_disturbance_" + std::to_string(a), s.adversary_disturbance[a].norm()});
    }
    snap.push_back({s.critic, s.actor, s.disturber});
    double worst = std::max({s.critic.norm(), s.actor.norm(), s.disturber.norm()});
    for (std::size_t a = 0; a < s.adversary_control.size(); ++a)
      worst = std::max({worst, s.adversary_control[a].norm(), s.adversary_disturbance[a].norm()});
    if (!(worst <= kDivergenceNorm))
      throw Error(ErrorKind::NumericalDivergence, "weights of agent " + std::to_string(id) + " exceed 1e8", step);
  }
  res.snapshots.push_back(std::move(snap));
}

}  // namespace

OnlineResult run_online(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                        const std::vector<LearnerState>& init, const OnlineOptions& options) {
  weights.validate(model, topology);
  const int n_agents = model.n_agents(), n = model.state_dim(), p = model.control_dim(), q = model.disturbance_dim();
  const int horizon = options.horizon;
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  if (static_cast<int>(init.size()) != n_agents) throw Error(ErrorKind::DimensionMismatch, "one learner per agent");
  if (static_cast<int>(options.initial_states.size()) != n_agents || options.initial_leader.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "initial states do not match the model");
  const bool use_external = options.training != TrainingDisturbance::learned;
  const bool use_learned = options.training != TrainingDisturbance::external;
  if (use_external && static_cast<int>(options.external.size()) != n_agents)
    throw Error(ErrorKind::DimensionMismatch, "external disturbance required per agent");
  const bool coop = weights.mode == GameMode::cooperative;
  std::vector<Mat> lambdas;
  for (int i = 0; i < n_agents; ++i) {
    if (init[i].mode != weights.mode) throw Error(ErrorKind::WrongMode, "learner mode differs from game mode");
    lambdas.push_back(cost_matrix(weights, init[i].blocks, i));
  }

  std::optional<ProbeNoise> probe;
  if (options.probe) probe.emplace(*options.probe);

  OnlineResult res;
  res.skipped_updates.assign(n_agents, 0);
  res.max_critic_activation.assign(n_agents, 0.0);
  res.max_actor_activation.assign(n_agents, 0.0);
  std::vector<LearnerState> states = init;
  record_weights(res, 0, states);

  TrajectoryLog& log = res.log;
  log.horizon = horizon;
  std::vector<Vec> x = options.initial_states;
  Vec x0 = options.initial_leader;
  std::vector<Vec> prev_z(n_agents);
  std::vector<double> prev_r(n_agents, 0.0);

  for (int k = 0; k <= horizon; ++k) {
    std::vector<Vec> delta(n_agents), u_pol(n_agents), w_pol(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      delta[i] = neighborhood_error(topology, x, x0, i);
      u_pol[i] = states[i].actor.transpose() * features(states[i].basis, delta[i]);
      w_pol[i] = states[i].disturber.transpose() * features(states[i].basis, delta[i]);
    }
    // Neighbor entries of z at policy actions: measured (cooperative) or adversary estimates.
    std::vector<std::vector<Vec>> un_pol(n_agents), wn_pol(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      const auto& nb = topology.neighbors(i);
      const Vec phi = features(states[i].basis, delta[i]);
      for (std::size_t a = 0; a < nb.size(); ++a) {
        if (coop) {
          un_pol[i].push_back(u_pol[nb[a]]);
          wn_pol[i].push_back(w_pol[nb[a]]);
        } else {
          un_pol[i].push_back(states[i].adversary_control[a].transpose() * phi);
          wn_pol[i].push_back(states[i].adversary_disturbance[a].transpose() * phi);
        }
      }
    }

    // Critic update on the transition that ended at this step.
    if (k > 0) {
      std::vector<double> tds(n_agents);
      for (int i = 0; i < n_agents; ++i) {
        const Vec z_next = states[i].blocks.assemble(delta[i], u_pol[i], un_pol[i], w_pol[i], wn_pol[i]);
        tds[i] = td_error(states[i], prev_z[i], prev_r[i], z_next);
        res.max_critic_activation[i] = std::max(
            res.max_critic_activation[i], (z_next * z_next.transpose() - prev_z[i] * prev_z[i].transpose()).norm());
        states[i] = critic_update(states[i], prev_z[i], z_next, tds[i]);
      }
      res.td_errors.push_back(std::move(tds));
    }

    // Policy updates from the current critic; all agents read the same step-k measurements.
    std::vector<LearnerState> next = states;
    for (int i = 0; i < n_agents; ++i) {
      res.max_actor_activation[i] =
          std::max(res.max_actor_activation[i], features(states[i].basis, delta[i]).norm());
      try {
        if (coop) {
          const ControlDisturbancePair t = coop_targets(states[i], delta[i], un_pol[i], wn_pol[i]);
          next[i] = actor_update(next[i], delta[i], t.u);
          next[i] = disturber_update(next[i], delta[i], t.w);
        } else {
          const WorstCaseActions t = noncoop_targets(states[i], delta[i]);
          next[i] = actor_update(next[i], delta[i], t.u);
          next[i] = disturber_update(next[i], delta[i], t.w);
          for (int a = 0; a < states[i].blocks.n_neighbors; ++a)
            next[i] = adversary_update(next[i], a, delta[i], t.u_neighbors[a], t.w_neighbors[a]);
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::SingularSchurComplement && e.kind() != ErrorKind::SingularBlockMatrix) throw;
        next[i] = states[i];
        ++res.skipped_updates[i];
      }
    }
    if (k == horizon) {
      log.leader.push_back(x0);
      log.states.push_back(x);
      log.errors.push_back(delta);
      states = std::move(next);
      record_weights(res, k + 1, states);
      break;
    }

    // Actuation.
    std::vector<Vec> u(n_agents), w(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      u[i] = u_pol[i];
      if (probe) u[i] += probe->next(k, p);
      w[i] = use_learned ? w_pol[i] : Vec(Vec::Zero(q));
      if (use_external) w[i] += options.external[i].sample(i, k, q);
    }
    std::vector<double> cost(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      std::vector<Vec> un_applied, wn_applied;
      for (int j : topology.neighbors(i)) {
        un_applied.push_back(u[j]);
        wn_applied.push_back(w[j]);
      }
      cost[i] = stage_cost(weights, i, delta[i], u[i], un_applied, w[i], wn_applied);
      // The learner's own view of the transition.
      const auto& un_z = coop ? un_applied : un_pol[i];
      const auto& wn_z = coop ? wn_applied : wn_pol[i];
      prev_z[i] = states[i].blocks.assemble(delta[i], u[i], un_z, w[i], wn_z);
      prev_r[i] = prev_z[i].dot(lambdas[i] * prev_z[i]);
    }
    log.leader.push_back(x0);
    log.states.push_back(x);
    log.errors.push_back(delta);
    log.controls.push_back(u);
    log.disturbances.push_back(w);
    log.costs.push_back(cost);
    for (int i = 0; i < n_agents; ++i) {
      x[i] = step_follower(model, i, x[i], u[i], w[i]);
      if (!x[i].allFinite()) throw Error(ErrorKind::NumericalDivergence, "state became non-finite", k + 1);
    }
    x0 = step_leader(model, x0);
    states = std::move(next);
    record_weights(res, k + 1, states);
  }
  res.final_states = states;
  return res;
}

LyapunovDiagnostic lyapunov_diagnostic(const OnlineResult& run, const std::vector<ReferenceWeights>& reference,
                                       double actor_weighting, double disturber_weighting) {
  if (run.snapshots.empty()) throw Error(ErrorKind::MissingReference, "run has no weight snapshots");
  const int n_agents = static_cast<int>(run.snapshots.front().size());
  if (static_cast<int>(reference.size()) != n_agents)
    throw Error(ErrorKind::MissingReference, "one reference per agent required");
  LyapunovDiagnostic out;
  const int steps = static_cast<int>(run.snapshots.size());
  const int window_start = steps - std::max(1, steps / 5);
  for (int i = 0; i < n_agents; ++i) {
    const LearnerRates& rates = run.final_states.at(i).rates;
    const ReferenceWeights& ref = reference[i];
    std::vector<double> series;
    for (int k = 0; k < steps; ++k) {
      const WeightSnapshot& s = run.snapshots[k][i];
      if (s.critic.rows() != ref.critic.rows() || s.actor.rows() != ref.actor.rows() ||
          s.disturber.rows() != ref.disturber.rows())
        throw Error(ErrorKind::MissingReference, "reference weights have wrong shape");
      series.push_back((s.critic - ref.critic).squaredNorm() / rates.critic +
                       (s.actor - ref.actor).squaredNorm() / (rates.actor * actor_weighting) +
                       (s.disturber - ref.disturber).squaredNorm() / (rates.disturber * disturber_weighting));
    }
    const double early = *std::max_element(series.begin(), series.begin() + std::max(1, window_start));
    const double late = *std::max_element(series.begin() + window_start, series.end());
    out.final_window_sup.push_back(late);
    out.bounded.push_back(std::isfinite(late) && late <= early * (1.0 + 1e-9));
    const double eta = run.max_critic_activation.at(i), phi = run.max_actor_activation.at(i);
    const bool ok = eta > 0.0 && phi > 0.0 && rates.critic >= 1.0 / (eta * eta) &&
                    rates.actor >= 1.0 / (2.0 * phi * phi) && rates.disturber >= 1.0 / (2.0 * phi * phi);
    out.rates_sufficient.push_back(ok);
    out.series.push_back(std::move(series));
  }
  return out;
}

}  // namespace qgame

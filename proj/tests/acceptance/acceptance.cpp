// Acceptance harness: one PASS/FAIL line per criterion.
#include "qgame/errors.hpp"
#include "qgame/experiment.hpp"
#include "qgame/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace qgame;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qgame_acceptance_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Isolated pinned agent as a one-agent fleet.
struct Single {
  FleetModel model;
  GraphTopology topo;
  GameWeights weights;
};

Single single_agent(const Mat& a, const Mat& b, const Mat& e, double beta) {
  FleetModel model(a, {b}, {e});
  GraphTopology topo = GraphTopology::build({}, {0}, 1);
  const int n = static_cast<int>(a.rows());
  const int p = static_cast<int>(b.cols());
  const int q = static_cast<int>(e.cols());
  GameWeights w = GameWeights::uniform(model, topo, GameMode::cooperative, Mat::Identity(n, n), Mat::Identity(p, p),
                                       Mat::Identity(q, q), Mat::Identity(p, p), Mat::Identity(q, q), beta);
  return {model, topo, w};
}

Mat sec5_drift() {
  Mat a(2, 2);
  a << 0.995, 0.09983, -0.09983, 0.995;
  return a;
}

Mat col2(double x, double y) {
  Mat m(2, 1);
  m << x, y;
  return m;
}

// Least-squares kernel from 400 excited transitions against the Riccati kernel.
double identification_error(const Single& s, std::uint64_t seed) {
  const ValueKernel oracle = riccati_oracle_single_agent(s.model, s.topo, s.weights, 0);
  const QKernel exact = qkernel_from_value(s.model, s.topo, s.weights, 0, oracle);
  const auto [k, l] = saddle_gains(s.model, s.topo, s.weights, 0, oracle.P);
  const int n = s.model.state_dim();
  const int transitions = 400;

  SimulationSetup setup;
  setup.policies = {FeedbackPolicy::linear(k, l)};
  setup.initial_states = {Vec::Constant(n, 1.0)};
  setup.initial_leader = Vec::Zero(n);
  setup.horizon = transitions;
  InputOffsets excite;
  excite.agent = 0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  for (int t = 0; t < transitions; ++t) {
    Vec du(s.model.control_dim()), dw(s.model.disturbance_dim());
    for (Eigen::Index c = 0; c < du.size(); ++c) du(c) = uni(rng);
    for (Eigen::Index c = 0; c < dw.size(); ++c) dw(c) = uni(rng);
    excite.control.push_back(du);
    excite.disturbance.push_back(dw);
  }
  const TrajectoryLog log = simulate(s.model, s.topo, s.weights, setup, excite);

  EvaluationDataset data;
  data.agent = 0;
  data.blocks = BlockMap::for_agent(s.model, s.topo, 0);
  for (int t = 0; t < transitions; ++t) {
    const Vec& d = log.errors[t][0];
    const Vec& dn = log.errors[t + 1][0];
    data.z.push_back(data.blocks.assemble(d, log.controls[t][0], {}, log.disturbances[t][0], {}));
    data.r.push_back(log.costs[t][0]);
    data.z_next.push_back(data.blocks.assemble(dn, k * dn, {}, l * dn, {}));
  }
  const QKernel learned = policy_eval_lsq(data, GameMode::cooperative);
  return (learned.S - exact.S).norm() / exact.S.norm();
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const Single scalar = single_agent(Mat::Constant(1, 1, 0.8), Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 0.4), 2.0);
  const Single planar = single_agent(sec5_drift(), col2(0.2, 0.1), col2(0.16, 0.024), 2.0);
  const double e1 = identification_error(scalar, 11);
  const double e2 = identification_error(planar, 12);
  const double elapsed = seconds_since(t0);
  return {e1 <= 1e-6 && e2 <= 1e-6 && elapsed < 5.0,
          "relative Frobenius error scalar " + fmt(e1) + ", 2-state " + fmt(e2) + " (<= 1e-6); " + fmt(elapsed) +
              " s (< 5 s)"};
}

Outcome coop_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = scratch("coop");
  const RunOutcome out = reproduce_reference(ReproCase::coop, dir);
  const double elapsed = seconds_since(t0);
  // Recompute from the written trajectory rather than trusting the summary.
  const Metrics m = metrics(read_trajectory_csv(dir / "trajectory.csv"));
  const double settle = out.summary.at("weight_final_window_relative_change").get<double>();
  const bool ok = m.final_window_max_error < 0.05 && settle < 0.01 && elapsed < 30.0;
  return {ok, "final-10% max |x_i - x_0| " + fmt(m.final_window_max_error) + " (< 0.05); weight relative change " +
                  fmt(settle) + " (< 0.01); " + fmt(elapsed) + " s (< 30 s)"};
}

Outcome noncoop_reproduction() {
  const auto dir = scratch("noncoop");
  const RunOutcome out = reproduce_reference(ReproCase::noncoop, dir);
  const Metrics m = metrics(read_trajectory_csv(dir / "trajectory.csv"));
  const double adversary = out.summary.at("adversary_max_norm").get<double>();
  const bool ok = m.final_window_max_error < 0.05 && adversary < 1e3;
  return {ok, "final-10% max |x_i - x_0| " + fmt(m.final_window_max_error) + " (< 0.05); adversary max norm " +
                  fmt(adversary) + " (< 1e3)"};
}

Outcome saddle_property() {
  const ExperimentConfig cfg = preset("paper-sec5-coop");
  const LearnedFleet lf = learn(cfg, GameMode::cooperative);
  const GameWeights weights = cfg.weights(GameMode::cooperative);
  const auto gaps =
      saddle_gap(cfg.model(), cfg.topology(), weights, learned_setup(cfg, lf.policies), cfg.saddle.scale, 200, cfg.seed);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const bool agent_ok = gaps[i].gap_u >= -1e-3 && gaps[i].gap_w <= 1e-3;
    ok = ok && agent_ok;
    detail += "agent " + std::to_string(i + 1) + " gap_u " + fmt(gaps[i].gap_u) + " gap_w " + fmt(gaps[i].gap_w) +
              (agent_ok ? "" : " [violated]") + "; ";
  }
  return {ok, detail + "need gap_u >= -1e-3, gap_w <= 1e-3"};
}

// Decoupled pinned agents with disturbance channels parallel to the control channels.
Outcome lyapunov_decrease() {
  struct Case {
    Mat a;
    std::vector<Mat> b;
    double disturbance_ratio;
    double beta;
    std::vector<Vec> x0;
    Vec leader;
  };
  std::vector<Case> cases;
  cases.push_back({Mat::Constant(1, 1, 0.8), {Mat::Constant(1, 1, 1.0)}, 0.4, 2.0, {Vec::Constant(1, 1.5)},
                   Vec::Constant(1, 0.2)});
  {
    Vec l(2), a1(2), a2(2), a3(2);
    l << 0.4, 0.5;
    a1 << 0.8, 1.1;
    a2 << 0.9, 0.3;
    a3 << 1.2, 0.8;
    cases.push_back({sec5_drift(), {col2(0.2047, 0.08984), col2(0.2097, 0.1897), col2(0.2, 0.1)}, 0.5, 1.0,
                     {a1, a2, a3}, l});
  }
  bool ok = true;
  double worst = -std::numeric_limits<double>::infinity();
  std::string detail;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Case& cs = cases[c];
    const int agents = static_cast<int>(cs.b.size());
    const int n = static_cast<int>(cs.a.rows());
    std::vector<Mat> e;
    std::vector<int> pins;
    for (int i = 0; i < agents; ++i) {
      e.push_back(cs.disturbance_ratio * cs.b[i]);
      pins.push_back(i);
    }
    const FleetModel model(cs.a, cs.b, e);
    const GraphTopology topo = GraphTopology::build({}, pins, agents);
    const GameWeights weights =
        GameWeights::uniform(model, topo, GameMode::cooperative, Mat::Identity(n, n), Mat::Identity(1, 1),
                             Mat::Identity(1, 1), Mat::Identity(1, 1), Mat::Identity(1, 1), cs.beta);
    for (const AttenuationMargin& m : check_attenuation_coop(model, topo, weights))
      if (!m.pass) {
        ok = false;
        detail += "case " + std::to_string(c + 1) + " fails attenuation; ";
      }
    SimulationSetup setup;
    std::vector<Mat> values;
    for (int i = 0; i < agents; ++i) {
      const ValueKernel v = riccati_oracle_single_agent(model, topo, weights, i);
      const auto [k, l] = saddle_gains(model, topo, weights, i, v.P);
      setup.policies.push_back(FeedbackPolicy::linear(k, l));
      values.push_back(v.P);
    }
    setup.initial_states = cs.x0;
    setup.initial_leader = cs.leader;
    setup.horizon = 200;
    const TrajectoryLog log = simulate(model, topo, weights, setup);
    for (int k = 0; k < setup.horizon; ++k)
      for (int i = 0; i < agents; ++i) {
        const Vec& d = log.errors[k][i];
        const Vec& dn = log.errors[k + 1][i];
        const double dv = dn.dot(values[i] * dn) - d.dot(values[i] * d);
        const double bound = -min_eigenvalue(weights.state_weight[i]) * d.squaredNorm();
        worst = std::max(worst, dv - bound);
        if (dv > bound + 1e-8) ok = false;
      }
  }
  return {ok, detail + "max (dV - bound) over 200 steps " + fmt(worst) + " (<= 1e-8)"};
}

Outcome l2_gain() {
  bool ok = true;
  std::string detail;
  for (GameMode mode : {GameMode::cooperative, GameMode::noncooperative}) {
    const ExperimentConfig cfg =
        preset(mode == GameMode::cooperative ? "paper-sec5-coop" : "paper-sec5-noncoop");
    const LearnedFleet lf = learn(cfg, mode);
    const GameWeights weights = cfg.weights(mode);
    std::vector<L2GainResult> res;
    try {
      res = l2_at_policies(cfg, weights, lf.policies);
    } catch (const Error& e) {
      ok = false;
      detail += std::string(mode_name(mode)) + ": " + e.what() + "; ";
      continue;
    }
    detail += std::string(mode_name(mode)) + " slack";
    for (const L2GainResult& r : res) {
      ok = ok && r.slack >= 0.0 && r.tail_fraction < 0.01;
      detail += " " + fmt(r.slack);
    }
    detail += "; ";
  }
  return {ok, detail + "need slack >= 0 with tail < 1%"};
}

// Small relative neighbor weights: rho = kappa = 0.01.
Outcome monotonicity() {
  bool ok = true;
  std::string detail;
  const ExperimentConfig base = preset("paper-sec5-coop");
  const FleetModel model = base.model();
  const GraphTopology topo = base.topology();
  const Mat q = Mat::Identity(2, 2);
  struct Setting {
    GameMode mode;
    double own;
    double neighbor;
    double beta;
  };
  for (const Setting& s : {Setting{GameMode::cooperative, 1.0, 0.01, 5.0},
                           Setting{GameMode::noncooperative, 1.0, 0.01, 40.0}}) {
    const GameWeights weights =
        GameWeights::uniform(model, topo, s.mode, q, Mat::Constant(1, 1, s.own), Mat::Constant(1, 1, s.own),
                             Mat::Constant(1, 1, s.neighbor), Mat::Constant(1, 1, s.neighbor), s.beta);
    const auto init = local_lqr_gains(model, topo, weights);
    PiOptions opts;
    const PiResult res = s.mode == GameMode::cooperative ? run_pi_coop(model, topo, weights, init, opts)
                                                         : run_pi_noncoop(model, topo, weights, init, opts);
    const MonotonicityReport rep = check_monotonicity(res.log, 1e-8);
    ok = ok && rep.inner_violations == 0 && rep.outer_violations == 0;
    detail += std::string(mode_name(s.mode)) + ": " + std::to_string(res.log.size()) + " evaluations, inner violations " +
              std::to_string(rep.inner_violations) + " (worst " + fmt(rep.worst_inner_decrease) +
              "), outer violations " + std::to_string(rep.outer_violations) + " (worst " +
              fmt(rep.worst_outer_increase) + "); ";
  }
  return {ok, detail + "slack 1e-8"};
}

// Elementwise expansions of the update laws, written independently of the library's matrix forms.
Outcome update_laws() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 2), nb(0, 2);
  auto rand_mat = [&](int r, int c) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = uni(rng);
    return m;
  };
  auto rand_vec = [&](int r) { return Vec(rand_mat(r, 1)); };
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = dim(rng), p = dim(rng), q = dim(rng), neighbors = nb(rng);
    LearnerState st;
    st.mode = trial % 2 ? GameMode::noncooperative : GameMode::cooperative;
    st.blocks = BlockMap(n, p, q, neighbors);
    const int m = st.blocks.size();
    st.critic = symmetrize(rand_mat(m, m));
    st.actor = rand_mat(n, p);
    st.disturber = rand_mat(n, q);
    for (int a = 0; a < neighbors; ++a) {
      st.adversary_control.push_back(rand_mat(n, p));
      st.adversary_disturbance.push_back(rand_mat(n, q));
    }
    st.rates = {0.1 + 0.1 * std::abs(uni(rng)), 0.1, 0.07, 0.05, 0.03};
    const Vec z = rand_vec(m), zn = rand_vec(m), delta = rand_vec(n);
    const double r = uni(rng);

    double e = r;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) e += st.critic(a, b) * (zn(a) * zn(b) - z(a) * z(b));
    worst = std::max(worst, std::abs(td_error(st, z, r, zn) - e));

    const LearnerState c = critic_update(st, z, zn, e);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double raw_ab = st.critic(a, b) - st.rates.critic * e * (zn(a) * zn(b) - z(a) * z(b));
        const double raw_ba = st.critic(b, a) - st.rates.critic * e * (zn(b) * zn(a) - z(b) * z(a));
        worst = std::max(worst, std::abs(c.critic(a, b) - 0.5 * (raw_ab + raw_ba)));
      }

    auto expand = [&](const Mat& w, const Vec& target, double rate) {
      Mat out = w;
      for (int a = 0; a < w.rows(); ++a)
        for (int b = 0; b < w.cols(); ++b) {
          double y = 0.0;
          for (int k = 0; k < w.rows(); ++k) y += w(k, b) * delta(k);
          out(a, b) = w(a, b) - rate * delta(a) * (y - target(b));
        }
      return out;
    };
    const Vec tu = rand_vec(p), tw = rand_vec(q);
    worst = std::max(worst, (actor_update(st, delta, tu).actor - expand(st.actor, tu, st.rates.actor)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (disturber_update(st, delta, tw).disturber - expand(st.disturber, tw, st.rates.disturber))
                                .cwiseAbs()
                                .maxCoeff());
    for (int a = 0; a < neighbors; ++a) {
      const LearnerState ad = adversary_update(st, a, delta, tu, tw);
      worst = std::max(worst, (ad.adversary_control[a] - expand(st.adversary_control[a], tu, st.rates.adversary_control))
                                  .cwiseAbs()
                                  .maxCoeff());
      worst = std::max(worst, (ad.adversary_disturbance[a] -
                               expand(st.adversary_disturbance[a], tw, st.rates.adversary_disturbance))
                                  .cwiseAbs()
                                  .maxCoeff());
    }
  }
  return {worst <= 1e-12, "max deviation from elementwise expansion over 200 random instances " + fmt(worst) +
                              " (<= 1e-12)"};
}

Outcome structural_invariants() {
  bool ok = true;
  double worst_bound = -std::numeric_limits<double>::infinity();
  double worst_path = 0.0;
  bool deterministic = true;
  for (GameMode mode : {GameMode::cooperative, GameMode::noncooperative}) {
    const ExperimentConfig cfg =
        preset(mode == GameMode::cooperative ? "paper-sec5-coop" : "paper-sec5-noncoop");
    const FleetModel model = cfg.model();
    const GraphTopology topo = cfg.topology();
    const LearnedFleet a = learn(cfg, mode);
    const LearnedFleet b = learn(cfg, mode);
    if (!(a.run.log == b.run.log)) deterministic = false;
    if (a.run.history.size() != b.run.history.size()) deterministic = false;
    for (std::size_t r = 0; r < a.run.history.size() && deterministic; ++r)
      if (a.run.history[r].frobenius_norm != b.run.history[r].frobenius_norm) deterministic = false;

    SimulationSetup disturbed = learned_setup(cfg, a.policies);
    disturbed.external = cfg.external_disturbances();
    const TrajectoryLog eval = simulate(model, topo, cfg.weights(mode), disturbed);
    for (const TrajectoryLog* log : {&a.run.log, &eval}) {
      for (std::size_t k = 0; k < log->states.size(); ++k) {
        const Vec delta = stacked_neighborhood_error(topo, log->states[k], log->leader[k]);
        double eps2 = 0.0;
        for (const Vec& x : log->states[k]) eps2 += (x - log->leader[k]).squaredNorm();
        worst_bound = std::max(worst_bound, std::sqrt(eps2) - disagreement_bound(topo, delta.norm(), model.state_dim()));
      }
      const auto iterated = iterate_error_dynamics(model, topo, *log);
      for (std::size_t k = 0; k < iterated.size(); ++k)
        for (std::size_t i = 0; i < iterated[k].size(); ++i)
          worst_path = std::max(worst_path, (iterated[k][i] - log->errors[k][i]).norm());
    }
  }
  // Byte-identical output files across reruns.
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  reproduce_reference(ReproCase::noncoop, d1);
  reproduce_reference(ReproCase::noncoop, d2);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  for (const auto& entry : std::filesystem::directory_iterator(d1))
    if (slurp(entry.path()) != slurp(d2 / entry.path().filename())) deterministic = false;
  ok = worst_bound <= 1e-12 && worst_path <= 1e-9 && deterministic;
  return {ok, "max (|eps| - bound) " + fmt(worst_bound) + " (<= 0); path mismatch " + fmt(worst_path) +
                  " (<= 1e-9); reruns " + (deterministic ? "bit-identical" : "differ")};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list = {
      {"model-free kernel matches Riccati kernel", oracle_equivalence},
      {"cooperative four-agent reproduction", coop_reproduction},
      {"non-cooperative four-agent reproduction", noncoop_reproduction},
      {"saddle point at learned cooperative policies", saddle_property},
      {"Lyapunov decrease with oracle kernels", lyapunov_decrease},
      {"L2-gain inequality at learned policies", l2_gain},
      {"policy iteration monotonicity", monotonicity},
      {"update laws match elementwise expansion", update_laws},
      {"disagreement bound, path consistency, determinism", structural_invariants},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qgame acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-based)")->check(CLI::Range(0, 9));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (std::size_t c = 0; c < criteria().size(); ++c) {
    if (only != 0 && static_cast<int>(c) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria()[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << (c + 1) << " [" << criteria()[c].first << "]: " << (o.pass ? "PASS" : "FAIL")
              << " - " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

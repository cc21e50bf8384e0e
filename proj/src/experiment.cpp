#include "qgame/experiment.hpp"

#include "qgame/errors.hpp"
#include "qgame/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qgame {

using nlohmann::json;

const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::simulate: return "simulate";
    case Algorithm::pi_coop: return "pi_coop";
    case Algorithm::pi_noncoop: return "pi_noncoop";
    case Algorithm::learn_coop: return "learn_coop";
    case Algorithm::learn_noncoop: return "learn_noncoop";
    case Algorithm::verify: return "verify";
  }
  return "simulate";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::simulate, Algorithm::pi_coop, Algorithm::pi_noncoop, Algorithm::learn_coop,
                      Algorithm::learn_noncoop, Algorithm::verify})
    if (name == algorithm_name(a)) return a;
  throw Error(ErrorKind::ValidationError, "algorithm: unknown value '" + name + "'");
}

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::ValidationError, path + ": " + what);
}

// Tracks which keys of an object were consumed so leftovers can be rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_, "expected an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) invalid(child(key), "missing required field");
    return *v;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) invalid(child(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double number(const json& v, const std::string& path) {
  if (!v.is_number()) invalid(path, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) invalid(path, "expected an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) invalid(path, "expected true or false");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) invalid(path, "expected a string");
  return v.get<std::string>();
}

Vec vector_of(const json& v, const std::string& path) {
  if (v.is_number()) return Vec::Constant(1, v.get<double>());
  if (!v.is_array() || v.empty()) invalid(path, "expected a non-empty array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t c = 0; c < v.size(); ++c) out(static_cast<Eigen::Index>(c)) = number(v[c], path + "[" + std::to_string(c) + "]");
  return out;
}

// A number is 1x1, a flat array is a column, a nested array lists rows.
Mat matrix_of(const json& v, const std::string& path) {
  if (v.is_number()) return Mat::Constant(1, 1, v.get<double>());
  if (!v.is_array() || v.empty()) invalid(path, "expected a matrix");
  if (!v.front().is_array()) return vector_of(v, path);
  const std::size_t cols = v.front().size();
  Mat out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!v[r].is_array() || v[r].size() != cols) invalid(rp, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(v[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return out;
}

std::vector<Mat> matrix_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) invalid(path, "expected a list of matrices");
  std::vector<Mat> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(matrix_of(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

int agent_id(const json& v, const std::string& path, int n_agents) {
  const int id = integer(v, path);
  if (id < 1 || id > n_agents) invalid(path, "agent id must be in [1, " + std::to_string(n_agents) + "]");
  return id - 1;
}

void parse_topology(ObjectReader& root, ExperimentConfig& cfg) {
  const std::string path = root.child("topology");
  ObjectReader r(root.require("topology"), path);
  const json& edges = r.require("edges");
  if (!edges.is_array()) invalid(path + ".edges", "expected a list of [from, to, weight]");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string ep = path + ".edges[" + std::to_string(e) + "]";
    if (!edges[e].is_array() || edges[e].size() != 3) invalid(ep, "expected [from, to, weight]");
    cfg.edges.push_back({agent_id(edges[e][0], ep + "[0]", cfg.n_agents), agent_id(edges[e][1], ep + "[1]", cfg.n_agents),
                         number(edges[e][2], ep + "[2]")});
  }
  const json* pins = r.find("pins");
  if (pins) {
    if (!pins->is_array()) invalid(path + ".pins", "expected a list of agent ids");
    for (std::size_t k = 0; k < pins->size(); ++k)
      cfg.pins.push_back(agent_id((*pins)[k], path + ".pins[" + std::to_string(k) + "]", cfg.n_agents));
  }
  r.finish();
}

void parse_dynamics(ObjectReader& root, ExperimentConfig& cfg) {
  const std::string path = root.child("dynamics");
  ObjectReader r(root.require("dynamics"), path);
  cfg.drift = matrix_of(r.require("A"), path + ".A");
  cfg.control_inputs = matrix_list(r.require("B"), path + ".B");
  cfg.disturbance_inputs = matrix_list(r.require("E"), path + ".E");
  r.finish();
}

void parse_weights(ObjectReader& root, ExperimentConfig& cfg) {
  const std::string path = root.child("weights");
  ObjectReader r(root.require("weights"), path);
  if (const json* v = r.find("mode")) cfg.mode = parse_mode(text(*v, path + ".mode"));
  cfg.state_weight = matrix_of(r.require("Q"), path + ".Q");
  cfg.control_weight = matrix_of(r.require("R"), path + ".R");
  cfg.disturbance_weight = matrix_of(r.require("T"), path + ".T");
  const json* rn = r.find("R_neighbor");
  cfg.neighbor_control_weight = rn ? matrix_of(*rn, path + ".R_neighbor") : cfg.control_weight;
  const json* tn = r.find("T_neighbor");
  cfg.neighbor_disturbance_weight = tn ? matrix_of(*tn, path + ".T_neighbor") : cfg.disturbance_weight;
  cfg.attenuation = number(r.require("attenuation"), path + ".attenuation");
  if (!(cfg.attenuation > 0.0)) invalid(path + ".attenuation", "attenuation must be > 0");
  r.finish();
}

void parse_initial(ObjectReader& root, ExperimentConfig& cfg) {
  const std::string path = root.child("initial_states");
  ObjectReader r(root.require("initial_states"), path);
  cfg.initial_leader = vector_of(r.require("leader"), path + ".leader");
  const json& f = r.require("followers");
  if (!f.is_array()) invalid(path + ".followers", "expected one state per follower");
  for (std::size_t i = 0; i < f.size(); ++i)
    cfg.initial_states.push_back(vector_of(f[i], path + ".followers[" + std::to_string(i) + "]"));
  r.finish();
}

void parse_disturbance(ObjectReader& root, ExperimentConfig& cfg) {
  const json* v = root.find("disturbance");
  if (!v) return;
  const std::string path = root.child("disturbance");
  ObjectReader r(*v, path);
  if (const json* k = r.find("kind")) cfg.disturbance.kind = parse_disturbance_kind(text(*k, path + ".kind"));
  if (const json* a = r.find("amplitude")) cfg.disturbance.amplitude = vector_of(*a, path + ".amplitude");
  if (const json* d = r.find("decay")) cfg.disturbance.decay = number(*d, path + ".decay");
  if (const json* w = r.find("frequency")) cfg.disturbance.frequency = number(*w, path + ".frequency");
  if (cfg.disturbance.kind != DisturbanceKind::zero && !(cfg.disturbance.decay > 0.0))
    invalid(path + ".decay", "decay must be > 0 for square-summable signals");
  r.finish();
}

void parse_probe(ObjectReader& root, ExperimentConfig& cfg) {
  const json* v = root.find("probe");
  if (!v) return;
  const std::string path = root.child("probe");
  ObjectReader r(*v, path);
  if (const json* e = r.find("enabled")) cfg.probe_enabled = boolean(*e, path + ".enabled");
  if (const json* a = r.find("amplitude")) cfg.probe.amplitude = number(*a, path + ".amplitude");
  if (const json* d = r.find("decay")) cfg.probe.decay = number(*d, path + ".decay");
  if (cfg.probe.amplitude < 0.0) invalid(path + ".amplitude", "must be >= 0");
  if (cfg.probe.decay < 0.0) invalid(path + ".decay", "must be >= 0");
  r.finish();
}

void parse_learning(ObjectReader& root, ExperimentConfig& cfg) {
  const json* v = root.find("learning");
  if (!v) return;
  const std::string path = root.child("learning");
  ObjectReader r(*v, path);
  auto rate = [&](const char* key, double& dst) {
    if (const json* x = r.find(key)) {
      dst = number(*x, path + "." + key);
      if (dst < 0.0) invalid(path + "." + key, "learning rate must be >= 0");
    }
  };
  rate("critic_rate", cfg.learner.rates.critic);
  rate("actor_rate", cfg.learner.rates.actor);
  rate("disturber_rate", cfg.learner.rates.disturber);
  rate("adversary_control_rate", cfg.learner.rates.adversary_control);
  rate("adversary_disturbance_rate", cfg.learner.rates.adversary_disturbance);
  if (const json* b = r.find("basis")) cfg.learner.basis = parse_basis(text(*b, path + ".basis"));
  if (const json* s = r.find("critic_init_value_scale"))
    cfg.learner.critic_value_scale = number(*s, path + ".critic_init_value_scale");
  if (const json* a = r.find("actor_from_critic")) cfg.learner.actor_from_critic = boolean(*a, path + ".actor_from_critic");
  if (const json* t = r.find("training_disturbance"))
    cfg.training = parse_training_disturbance(text(*t, path + ".training_disturbance"));
  r.finish();
}

void parse_pi(ObjectReader& root, ExperimentConfig& cfg) {
  const json* v = root.find("pi");
  if (!v) return;
  const std::string path = root.child("pi");
  ObjectReader r(*v, path);
  if (const json* e = r.find("evaluation")) {
    const std::string s = text(*e, path + ".evaluation");
    if (s == "model_based") cfg.pi.evaluation = Evaluation::model_based;
    else if (s == "data_driven") cfg.pi.evaluation = Evaluation::data_driven;
    else invalid(path + ".evaluation", "expected model_based or data_driven");
  }
  auto positive = [&](const char* key, double& dst) {
    if (const json* x = r.find(key)) {
      dst = number(*x, path + "." + key);
      if (!(dst > 0.0)) invalid(path + "." + key, "must be > 0");
    }
  };
  auto count = [&](const char* key, int& dst) {
    if (const json* x = r.find(key)) {
      dst = integer(*x, path + "." + key);
      if (dst < 1) invalid(path + "." + key, "must be >= 1");
    }
  };
  positive("eps_inner", cfg.pi.eps_inner);
  positive("eps_outer", cfg.pi.eps_outer);
  count("max_inner", cfg.pi.max_inner);
  count("max_outer", cfg.pi.max_outer);
  count("probe_states", cfg.pi.probe_states);
  count("transitions", cfg.pi.transitions);
  positive("excitation", cfg.pi.excitation);
  positive("residual_threshold", cfg.pi.residual_threshold);
  if (const json* g = r.find("initial_gains")) cfg.pi_initial_gains = matrix_list(*g, path + ".initial_gains");
  r.finish();
}

void parse_policies(ObjectReader& root, ExperimentConfig& cfg) {
  const json* v = root.find("policies");
  if (!v) return;
  const std::string path = root.child("policies");
  ObjectReader r(*v, path);
  if (const json* c = r.find("control_gains")) cfg.policy_control_gains = matrix_list(*c, path + ".control_gains");
  if (const json* d = r.find("disturbance_gains"))
    cfg.policy_disturbance_gains = matrix_list(*d, path + ".disturbance_gains");
  r.finish();
}

void parse_saddle(ObjectReader& root, ExperimentConfig& cfg) {
  const json* v = root.find("saddle");
  if (!v) return;
  const std::string path = root.child("saddle");
  ObjectReader r(*v, path);
  if (const json* s = r.find("scale")) cfg.saddle.scale = number(*s, path + ".scale");
  if (const json* n = r.find("samples")) cfg.saddle.samples = integer(*n, path + ".samples");
  if (cfg.saddle.scale < 0.0) invalid(path + ".scale", "must be >= 0");
  if (cfg.saddle.samples < 1) invalid(path + ".samples", "must be >= 1");
  r.finish();
}

// Runs every module precondition so failures surface before computation.
void validate(ExperimentConfig& cfg) {
  if (static_cast<int>(cfg.control_inputs.size()) != cfg.n_agents)
    invalid("dynamics.B", "expected one matrix per agent");
  if (static_cast<int>(cfg.disturbance_inputs.size()) != cfg.n_agents)
    invalid("dynamics.E", "expected one matrix per agent");
  if (static_cast<int>(cfg.initial_states.size()) != cfg.n_agents)
    invalid("initial_states.followers", "expected one state per agent");
  auto wrap = [](const char* path, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ValidationError) throw;
      invalid(path, e.what());
    }
  };
  wrap("topology", [&] { (void)cfg.topology(); });
  wrap("dynamics", [&] { (void)cfg.model(); });
  const FleetModel model = cfg.model();
  const GraphTopology topo = cfg.topology();
  wrap("weights", [&] {
    (void)cfg.weights(GameMode::cooperative);
    (void)cfg.weights(GameMode::noncooperative);
  });
  if (cfg.initial_leader.size() != model.state_dim()) invalid("initial_states.leader", "wrong dimension");
  for (std::size_t i = 0; i < cfg.initial_states.size(); ++i)
    if (cfg.initial_states[i].size() != model.state_dim())
      invalid("initial_states.followers[" + std::to_string(i) + "]", "wrong dimension");
  if (cfg.horizon < 1) invalid("horizon", "must be >= 1");
  if (cfg.disturbance.kind != DisturbanceKind::zero) {
    if (cfg.disturbance.amplitude.size() == 0) cfg.disturbance.amplitude = Vec::Constant(model.disturbance_dim(), 0.1);
    if (cfg.disturbance.amplitude.size() != model.disturbance_dim())
      invalid("disturbance.amplitude", "expected one entry per disturbance channel");
  }
  auto check_gains = [&](const std::vector<Mat>& g, int rows, const char* path) {
    if (g.empty()) return;
    if (static_cast<int>(g.size()) != cfg.n_agents) invalid(path, "expected one gain per agent");
    for (std::size_t i = 0; i < g.size(); ++i) {
      Mat m = g[i];
      if (m.cols() == 1 && rows == 1 && m.rows() == model.state_dim()) m.transposeInPlace();
      if (m.rows() != rows || m.cols() != model.state_dim())
        invalid(std::string(path) + "[" + std::to_string(i) + "]", "wrong gain shape");
    }
  };
  check_gains(cfg.pi_initial_gains, model.control_dim(), "pi.initial_gains");
  check_gains(cfg.policy_control_gains, model.control_dim(), "policies.control_gains");
  check_gains(cfg.policy_disturbance_gains, model.disturbance_dim(), "policies.disturbance_gains");
  // Flat arrays parse as columns; gains are rows.
  for (auto* list : {&cfg.pi_initial_gains, &cfg.policy_control_gains, &cfg.policy_disturbance_gains})
    for (Mat& m : *list)
      if (m.cols() == 1 && m.rows() == model.state_dim() && model.state_dim() > 1) m.transposeInPlace();
}

}  // namespace

FleetModel ExperimentConfig::model() const { return FleetModel(drift, control_inputs, disturbance_inputs); }

GraphTopology ExperimentConfig::topology() const { return GraphTopology::build(edges, pins, n_agents); }

GameWeights ExperimentConfig::weights(std::optional<GameMode> m) const {
  return GameWeights::uniform(model(), topology(), m.value_or(mode), state_weight, control_weight,
                              disturbance_weight, neighbor_control_weight, neighbor_disturbance_weight, attenuation);
}

std::vector<DisturbanceModel> ExperimentConfig::external_disturbances() const {
  return std::vector<DisturbanceModel>(n_agents, disturbance);
}

std::optional<ProbeSpec> ExperimentConfig::probe_spec() const {
  if (!probe_enabled) return std::nullopt;
  return probe;
}

void ExperimentConfig::set_seed(std::uint64_t s) {
  seed = s;
  probe.seed = s;
  disturbance.seed = s ^ 0x9e3779b97f4a7c15ULL;
  pi.seed = s;
}

json ExperimentConfig::to_json() const {
  json j;
  j["n_agents"] = n_agents;
  json edges_j = json::array();
  for (const Edge& e : edges) edges_j.push_back({e.from + 1, e.to + 1, e.weight});
  json pins_j = json::array();
  for (int p : pins) pins_j.push_back(p + 1);
  j["topology"] = {{"edges", edges_j}, {"pins", pins_j}};
  json b = json::array(), e = json::array();
  for (const Mat& m : control_inputs) b.push_back(matrix_json(m));
  for (const Mat& m : disturbance_inputs) e.push_back(matrix_json(m));
  j["dynamics"] = {{"A", matrix_json(drift)}, {"B", b}, {"E", e}};
  j["weights"] = {{"mode", mode_name(mode)},
                  {"Q", matrix_json(state_weight)},
                  {"R", matrix_json(control_weight)},
                  {"T", matrix_json(disturbance_weight)},
                  {"R_neighbor", matrix_json(neighbor_control_weight)},
                  {"T_neighbor", matrix_json(neighbor_disturbance_weight)},
                  {"attenuation", attenuation}};
  json followers = json::array();
  for (const Vec& x : initial_states) followers.push_back(vector_json(x));
  j["initial_states"] = {{"leader", vector_json(initial_leader)}, {"followers", followers}};
  j["algorithm"] = algorithm_name(algorithm);
  j["horizon"] = horizon;
  j["seed"] = seed;
  json dist = {{"kind", disturbance_kind_name(disturbance.kind)},
               {"decay", disturbance.decay},
               {"frequency", disturbance.frequency}};
  if (disturbance.amplitude.size() > 0) dist["amplitude"] = vector_json(disturbance.amplitude);
  j["disturbance"] = dist;
  j["probe"] = {{"enabled", probe_enabled}, {"amplitude", probe.amplitude}, {"decay", probe.decay}};
  j["learning"] = {{"critic_rate", learner.rates.critic},
                   {"actor_rate", learner.rates.actor},
                   {"disturber_rate", learner.rates.disturber},
                   {"adversary_control_rate", learner.rates.adversary_control},
                   {"adversary_disturbance_rate", learner.rates.adversary_disturbance},
                   {"basis", basis_name(learner.basis)},
                   {"critic_init_value_scale", learner.critic_value_scale},
                   {"actor_from_critic", learner.actor_from_critic},
                   {"training_disturbance", training_disturbance_name(training)}};
  json pij = {{"evaluation", pi.evaluation == Evaluation::model_based ? "model_based" : "data_driven"},
              {"eps_inner", pi.eps_inner},
              {"eps_outer", pi.eps_outer},
              {"max_inner", pi.max_inner},
              {"max_outer", pi.max_outer},
              {"probe_states", pi.probe_states},
              {"transitions", pi.transitions},
              {"excitation", pi.excitation}};
  if (std::isfinite(pi.residual_threshold)) pij["residual_threshold"] = pi.residual_threshold;
  if (!pi_initial_gains.empty()) {
    json g = json::array();
    for (const Mat& m : pi_initial_gains) g.push_back(matrix_json(m));
    pij["initial_gains"] = g;
  }
  j["pi"] = pij;
  if (!policy_control_gains.empty() || !policy_disturbance_gains.empty()) {
    json pol = json::object();
    json c = json::array(), d = json::array();
    for (const Mat& m : policy_control_gains) c.push_back(matrix_json(m));
    for (const Mat& m : policy_disturbance_gains) d.push_back(matrix_json(m));
    if (!c.empty()) pol["control_gains"] = c;
    if (!d.empty()) pol["disturbance_gains"] = d;
    j["policies"] = pol;
  }
  j["saddle"] = {{"scale", saddle.scale}, {"samples", saddle.samples}};
  if (!output.empty()) j["output"] = output;
  return j;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  ObjectReader root(j, "");
  cfg.n_agents = integer(root.require("n_agents"), "n_agents");
  if (cfg.n_agents < 1) invalid("n_agents", "must be >= 1");
  parse_topology(root, cfg);
  parse_dynamics(root, cfg);
  parse_weights(root, cfg);
  parse_initial(root, cfg);
  if (const json* a = root.find("algorithm")) cfg.algorithm = parse_algorithm(text(*a, "algorithm"));
  if (const json* h = root.find("horizon")) cfg.horizon = integer(*h, "horizon");
  std::uint64_t seed = 1;
  if (const json* s = root.find("seed")) {
    if (!s->is_number_integer() || (!s->is_number_unsigned() && s->get<long long>() < 0))
      invalid("seed", "expected a non-negative integer");
    seed = s->get<std::uint64_t>();
  }
  parse_disturbance(root, cfg);
  parse_probe(root, cfg);
  parse_learning(root, cfg);
  parse_pi(root, cfg);
  parse_policies(root, cfg);
  parse_saddle(root, cfg);
  if (const json* o = root.find("output")) cfg.output = text(*o, "output");
  root.finish();
  cfg.set_seed(seed);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, body.size());
    const long line = 1 + std::count(body.begin(), body.begin() + static_cast<long>(upto), '\n');
    throw Error(ErrorKind::ParseError, path.string() + " line " + std::to_string(line) + ": " + e.what());
  }
  return parse_config(j);
}

namespace {

json sec5_json(const char* mode) {
  return {
      {"n_agents", 4},
      {"topology",
       {{"edges", {{2, 1, 0.8}, {4, 1, 0.7}, {3, 2, 0.6}, {1, 2, 0.6}, {1, 3, 0.8}, {1, 4, 0.4}}}, {"pins", {4}}}},
      {"dynamics",
       {{"A", {{0.995, 0.09983}, {-0.09983, 0.995}}},
        {"B", {{0.2047, 0.08984}, {0.2147, 0.2895}, {0.2097, 0.1897}, {0.2, 0.1}}},
        {"E", {{0.21, 0.0984}, {0.32, 0.084}, {0.14, 0.072}, {0.16, 0.024}}}}},
      {"weights",
       {{"mode", mode}, {"Q", {{1, 0}, {0, 1}}}, {"R", 1}, {"T", 1}, {"R_neighbor", 1}, {"T_neighbor", 1},
        {"attenuation", 1.0}}},
      {"initial_states", {{"leader", {0.4, 0.5}}, {"followers", {{0.8, 1.1}, {0.9, 0.3}, {1.2, 0.8}, {0.9, 0.5}}}}},
      {"horizon", 500},
      {"seed", 1},
      {"disturbance", {{"kind", "decaying_sinusoid"}, {"amplitude", {0.1}}, {"decay", 0.05}, {"frequency", 0.5}}},
      {"probe", {{"enabled", true}, {"amplitude", 0.1}, {"decay", 0.01}}},
      {"learning",
       {{"critic_rate", 0.1}, {"actor_rate", 0.1}, {"disturber_rate", 0.1}, {"adversary_control_rate", 0.05},
        {"adversary_disturbance_rate", 0.05}, {"basis", "identity"}, {"critic_init_value_scale", 2.0},
        {"actor_from_critic", true}, {"training_disturbance", "learned"}}},
      {"saddle", {{"scale", 0.1}, {"samples", 200}}},
  };
}

}  // namespace

std::vector<std::string> preset_names() { return {"paper-sec5-coop", "paper-sec5-noncoop"}; }

ExperimentConfig preset(const std::string& name) {
  if (name == "paper-sec5-coop") {
    ExperimentConfig c = parse_config(sec5_json("cooperative"));
    c.algorithm = Algorithm::learn_coop;
    return c;
  }
  if (name == "paper-sec5-noncoop") {
    ExperimentConfig c = parse_config(sec5_json("noncooperative"));
    c.algorithm = Algorithm::learn_noncoop;
    return c;
  }
  throw Error(ErrorKind::ValidationError, "unknown preset '" + name + "'");
}

Metrics metrics(const TrajectoryLog& log, double threshold) {
  Metrics m;
  const int n_agents = log.n_agents();
  const int steps = static_cast<int>(log.states.size());
  m.agents.resize(n_agents);
  int last_bad = -1;
  const int window = steps - 1 - (steps - 1) / 10;
  for (int k = 0; k < steps; ++k) {
    bool bad = false;
    for (int i = 0; i < n_agents; ++i) {
      const double err = (log.states[k][i] - log.leader[k]).norm();
      m.agents[i].max_error = std::max(m.agents[i].max_error, err);
      if (k >= window) m.final_window_max_error = std::max(m.final_window_max_error, err);
      if (!(log.errors[k][i].norm() < threshold)) bad = true;
    }
    if (bad) last_bad = k;
  }
  for (int i = 0; i < n_agents; ++i) {
    m.agents[i].final_error = (log.states.back()[i] - log.leader.back()).norm();
    m.agents[i].final_delta = log.errors.back()[i].norm();
    const CostToGo c = cost_to_go(log, i);
    m.agents[i].cost_to_go = c.total;
    m.agents[i].cost_tail = c.tail;
  }
  if (last_bad < steps - 1) m.sync_time = last_bad + 1;
  return m;
}

json metrics_json(const Metrics& m) {
  json agents = json::array();
  for (std::size_t i = 0; i < m.agents.size(); ++i) {
    const AgentMetrics& a = m.agents[i];
    agents.push_back({{"agent", i + 1},
                      {"final_error", a.final_error},
                      {"max_error", a.max_error},
                      {"final_delta", a.final_delta},
                      {"cost_to_go", a.cost_to_go},
                      {"cost_tail", a.cost_tail}});
  }
  json j = {{"agents", agents}, {"final_window_max_error", m.final_window_max_error}};
  if (m.sync_time)
    j["sync_time"] = *m.sync_time;
  else
    j["sync_time"] = nullptr;
  j["synchronized"] = m.sync_time.has_value();
  return j;
}

double final_window_relative_change(const std::vector<WeightRecord>& history, int agent, const std::string& net) {
  std::vector<double> series;
  for (const WeightRecord& r : history)
    if (r.agent == agent && r.net == net) series.push_back(r.frobenius_norm);
  if (series.empty()) throw Error(ErrorKind::InvalidArgument, "no history for net " + net);
  const std::size_t start = series.size() - std::max<std::size_t>(1, series.size() / 10);
  const auto [lo, hi] = std::minmax_element(series.begin() + static_cast<long>(start), series.end());
  return *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
}

namespace {

std::vector<FeedbackPolicy> configured_policies(const ExperimentConfig& cfg, const FleetModel& model) {
  std::vector<FeedbackPolicy> out;
  for (int i = 0; i < cfg.n_agents; ++i) {
    Mat k = cfg.policy_control_gains.empty() ? Mat::Zero(model.control_dim(), model.state_dim())
                                             : cfg.policy_control_gains[i];
    Mat l = cfg.policy_disturbance_gains.empty() ? Mat::Zero(model.disturbance_dim(), model.state_dim())
                                                 : cfg.policy_disturbance_gains[i];
    out.push_back(FeedbackPolicy::linear(k, l));
  }
  return out;
}

void prepare(const std::filesystem::path& outdir, const ExperimentConfig& cfg, Algorithm algorithm) {
  std::filesystem::create_directories(outdir);
  ExperimentConfig echo = cfg;
  echo.algorithm = algorithm;
  write_json(outdir / "config.json", echo.to_json());
}

json attenuation_json(const std::vector<AttenuationMargin>& margins) {
  json arr = json::array();
  for (const AttenuationMargin& m : margins)
    arr.push_back({{"agent", m.agent + 1}, {"condition", m.condition}, {"margin", m.margin}, {"pass", m.pass}});
  return arr;
}

std::vector<AttenuationMargin> attenuation_for(const FleetModel& model, const GraphTopology& topo,
                                               const GameWeights& weights) {
  return weights.mode == GameMode::cooperative ? check_attenuation_coop(model, topo, weights)
                                               : check_attenuation_noncoop(model, topo, weights);
}

void write_figure_data(const std::filesystem::path& outdir, const TrajectoryLog& log) {
  std::ofstream states(outdir / "figure_states.csv");
  std::ofstream errors(outdir / "figure_sync_errors.csv");
  const Eigen::Index n = log.leader.front().size();
  states << "step,agent";
  for (Eigen::Index c = 1; c <= n; ++c) states << ",x" << c;
  states << '\n';
  errors << "step,agent,tracking_error_norm,neighborhood_error_norm\n";
  for (std::size_t k = 0; k < log.states.size(); ++k) {
    states << k << ",0";
    for (Eigen::Index c = 0; c < n; ++c) states << ',' << format_double(log.leader[k](c));
    states << '\n';
    for (std::size_t i = 0; i < log.states[k].size(); ++i) {
      states << k << ',' << (i + 1);
      for (Eigen::Index c = 0; c < n; ++c) states << ',' << format_double(log.states[k][i](c));
      states << '\n';
      errors << k << ',' << (i + 1) << ',' << format_double((log.states[k][i] - log.leader[k]).norm()) << ','
             << format_double(log.errors[k][i].norm()) << '\n';
    }
  }
}

}  // namespace

RunOutcome run_simulate(const ExperimentConfig& cfg, const std::filesystem::path& outdir) {
  prepare(outdir, cfg, Algorithm::simulate);
  const FleetModel model = cfg.model();
  const GraphTopology topo = cfg.topology();
  const GameWeights weights = cfg.weights();
  SimulationSetup setup;
  setup.policies = configured_policies(cfg, model);
  setup.external = cfg.external_disturbances();
  setup.initial_states = cfg.initial_states;
  setup.initial_leader = cfg.initial_leader;
  setup.horizon = cfg.horizon;
  setup.probe = cfg.probe_spec();
  const TrajectoryLog log = simulate(model, topo, weights, setup);
  write_trajectory_csv(outdir / "trajectory.csv", log);
  json summary = metrics_json(metrics(log));
  write_json(outdir / "metrics.json", summary);
  return {summary};
}

RunOutcome run_policy_iteration(const ExperimentConfig& cfg, GameMode mode, const std::filesystem::path& outdir) {
  prepare(outdir, cfg, mode == GameMode::cooperative ? Algorithm::pi_coop : Algorithm::pi_noncoop);
  const FleetModel model = cfg.model();
  const GraphTopology topo = cfg.topology();
  const GameWeights weights = cfg.weights(mode);
  const std::vector<Mat> init = cfg.pi_initial_gains.empty()
                                    ? local_lqr_gains(model, topo, weights)
                                    : cfg.pi_initial_gains;
  PiOptions opts = cfg.pi;
  opts.keep_kernels = true;
  const PiResult res = mode == GameMode::cooperative ? run_pi_coop(model, topo, weights, init, opts)
                                                     : run_pi_noncoop(model, topo, weights, init, opts);
  write_json(outdir / "pi_log.json", pi_log_json(res.log));
  write_kernel_csv(outdir / "kernels.csv", res.kernel_snapshots);
  json gains = json::array();
  for (int i = 0; i < cfg.n_agents; ++i)
    gains.push_back({{"agent", i + 1},
                     {"control_gain", matrix_json(res.control_gains[i])},
                     {"disturbance_gain", matrix_json(res.disturbance_gains[i])},
                     {"action_gain", matrix_json(res.action_gains[i])}});
  write_json(outdir / "gains.json", gains);

  // Synchronization under the converged control gains without disturbance.
  SimulationSetup setup;
  for (int i = 0; i < cfg.n_agents; ++i)
    setup.policies.push_back(FeedbackPolicy::linear(res.control_gains[i],
                                                    Mat::Zero(model.disturbance_dim(), model.state_dim())));
  setup.initial_states = cfg.initial_states;
  setup.initial_leader = cfg.initial_leader;
  setup.horizon = cfg.horizon;
  const TrajectoryLog log = simulate(model, topo, weights, setup);
  write_trajectory_csv(outdir / "trajectory.csv", log);
  const Metrics m = metrics(log);
  json summary = {{"outer_iterations", res.outer_iterations},
                  {"evaluations", res.log.size()},
                  {"closed_loop_radius", closed_loop_radius(model, topo, res.control_gains)},
                  {"monotonicity",
                   {{"inner_violations", res.monotonicity.inner_violations},
                    {"outer_violations", res.monotonicity.outer_violations},
                    {"worst_inner_decrease", res.monotonicity.worst_inner_decrease},
                    {"worst_outer_increase", res.monotonicity.worst_outer_increase}}},
                  {"metrics", metrics_json(m)}};
  write_json(outdir / "summary.json", summary);
  return {summary};
}

LearnedFleet learn(const ExperimentConfig& cfg, GameMode mode) {
  const FleetModel model = cfg.model();
  const GraphTopology topo = cfg.topology();
  const GameWeights weights = cfg.weights(mode);
  const auto init = initial_learner_states(model, topo, weights, cfg.learner);
  OnlineOptions opts;
  opts.horizon = cfg.horizon;
  opts.training = cfg.training;
  opts.external = cfg.external_disturbances();
  opts.probe = cfg.probe_spec();
  opts.initial_states = cfg.initial_states;
  opts.initial_leader = cfg.initial_leader;
  LearnedFleet out{run_online(model, topo, weights, init, opts), {}};
  for (const LearnerState& s : out.run.final_states) out.policies.push_back(s.policy());
  return out;
}

SimulationSetup learned_setup(const ExperimentConfig& cfg, const std::vector<FeedbackPolicy>& policies) {
  SimulationSetup setup;
  setup.policies = policies;
  setup.initial_states = cfg.initial_states;
  setup.initial_leader = cfg.initial_leader;
  setup.horizon = cfg.horizon;
  setup.actuate_disturbance_policy = true;
  return setup;
}

std::vector<L2GainResult> l2_at_policies(const ExperimentConfig& cfg, const GameWeights& weights,
                                         const std::vector<FeedbackPolicy>& policies) {
  const FleetModel model = cfg.model();
  const GraphTopology topo = cfg.topology();
  SimulationSetup setup = learned_setup(cfg, policies);
  const TrajectoryLog base = simulate(model, topo, weights, setup);
  std::vector<double> v0;
  for (int i = 0; i < cfg.n_agents; ++i) v0.push_back(cost_to_go(base, i).total);
  std::vector<L2GainResult> out;
  for (int i = 0; i < cfg.n_agents; ++i) {
    SimulationSetup disturbed = setup;
    disturbed.external.assign(cfg.n_agents, DisturbanceModel{});
    disturbed.external[i] = cfg.disturbance;
    const TrajectoryLog log = simulate(model, topo, weights, disturbed);
    out.push_back(l2_gain_check(log, topo, weights, v0).at(i));
  }
  return out;
}

RunOutcome run_learning(const ExperimentConfig& cfg, GameMode mode, const std::filesystem::path& outdir) {
  prepare(outdir, cfg, mode == GameMode::cooperative ? Algorithm::learn_coop : Algorithm::learn_noncoop);
  const LearnedFleet lf = learn(cfg, mode);
  write_trajectory_csv(outdir / "trajectory.csv", lf.run.log);
  write_weight_history_csv(outdir / "weight_history.csv", lf.run.history);
  json finals = json::array();
  for (const LearnerState& s : lf.run.final_states) {
    json a = {{"agent", s.agent + 1},
              {"critic", matrix_json(s.critic)},
              {"actor", matrix_json(s.actor)},
              {"disturber", matrix_json(s.disturber)}};
    json adv = json::array();
    for (std::size_t k = 0; k < s.adversary_control.size(); ++k)
      adv.push_back({{"control", matrix_json(s.adversary_control[k])},
                     {"disturbance", matrix_json(s.adversary_disturbance[k])}});
    if (!adv.empty()) a["adversaries"] = adv;
    finals.push_back(std::move(a));
  }
  write_json(outdir / "final_weights.json", finals);
  json summary = {{"metrics", metrics_json(metrics(lf.run.log))}, {"skipped_updates", lf.run.skipped_updates}};
  write_json(outdir / "summary.json", summary);
  return {summary};
}

RunOutcome run_verify(const ExperimentConfig& cfg, const std::filesystem::path& outdir) {
  prepare(outdir, cfg, Algorithm::verify);
  const FleetModel model = cfg.model();
  const GraphTopology topo = cfg.topology();
  const GameWeights weights = cfg.weights();
  json report = json::array();
  for (const AttenuationMargin& m : attenuation_for(model, topo, weights))
    report.push_back({{"agent", m.agent + 1}, {"condition", "attenuation"}, {"margin", m.margin}, {"pass", m.pass}});
  const LearnedFleet lf = learn(cfg, weights.mode);
  try {
    const auto l2 = l2_at_policies(cfg, weights, lf.policies);
    for (std::size_t i = 0; i < l2.size(); ++i)
      report.push_back({{"agent", i + 1}, {"condition", "l2_gain"}, {"margin", l2[i].slack}, {"pass", l2[i].pass}});
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TailTooLarge) throw;
    report.push_back({{"agent", nullptr}, {"condition", "l2_gain"}, {"margin", nullptr}, {"pass", false},
                      {"error", e.what()}});
  }
  if (weights.mode == GameMode::cooperative) {
    const auto gaps = saddle_gap(model, topo, weights, learned_setup(cfg, lf.policies), cfg.saddle.scale,
                                 cfg.saddle.samples, cfg.seed);
    for (std::size_t i = 0; i < gaps.size(); ++i) {
      report.push_back({{"agent", i + 1}, {"condition", "saddle_control"}, {"margin", gaps[i].gap_u},
                        {"pass", gaps[i].gap_u >= -1e-3}});
      report.push_back({{"agent", i + 1}, {"condition", "saddle_disturbance"}, {"margin", gaps[i].gap_w},
                        {"pass", gaps[i].gap_w <= 1e-3}});
    }
  }
  write_json(outdir / "verify.json", report);
  return {report};
}

RunOutcome reproduce(const ExperimentConfig& cfg, GameMode mode, const std::filesystem::path& outdir) {
  prepare(outdir, cfg, mode == GameMode::cooperative ? Algorithm::learn_coop : Algorithm::learn_noncoop);
  const FleetModel model = cfg.model();
  const GraphTopology topo = cfg.topology();
  const GameWeights weights = cfg.weights(mode);
  const LearnedFleet lf = learn(cfg, mode);
  const TrajectoryLog& log = lf.run.log;
  write_trajectory_csv(outdir / "trajectory.csv", log);
  write_weight_history_csv(outdir / "weight_history.csv", lf.run.history);
  write_figure_data(outdir, log);

  const Metrics m = metrics(log);
  json final_errors = json::array();
  for (const AgentMetrics& a : m.agents) final_errors.push_back(a.final_error);

  double settle = 0.0;
  double adversary_max = 0.0;
  for (const WeightRecord& r : lf.run.history)
    if (r.net.rfind("adversary", 0) == 0) adversary_max = std::max(adversary_max, r.frobenius_norm);
  for (int i = 0; i < cfg.n_agents; ++i)
    for (const char* net : {"critic", "actor", "disturber"})
      settle = std::max(settle, final_window_relative_change(lf.run.history, i, net));
  for (int i = 0; i < cfg.n_agents; ++i)
    for (int a = 0; a < static_cast<int>(topo.neighbors(i).size()) && mode == GameMode::noncooperative; ++a)
      for (const std::string& net : {std::string("adversary_control_") + std::to_string(a),
                                     std::string("adversary_disturbance_") + std::to_string(a)})
        settle = std::max(settle, final_window_relative_change(lf.run.history, i, net));

  json summary;
  summary["case"] = mode == GameMode::cooperative ? "coop" : "noncoop";
  summary["final_sync_error_per_agent"] = final_errors;
  summary["final_window_max_error"] = m.final_window_max_error;
  summary["sync_time"] = m.sync_time ? json(*m.sync_time) : json(nullptr);
  summary["weight_final_window_relative_change"] = settle;
  summary["adversary_max_norm"] = adversary_max;
  summary["skipped_updates"] = lf.run.skipped_updates;
  summary["attenuation_margins"] = attenuation_json(attenuation_for(model, topo, weights));

  if (mode == GameMode::cooperative) {
    const auto gaps = saddle_gap(model, topo, weights, learned_setup(cfg, lf.policies), cfg.saddle.scale,
                                 cfg.saddle.samples, cfg.seed);
    json g = json::array();
    for (std::size_t i = 0; i < gaps.size(); ++i)
      g.push_back({{"agent", i + 1}, {"gap_u", gaps[i].gap_u}, {"gap_w", gaps[i].gap_w}});
    summary["saddle_gaps"] = g;
  } else {
    summary["saddle_gaps"] = nullptr;
  }
  try {
    const auto l2 = l2_at_policies(cfg, weights, lf.policies);
    json s = json::array();
    for (std::size_t i = 0; i < l2.size(); ++i)
      s.push_back({{"agent", i + 1}, {"slack", l2[i].slack}, {"tail_fraction", l2[i].tail_fraction}});
    summary["l2_slack"] = s;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TailTooLarge) throw;
    summary["l2_slack"] = {{"error", e.what()}};
  }
  summary["converged"] = m.final_window_max_error < 0.05 && settle < 0.01;
  summary["metrics"] = metrics_json(m);
  write_json(outdir / "summary.json", summary);
  return {summary};
}

RunOutcome reproduce_reference(ReproCase which, const std::filesystem::path& outdir) {
  if (which == ReproCase::coop) return reproduce(preset("paper-sec5-coop"), GameMode::cooperative, outdir);
  return reproduce(preset("paper-sec5-noncoop"), GameMode::noncooperative, outdir);
}

}  // namespace qgame

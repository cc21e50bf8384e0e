#include "qgame/weights.hpp"

#include "qgame/errors.hpp"

namespace qgame {

const char* mode_name(GameMode mode) {
  return mode == GameMode::cooperative ? "cooperative" : "noncooperative";
}

GameMode parse_mode(const std::string& name) {
  if (name == "cooperative") return GameMode::cooperative;
  if (name == "noncooperative") return GameMode::noncooperative;
  throw Error(ErrorKind::ValidationError, "unknown game mode '" + name + "'");
}

GameWeights GameWeights::uniform(const FleetModel& model, const GraphTopology& topology, GameMode mode,
                                 const Mat& q, const Mat& r, const Mat& t, const Mat& r_neighbor,
                                 const Mat& t_neighbor, double attenuation) {
  GameWeights w;
  w.mode = mode;
  w.attenuation = attenuation;
  const int n_agents = model.n_agents();
  w.state_weight.assign(n_agents, q);
  w.control_weight.assign(n_agents, r);
  w.disturbance_weight.assign(n_agents, t);
  w.neighbor_control_weight.resize(n_agents);
  w.neighbor_disturbance_weight.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    w.neighbor_control_weight[i].assign(topology.neighbors(i).size(), r_neighbor);
    w.neighbor_disturbance_weight[i].assign(topology.neighbors(i).size(), t_neighbor);
  }
  w.validate(model, topology);
  return w;
}

namespace {

void require_shape(const Mat& m, int dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim)
    throw Error(ErrorKind::ValidationError, std::string(what) + " has wrong shape");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorKind::ValidationError, std::string(what) + " is not symmetric");
}

void require_pd(const Mat& m, int dim, const char* what) {
  require_shape(m, dim, what);
  if (min_eigenvalue(m) <= 0.0) throw Error(ErrorKind::ValidationError, std::string(what) + " is not positive definite");
}

void require_psd(const Mat& m, int dim, const char* what) {
  require_shape(m, dim, what);
  if (min_eigenvalue(m) < -1e-12)
    throw Error(ErrorKind::ValidationError, std::string(what) + " is not positive semidefinite");
}

}  // namespace

void GameWeights::validate(const FleetModel& model, const GraphTopology& topology) const {
  if (!(attenuation > 0.0)) throw Error(ErrorKind::ValidationError, "attenuation must be positive");
  const int n_agents = model.n_agents();
  if (topology.n_agents() != n_agents) throw Error(ErrorKind::ValidationError, "topology and model sizes differ");
  if (static_cast<int>(state_weight.size()) != n_agents || static_cast<int>(control_weight.size()) != n_agents ||
      static_cast<int>(disturbance_weight.size()) != n_agents ||
      static_cast<int>(neighbor_control_weight.size()) != n_agents ||
      static_cast<int>(neighbor_disturbance_weight.size()) != n_agents)
    throw Error(ErrorKind::ValidationError, "weight lists must have one entry per agent");
  const int n = model.state_dim(), p = model.control_dim(), q = model.disturbance_dim();
  for (int i = 0; i < n_agents; ++i) {
    require_pd(state_weight[i], n, "Q_ii");
    require_pd(control_weight[i], p, "R_ii");
    require_pd(disturbance_weight[i], q, "T_ii");
    const std::size_t nn = topology.neighbors(i).size();
    if (neighbor_control_weight[i].size() != nn || neighbor_disturbance_weight[i].size() != nn)
      throw Error(ErrorKind::ValidationError, "neighbor weights must match the neighborhood");
    for (std::size_t a = 0; a < nn; ++a) {
      if (mode == GameMode::noncooperative) {
        require_pd(neighbor_control_weight[i][a], p, "R_ij");
        require_pd(neighbor_disturbance_weight[i][a], q, "T_ij");
      } else {
        require_psd(neighbor_control_weight[i][a], p, "R_ij");
        require_psd(neighbor_disturbance_weight[i][a], q, "T_ij");
      }
    }
  }
}

Mat cost_matrix(const GameWeights& weights, const BlockMap& blocks, int i) {
  const double b2 = weights.attenuation * weights.attenuation;
  const int n = blocks.n, p = blocks.p, q = blocks.q;
  Mat lam = Mat::Zero(blocks.size(), blocks.size());
  lam.block(blocks.delta(), blocks.delta(), n, n) = weights.state_weight[i];
  lam.block(blocks.control(), blocks.control(), p, p) = weights.control_weight[i];
  lam.block(blocks.disturbance(), blocks.disturbance(), q, q) = -b2 * weights.disturbance_weight[i];
  const double neighbor_sign = weights.mode == GameMode::cooperative ? 1.0 : -b2;
  for (int a = 0; a < blocks.n_neighbors; ++a) {
    const int uc = blocks.neighbor_control(a), wc = blocks.neighbor_disturbance(a);
    lam.block(uc, uc, p, p) = neighbor_sign * weights.neighbor_control_weight[i][a];
    lam.block(wc, wc, q, q) = -b2 * weights.neighbor_disturbance_weight[i][a];
  }
  return lam;
}

double stage_cost(const GameWeights& weights, int i, const Vec& delta, const Vec& u, const std::vector<Vec>& u_neighbors,
                  const Vec& w, const std::vector<Vec>& w_neighbors) {
  const double b2 = weights.attenuation * weights.attenuation;
  const double neighbor_sign = weights.mode == GameMode::cooperative ? 1.0 : -b2;
  double c = delta.dot(weights.state_weight[i] * delta) + u.dot(weights.control_weight[i] * u) -
             b2 * w.dot(weights.disturbance_weight[i] * w);
  for (std::size_t a = 0; a < u_neighbors.size(); ++a) {
    c += neighbor_sign * u_neighbors[a].dot(weights.neighbor_control_weight[i][a] * u_neighbors[a]);
    c -= b2 * w_neighbors[a].dot(weights.neighbor_disturbance_weight[i][a] * w_neighbors[a]);
  }
  return c;
}

}  // namespace qgame

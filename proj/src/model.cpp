#include "qgame/model.hpp"

#include "qgame/errors.hpp"

#include <string>

namespace qgame {

FleetModel::FleetModel(Mat drift, std::vector<Mat> control_inputs, std::vector<Mat> disturbance_inputs)
    : drift_(std::move(drift)),
      control_inputs_(std::move(control_inputs)),
      disturbance_inputs_(std::move(disturbance_inputs)) {
  if (drift_.rows() == 0 || drift_.rows() != drift_.cols())
    throw Error(ErrorKind::DimensionMismatch, "drift matrix must be square and non-empty");
  if (control_inputs_.empty()) throw Error(ErrorKind::DimensionMismatch, "at least one follower is required");
  if (control_inputs_.size() != disturbance_inputs_.size())
    throw Error(ErrorKind::DimensionMismatch, "control and disturbance input counts differ");
  const Eigen::Index n = drift_.rows();
  const Eigen::Index p = control_inputs_.front().cols();
  const Eigen::Index q = disturbance_inputs_.front().cols();
  for (std::size_t i = 0; i < control_inputs_.size(); ++i) {
    const Mat& b = control_inputs_[i];
    const Mat& e = disturbance_inputs_[i];
    if (b.rows() != n || b.cols() != p || p == 0)
      throw Error(ErrorKind::DimensionMismatch, "control input of agent " + std::to_string(i) + " has wrong shape");
    if (e.rows() != n || e.cols() != q || q == 0)
      throw Error(ErrorKind::DimensionMismatch, "disturbance input of agent " + std::to_string(i) + " has wrong shape");
    if (!is_reachable(drift_, b))
      throw Error(ErrorKind::NotReachable, "(A, B) not reachable for agent " + std::to_string(i));
  }
}

const Mat& FleetModel::control_input(int i) const {
  check_agent(i);
  return control_inputs_[i];
}

const Mat& FleetModel::disturbance_input(int i) const {
  check_agent(i);
  return disturbance_inputs_[i];
}

void FleetModel::check_agent(int i) const {
  if (i < 0 || i >= n_agents()) throw Error(ErrorKind::UnknownAgent, "agent index " + std::to_string(i));
}

bool is_reachable(const Mat& a, const Mat& b) {
  const Eigen::Index n = a.rows();
  Mat ctrb(n, n * b.cols());
  Mat block = b;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * b.cols(), b.cols()) = block;
    block = a * block;
  }
  Eigen::FullPivLU<Mat> lu(ctrb);
  lu.setThreshold(1e-10);
  return lu.rank() == n;
}

BlockMap BlockMap::for_agent(const FleetModel& model, const GraphTopology& topology, int i) {
  return BlockMap(model.state_dim(), model.control_dim(), model.disturbance_dim(),
                  static_cast<int>(topology.neighbors(i).size()));
}

Vec BlockMap::assemble(const Vec& delta, const Vec& u, const std::vector<Vec>& u_neighbors, const Vec& w,
                       const std::vector<Vec>& w_neighbors) const {
  if (delta.size() != n || u.size() != p || w.size() != q ||
      static_cast<int>(u_neighbors.size()) != n_neighbors || static_cast<int>(w_neighbors.size()) != n_neighbors)
    throw Error(ErrorKind::DimensionMismatch, "stacked vector components have wrong sizes");
  Vec z(size());
  z.segment(this->delta(), n) = delta;
  z.segment(control(), p) = u;
  z.segment(disturbance(), q) = w;
  for (int a = 0; a < n_neighbors; ++a) {
    if (u_neighbors[a].size() != p || w_neighbors[a].size() != q)
      throw Error(ErrorKind::DimensionMismatch, "neighbor input has wrong size");
    z.segment(neighbor_control(a), p) = u_neighbors[a];
    z.segment(neighbor_disturbance(a), q) = w_neighbors[a];
  }
  return z;
}

std::vector<Vec> ordered_neighbor_inputs(const GraphTopology& topology, int i, const NeighborInputs& inputs, int dim) {
  const auto& nb = topology.neighbors(i);
  std::vector<Vec> out;
  out.reserve(nb.size());
  for (int j : nb) {
    auto it = inputs.find(j);
    if (it == inputs.end())
      throw Error(ErrorKind::MissingNeighborInput, "no input supplied for neighbor " + std::to_string(j));
    if (it->second.size() != dim) throw Error(ErrorKind::DimensionMismatch, "neighbor input has wrong size");
    out.push_back(it->second);
  }
  if (inputs.size() != nb.size())
    throw Error(ErrorKind::MissingNeighborInput, "inputs supplied for agents outside the neighborhood");
  return out;
}

}  // namespace qgame

#pragma once

#include "qgame/experiment.hpp"

#include <random>

namespace fixtures {

using qgame::Mat;
using qgame::Vec;

inline Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

inline Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Mat scalar(double v) { return Mat::Constant(1, 1, v); }

// Four-follower reference fleet, 0-based.
inline qgame::ExperimentConfig fleet() { return qgame::preset("paper-sec5-coop"); }

inline std::vector<Vec> fleet_states() {
  return {vec({0.8, 1.1}), vec({0.9, 0.3}), vec({1.2, 0.8}), vec({0.9, 0.5})};
}

// Isolated pinned scalar agent: A = 0.8, B = 1, E = 0.4, Q = R = T = 1.
struct ScalarGame {
  qgame::FleetModel model{scalar(0.8), {scalar(1.0)}, {scalar(0.4)}};
  qgame::GraphTopology topo = qgame::GraphTopology::build({}, {0}, 1);
  qgame::GameWeights weights;
  explicit ScalarGame(double beta = 2.0, qgame::GameMode mode = qgame::GameMode::cooperative)
      : weights(qgame::GameWeights::uniform(model, topo, mode, scalar(1), scalar(1), scalar(1), scalar(1), scalar(1),
                                            beta)) {}
};

inline Mat random_mat(std::mt19937_64& rng, int r, int c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline Vec random_vec(std::mt19937_64& rng, int r) { return random_mat(rng, r, 1); }

}  // namespace fixtures

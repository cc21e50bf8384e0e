#include "qgame/pi_solver.hpp"

#include "qgame/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace qgame {

double QKernel::condition_number() const {
  Eigen::JacobiSVD<Mat> svd(S);
  const Vec& sv = svd.singularValues();
  return sv(0) / sv(sv.size() - 1);
}

QKernel qkernel_from_value(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights, int i,
                           const ValueKernel& value) {
  const BlockMap blocks = BlockMap::for_agent(model, topology, i);
  if (value.P.rows() != blocks.n || value.P.cols() != blocks.n)
    throw Error(ErrorKind::DimensionMismatch, "value kernel has wrong size");
  const Mat m = stacked_input_matrix(model, topology, i);
  QKernel k;
  k.agent = i;
  k.blocks = blocks;
  k.mode = weights.mode;
  k.S = symmetrize(cost_matrix(weights, blocks, i) + m.transpose() * value.P * m);
  return k;
}

namespace {

// Row of the regression: z'Sz = theta . quad_features(z) with theta = half_vec(S).
Vec quad_features(const Vec& z) {
  const int m = static_cast<int>(z.size());
  Vec f(half_vec_size(m));
  int k = 0;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) f(k++) = (a == b ? 1.0 : 2.0) * z(a) * z(b);
  return f;
}

}  // namespace

QKernel policy_eval_lsq(const EvaluationDataset& data, GameMode mode, double residual_threshold) {
  const int m = data.blocks.size();
  const int unknowns = half_vec_size(m);
  if (static_cast<int>(data.r.size()) != data.count() || static_cast<int>(data.z_next.size()) != data.count())
    throw Error(ErrorKind::DimensionMismatch, "dataset columns have different lengths");
  if (data.count() < unknowns)
    throw Error(ErrorKind::RankDeficient, "dataset has " + std::to_string(data.count()) + " tuples, " +
                                              std::to_string(unknowns) + " required");
  Mat phi(data.count(), unknowns);
  Vec r(data.count());
  for (int k = 0; k < data.count(); ++k) {
    if (data.z[k].size() != m || data.z_next[k].size() != m)
      throw Error(ErrorKind::DimensionMismatch, "stacked vector has wrong size");
    phi.row(k) = (quad_features(data.z[k]) - quad_features(data.z_next[k])).transpose();
    r(k) = data.r[k];
  }
  // Column scaling keeps the rank decision independent of signal magnitudes.
  Vec scale = phi.colwise().norm().transpose();
  for (int c = 0; c < unknowns; ++c)
    if (scale(c) == 0.0) throw Error(ErrorKind::RankDeficient, "regressor column identically zero");
  const Mat scaled = phi * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Mat> qr(scaled);
  qr.setThreshold(1e-10);
  if (qr.rank() < unknowns)
    throw Error(ErrorKind::RankDeficient, "regression rank " + std::to_string(qr.rank()) + " below " +
                                              std::to_string(unknowns) + " (excitation insufficient)");
  const Vec theta = qr.solve(r).cwiseQuotient(scale);
  const Vec resid = phi * theta - r;
  QKernel k;
  k.agent = data.agent;
  k.blocks = data.blocks;
  k.mode = mode;
  k.S = from_half_vec(theta, m);
  k.residual_rms = std::sqrt(resid.squaredNorm() / data.count());
  const double r_rms = std::sqrt(r.squaredNorm() / data.count());
  if (k.residual_rms > residual_threshold * std::max(r_rms, 1e-300))
    throw Error(ErrorKind::ResidualTooLarge, "relative residual " + std::to_string(k.residual_rms / r_rms));
  return k;
}

namespace {

Vec stack(const std::vector<Vec>& parts, int dim) {
  Vec out(static_cast<Eigen::Index>(parts.size()) * dim);
  for (std::size_t a = 0; a < parts.size(); ++a) {
    if (parts[a].size() != dim) throw Error(ErrorKind::DimensionMismatch, "neighbor input has wrong size");
    out.segment(static_cast<Eigen::Index>(a) * dim, dim) = parts[a];
  }
  return out;
}

Mat inverse_or_throw(const Mat& m, ErrorKind kind, const char* what) {
  Eigen::FullPivLU<Mat> lu(m);
  if (!lu.isInvertible()) throw Error(kind, std::string(what) + " is singular");
  return lu.inverse();
}

}  // namespace

Vec improve_disturbance_coop(const QKernel& kernel, const Vec& delta, const Vec& u, const std::vector<Vec>& u_neighbors,
                             const std::vector<Vec>& w_neighbors) {
  const BlockMap& b = kernel.blocks;
  const int nu = b.p * b.n_neighbors, nw = b.q * b.n_neighbors;
  const Mat sww = kernel.block(b.disturbance(), b.q, b.disturbance(), b.q);
  if (max_eigenvalue(sww) >= 0.0) throw Error(ErrorKind::WrongCurvature, "S_ww is not negative definite");
  const Vec rhs = kernel.block(b.disturbance(), b.q, b.delta(), b.n) * delta +
                  kernel.block(b.disturbance(), b.q, b.control(), b.p) * u +
                  kernel.block(b.disturbance(), b.q, b.neighbor_controls(), nu) * stack(u_neighbors, b.p) +
                  kernel.block(b.disturbance(), b.q, b.neighbor_disturbances(), nw) * stack(w_neighbors, b.q);
  return -inverse_or_throw(sww, ErrorKind::Singular, "S_ww") * rhs;
}

Vec improve_control_coop(const QKernel& kernel, const Vec& delta, const std::vector<Vec>& u_neighbors, const Vec& w,
                         const std::vector<Vec>& w_neighbors) {
  const BlockMap& b = kernel.blocks;
  const int nu = b.p * b.n_neighbors, nw = b.q * b.n_neighbors;
  const Mat suu = kernel.block(b.control(), b.p, b.control(), b.p);
  if (min_eigenvalue(suu) <= 0.0) throw Error(ErrorKind::WrongCurvature, "S_uu is not positive definite");
  const Vec rhs = kernel.block(b.control(), b.p, b.delta(), b.n) * delta +
                  kernel.block(b.control(), b.p, b.neighbor_controls(), nu) * stack(u_neighbors, b.p) +
                  kernel.block(b.control(), b.p, b.disturbance(), b.q) * w +
                  kernel.block(b.control(), b.p, b.neighbor_disturbances(), nw) * stack(w_neighbors, b.q);
  return -inverse_or_throw(suu, ErrorKind::Singular, "S_uu") * rhs;
}

Vec CoopGains::control(const Vec& delta, const Vec& u_neighbors, const Vec& w_neighbors) const {
  return control_delta * delta + control_neighbor_u * u_neighbors + control_neighbor_w * w_neighbors;
}

Vec CoopGains::disturbance(const Vec& delta, const Vec& u_neighbors, const Vec& w_neighbors) const {
  return disturbance_delta * delta + disturbance_neighbor_u * u_neighbors + disturbance_neighbor_w * w_neighbors;
}

CoopGains joint_stationary_policies_coop(const QKernel& kernel) {
  const BlockMap& b = kernel.blocks;
  const int nu = b.p * b.n_neighbors, nw = b.q * b.n_neighbors;
  const int iu = b.control(), iw = b.disturbance(), id = b.delta();
  const int iun = b.neighbor_controls(), iwn = b.neighbor_disturbances();
  const Mat suu = kernel.block(iu, b.p, iu, b.p), sww = kernel.block(iw, b.q, iw, b.q);
  const Mat suw = kernel.block(iu, b.p, iw, b.q), swu = kernel.block(iw, b.q, iu, b.p);
  const Mat sww_inv = inverse_or_throw(sww, ErrorKind::SingularSchurComplement, "S_ww");
  const Mat suu_inv = inverse_or_throw(suu, ErrorKind::SingularSchurComplement, "S_uu");
  const Mat schur_u = inverse_or_throw(suu - suw * sww_inv * swu, ErrorKind::SingularSchurComplement,
                                       "control Schur complement");
  const Mat schur_w = inverse_or_throw(sww - swu * suu_inv * suw, ErrorKind::SingularSchurComplement,
                                       "disturbance Schur complement");
  CoopGains g;
  g.control_delta = -schur_u * (-suw * sww_inv * kernel.block(iw, b.q, id, b.n) + kernel.block(iu, b.p, id, b.n));
  g.control_neighbor_u =
      -schur_u * (kernel.block(iu, b.p, iun, nu) - suw * sww_inv * kernel.block(iw, b.q, iun, nu));
  g.control_neighbor_w =
      -schur_u * (kernel.block(iu, b.p, iwn, nw) - suw * sww_inv * kernel.block(iw, b.q, iwn, nw));
  g.disturbance_delta =
      -schur_w * (-swu * suu_inv * kernel.block(iu, b.p, id, b.n) + kernel.block(iw, b.q, id, b.n));
  g.disturbance_neighbor_u =
      -schur_w * (kernel.block(iw, b.q, iun, nu) - swu * suu_inv * kernel.block(iu, b.p, iun, nu));
  g.disturbance_neighbor_w =
      -schur_w * (kernel.block(iw, b.q, iwn, nw) - swu * suu_inv * kernel.block(iu, b.p, iwn, nw));
  return g;
}

Mat joint_stationary_policies_noncoop(const QKernel& kernel) {
  const BlockMap& b = kernel.blocks;
  const int na = b.action_size();
  const Mat saa = kernel.block(b.n, na, b.n, na);
  Eigen::JacobiSVD<Mat> svd(saa);
  const Vec& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) throw Error(ErrorKind::SingularBlockMatrix, "action block condition number exceeds 1e12");
  return -saa.partialPivLu().solve(kernel.block(b.n, na, b.delta(), b.n));
}

Mat zero_sum_riccati(const Mat& a, const Mat& b, const Mat& e, const Mat& q, const Mat& r, const Mat& t,
                     double attenuation, double tol, int max_iter) {
  const Eigen::Index n = a.rows(), p = b.cols(), nq = e.cols();
  const double b2 = attenuation * attenuation;
  Mat inputs(n, p + nq);
  inputs << b, e;
  Mat stage = Mat::Zero(p + nq, p + nq);
  stage.topLeftCorner(p, p) = r;
  stage.bottomRightCorner(nq, nq) = -b2 * t;
  Mat P = Mat::Zero(n, n);
  for (int it = 0; it < max_iter; ++it) {
    const Mat w = stage + inputs.transpose() * P * inputs;
    if (max_eigenvalue(w.bottomRightCorner(nq, nq)) >= 0.0)
      throw Error(ErrorKind::IllPosedSaddle, "disturbance curvature lost at iterate " + std::to_string(it));
    const Mat cross = inputs.transpose() * P * a;
    Mat next = q + a.transpose() * P * a - cross.transpose() * w.partialPivLu().solve(cross);
    next = symmetrize(next);
    if (!next.allFinite()) throw Error(ErrorKind::NoConvergence, "Riccati iterate became non-finite");
    const double change = (next - P).norm();
    P = std::move(next);
    if (change < tol) return P;
  }
  throw Error(ErrorKind::NoConvergence, "Riccati recursion did not converge");
}

namespace {

void require_isolated(const GraphTopology& topology, int i) {
  topology.check_agent(i);
  if (topology.pinning()(i) != 1.0 || !topology.neighbors(i).empty())
    throw Error(ErrorKind::InvalidArgument, "oracle requires a pinned agent without neighbors");
}

}  // namespace

ValueKernel riccati_oracle_single_agent(const FleetModel& model, const GraphTopology& topology,
                                        const GameWeights& weights, int i, double tol, int max_iter) {
  require_isolated(topology, i);
  const double s = topology.coupling(i);
  Mat P = zero_sum_riccati(model.drift(), -s * model.control_input(i), -s * model.disturbance_input(i),
                           weights.state_weight[i], weights.control_weight[i], weights.disturbance_weight[i],
                           weights.attenuation, tol, max_iter);
  return {i, P};
}

std::pair<Mat, Mat> saddle_gains(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                                 int i, const Mat& P) {
  const double s = topology.coupling(i);
  const int p = model.control_dim(), q = model.disturbance_dim();
  const double b2 = weights.attenuation * weights.attenuation;
  Mat inputs(model.state_dim(), p + q);
  inputs << -s * model.control_input(i), -s * model.disturbance_input(i);
  Mat w = inputs.transpose() * P * inputs;
  w.topLeftCorner(p, p) += weights.control_weight[i];
  w.bottomRightCorner(q, q) -= b2 * weights.disturbance_weight[i];
  const Mat gain = -w.partialPivLu().solve(inputs.transpose() * P * model.drift());
  return {gain.topRows(p), gain.bottomRows(q)};
}

ValueKernel evaluate_local_policy(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                                  int i, const Mat& action_gain) {
  const BlockMap blocks = BlockMap::for_agent(model, topology, i);
  if (action_gain.rows() != blocks.action_size() || action_gain.cols() != blocks.n)
    throw Error(ErrorKind::DimensionMismatch, "action gain has wrong shape");
  Mat lift(blocks.size(), blocks.n);
  lift << Mat::Identity(blocks.n, blocks.n), action_gain;
  const Mat closed = stacked_input_matrix(model, topology, i) * lift;
  const Mat cost = lift.transpose() * cost_matrix(weights, blocks, i) * lift;
  if (spectral_radius(closed) >= 1.0)
    throw Error(ErrorKind::NotAdmissible, "local closed loop of agent " + std::to_string(i) + " is not Schur stable");
  return {i, discrete_lyapunov(closed, cost)};
}

double closed_loop_radius(const FleetModel& model, const GraphTopology& topology, const std::vector<Mat>& control_gains,
                          const std::vector<Mat>& disturbance_gains) {
  const int n_agents = model.n_agents(), n = model.state_dim();
  Mat glob = kron(Mat::Identity(n_agents, n_agents), model.drift());
  Mat feedback = Mat::Zero(n_agents * n, n_agents * n);
  for (int i = 0; i < n_agents; ++i) {
    Mat f = model.control_input(i) * control_gains.at(i);
    if (!disturbance_gains.empty()) f += model.disturbance_input(i) * disturbance_gains.at(i);
    feedback.block(i * n, i * n, n, n) = f;
  }
  glob -= feedback * kron(topology.pinned_laplacian(), Mat::Identity(n, n));
  return spectral_radius(glob);
}

std::vector<Mat> local_lqr_gains(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights) {
  std::vector<Mat> gains;
  const int n = model.state_dim(), q = model.disturbance_dim();
  for (int i = 0; i < model.n_agents(); ++i) {
    const Mat b = -topology.coupling(i) * model.control_input(i);
    const Mat& r = weights.control_weight[i];
    const Mat p = zero_sum_riccati(model.drift(), b, Mat::Zero(n, q), weights.state_weight[i], r,
                                   weights.disturbance_weight[i], weights.attenuation, 1e-12, 200000);
    gains.push_back(-(r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * model.drift()));
  }
  return gains;
}

MonotonicityReport check_monotonicity(const std::vector<PiIteration>& log, double slack) {
  MonotonicityReport rep;
  for (std::size_t e = 1; e < log.size(); ++e) {
    const PiIteration& prev = log[e - 1];
    const PiIteration& cur = log[e];
    const bool same_outer = prev.iter_outer == cur.iter_outer;
    bool violated = false;
    for (std::size_t i = 0; i < cur.probe_values.size(); ++i)
      for (std::size_t s = 0; s < cur.probe_values[i].size(); ++s) {
        const double diff = cur.probe_values[i][s] - prev.probe_values[i][s];
        if (same_outer && diff < -slack) {
          violated = true;
          rep.worst_inner_decrease = std::max(rep.worst_inner_decrease, -diff);
        }
        if (!same_outer && diff > slack) {
          violated = true;
          rep.worst_outer_increase = std::max(rep.worst_outer_increase, diff);
        }
      }
    if (violated) (same_outer ? rep.inner_violations : rep.outer_violations) += 1;
  }
  return rep;
}

namespace {

struct PiContext {
  const FleetModel& model;
  const GraphTopology& topology;
  const GameWeights& weights;
  const PiOptions& options;
  std::vector<BlockMap> blocks;
  std::vector<Mat> probes;  // per agent n x n_probe
};

// One fleet rollout with excitation on every applied input, split into per-agent datasets.
std::vector<EvaluationDataset> collect_data(const PiContext& ctx, const std::vector<Mat>& gains, std::uint64_t seed) {
  const FleetModel& model = ctx.model;
  const GraphTopology& topo = ctx.topology;
  const int n_agents = model.n_agents(), n = model.state_dim(), p = model.control_dim(), q = model.disturbance_dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Vec> x(n_agents);
  for (Vec& xi : x) {
    xi.resize(n);
    for (int c = 0; c < n; ++c) xi(c) = uni(rng);
  }
  const Vec x0 = Vec::Zero(n);
  std::vector<EvaluationDataset> data(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    data[i].agent = i;
    data[i].blocks = ctx.blocks[i];
  }
  auto errors_of = [&](const std::vector<Vec>& xs) {
    std::vector<Vec> d(n_agents);
    for (int i = 0; i < n_agents; ++i) d[i] = neighborhood_error(topo, xs, x0, i);
    return d;
  };
  // Next actions from the evaluated action gain, as in the model-based evaluation.
  auto policy_z = [&](int i, const std::vector<Vec>& d) {
    const BlockMap& blocks = ctx.blocks[i];
    Vec z(blocks.size());
    z.head(n) = d[i];
    z.tail(blocks.action_size()) = gains[i] * d[i];
    return z;
  };
  std::vector<Vec> d = errors_of(x);
  for (int k = 0; k < ctx.options.transitions; ++k) {
    std::vector<Vec> u(n_agents), w(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      const Vec act = gains[i] * d[i];
      u[i] = act.segment(ctx.blocks[i].control() - n, p);
      w[i] = act.segment(ctx.blocks[i].disturbance() - n, q);
      for (int c = 0; c < p; ++c) u[i](c) += ctx.options.excitation * uni(rng);
      for (int c = 0; c < q; ++c) w[i](c) += ctx.options.excitation * uni(rng);
    }
    std::vector<Vec> xn(n_agents);
    for (int i = 0; i < n_agents; ++i) xn[i] = step_follower(model, i, x[i], u[i], w[i]);
    const std::vector<Vec> dn = errors_of(xn);
    for (int i = 0; i < n_agents; ++i) {
      std::vector<Vec> un, wn;
      for (int j : topo.neighbors(i)) {
        un.push_back(u[j]);
        wn.push_back(w[j]);
      }
      const Vec z = ctx.blocks[i].assemble(d[i], u[i], un, w[i], wn);
      data[i].z.push_back(z);
      data[i].r.push_back(stage_cost(ctx.weights, i, d[i], u[i], un, w[i], wn));
      data[i].z_next.push_back(policy_z(i, dn));
    }
    for (const Vec& xi : xn)
      if (!xi.allFinite()) throw Error(ErrorKind::NumericalDivergence, "evaluation rollout diverged", k);
    x = xn;
    d = dn;
  }
  return data;
}

std::vector<QKernel> evaluate_all(const PiContext& ctx, const std::vector<Mat>& gains, std::uint64_t seed) {
  std::vector<QKernel> kernels;
  const int n_agents = ctx.model.n_agents();
  if (ctx.options.evaluation == Evaluation::model_based) {
    for (int i = 0; i < n_agents; ++i)
      kernels.push_back(qkernel_from_value(ctx.model, ctx.topology, ctx.weights, i,
                                           evaluate_local_policy(ctx.model, ctx.topology, ctx.weights, i, gains[i])));
  } else {
    const auto data = collect_data(ctx, gains, seed);
    for (int i = 0; i < n_agents; ++i)
      kernels.push_back(policy_eval_lsq(data[i], ctx.weights.mode, ctx.options.residual_threshold));
  }
  return kernels;
}

std::vector<double> probe_values(const PiContext& ctx, const QKernel& kernel, const Mat& gain) {
  const BlockMap& b = kernel.blocks;
  const Mat& probes = ctx.probes[kernel.agent];
  Mat lift(b.size(), b.n);
  lift << Mat::Identity(b.n, b.n), gain;
  const Mat v = lift.transpose() * kernel.S * lift;
  std::vector<double> out;
  for (Eigen::Index s = 0; s < probes.cols(); ++s) out.push_back(probes.col(s).dot(v * probes.col(s)));
  return out;
}

double probe_change(const PiContext& ctx, int i, const Mat& gain_change) {
  double worst = 0.0;
  for (Eigen::Index s = 0; s < ctx.probes[i].cols(); ++s)
    worst = std::max(worst, (gain_change * ctx.probes[i].col(s)).norm());
  return worst;
}

PiResult run_pi(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                const std::vector<Mat>& initial_control_gains, const PiOptions& options) {
  weights.validate(model, topology);
  const int n_agents = model.n_agents(), n = model.state_dim(), p = model.control_dim();
  if (!(options.eps_inner > 0.0) || !(options.eps_outer > 0.0))
    throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
  if (static_cast<int>(initial_control_gains.size()) != n_agents)
    throw Error(ErrorKind::DimensionMismatch, "one initial gain per agent required");
  for (const Mat& k : initial_control_gains)
    if (k.rows() != p || k.cols() != n) throw Error(ErrorKind::DimensionMismatch, "initial gain has wrong shape");
  const double radius = closed_loop_radius(model, topology, initial_control_gains);
  if (radius >= 1.0)
    throw Error(ErrorKind::NotAdmissible, "initial closed loop spectral radius " + std::to_string(radius));

  PiContext ctx{model, topology, weights, options, {}, {}};
  std::mt19937_64 probe_rng(options.seed);
  std::normal_distribution<double> normal;
  for (int i = 0; i < n_agents; ++i) {
    ctx.blocks.push_back(BlockMap::for_agent(model, topology, i));
    Mat pr(n, options.probe_states);
    for (int s = 0; s < options.probe_states; ++s) {
      for (int c = 0; c < n; ++c) pr(c, s) = normal(probe_rng);
      pr.col(s).normalize();
    }
    ctx.probes.push_back(pr);
  }
  const bool coop = weights.mode == GameMode::cooperative;

  std::vector<Mat> gains(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    gains[i] = Mat::Zero(ctx.blocks[i].action_size(), n);
    gains[i].topRows(p) = initial_control_gains[i];
  }

  PiResult result;
  std::uint64_t eval_seed = options.seed;
  double last_outer = std::numeric_limits<double>::quiet_NaN();
  for (int outer = 0;; ++outer) {
    if (outer >= options.max_outer) throw Error(ErrorKind::MaxIterations, "outer loop did not converge");
    std::vector<QKernel> kernels;
    for (int inner = 0;; ++inner) {
      if (inner >= options.max_inner) throw Error(ErrorKind::MaxIterations, "inner loop did not converge");
      kernels = evaluate_all(ctx, gains, ++eval_seed);
      PiIteration entry;
      entry.iter_outer = outer;
      entry.iter_inner = inner;
      entry.outer_norm = last_outer;
      double inner_norm = 0.0;
      std::vector<Mat> updated = gains;
      for (int i = 0; i < n_agents; ++i) {
        entry.probe_values.push_back(probe_values(ctx, kernels[i], gains[i]));
        const BlockMap& b = ctx.blocks[i];
        const Mat& S = kernels[i].S;
        // Maximizing blocks: w_i (cooperative) or (u_-i, w_i, w_-i) (non-cooperative).
        const int start = coop ? b.disturbance() : b.neighbor_controls();
        const int len = coop ? b.q : b.action_size() - b.p;
        const Mat saa = S.block(start, start, len, len);
        if (max_eigenvalue(saa) >= 0.0)
          throw Error(ErrorKind::WrongCurvature, "maximizing block of agent " + std::to_string(i) +
                                                     " is not negative definite");
        const Mat rhs = S.block(start, b.delta(), len, n) + S.block(start, b.control(), len, p) * gains[i].topRows(p);
        const Mat next = -saa.partialPivLu().solve(rhs);
        const Mat old = gains[i].middleRows(start - n, len);
        inner_norm = std::max(inner_norm, probe_change(ctx, i, next - old));
        updated[i].middleRows(start - n, len) = next;
      }
      entry.inner_norm = inner_norm;
      result.log.push_back(entry);
      if (options.keep_kernels) {
        std::vector<Vec> snap;
        for (const QKernel& k : kernels) snap.push_back(half_vec(k.S));
        result.kernel_snapshots.push_back(std::move(snap));
      }
      const bool done = inner_norm <= options.eps_inner;
      gains = std::move(updated);
      if (done) break;
    }
    // Control improvement against the converged maximizing blocks.
    double outer_norm = 0.0;
    for (int i = 0; i < n_agents; ++i) {
      const BlockMap& b = ctx.blocks[i];
      const Mat& S = kernels[i].S;
      const Mat suu = S.block(b.control(), b.control(), p, p);
      if (min_eigenvalue(suu) <= 0.0)
        throw Error(ErrorKind::WrongCurvature, "S_uu of agent " + std::to_string(i) + " is not positive definite");
      const int rest = b.action_size() - p;
      const Mat rhs = S.block(b.control(), b.delta(), p, n) +
                      S.block(b.control(), b.neighbor_controls(), p, rest) * gains[i].bottomRows(rest);
      const Mat next = -suu.partialPivLu().solve(rhs);
      outer_norm = std::max(outer_norm, probe_change(ctx, i, next - gains[i].topRows(p)));
      gains[i].topRows(p) = next;
    }
    last_outer = outer_norm;
    result.log.back().outer_norm = outer_norm;
    result.outer_iterations = outer + 1;
    if (outer_norm <= options.eps_outer) {
      result.kernels = std::move(kernels);
      break;
    }
  }
  result.action_gains = gains;
  for (int i = 0; i < n_agents; ++i) {
    const BlockMap& b = ctx.blocks[i];
    result.control_gains.push_back(gains[i].topRows(p));
    result.disturbance_gains.push_back(gains[i].middleRows(b.disturbance() - n, b.q));
  }
  result.monotonicity = check_monotonicity(result.log);
  return result;
}

}  // namespace

PiResult run_pi_coop(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                     const std::vector<Mat>& initial_control_gains, const PiOptions& options) {
  if (weights.mode != GameMode::cooperative) throw Error(ErrorKind::WrongMode, "weights are not cooperative");
  return run_pi(model, topology, weights, initial_control_gains, options);
}

PiResult run_pi_noncoop(const FleetModel& model, const GraphTopology& topology, const GameWeights& weights,
                        const std::vector<Mat>& initial_control_gains, const PiOptions& options) {
  if (weights.mode != GameMode::noncooperative) throw Error(ErrorKind::WrongMode, "weights are not non-cooperative");
  return run_pi(model, topology, weights, initial_control_gains, options);
}

}  // namespace qgame

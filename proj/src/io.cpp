#include "qgame/io.hpp"

#include "qgame/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace qgame {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  return out;
}

void put_vec(std::ostream& out, const Vec& v) {
  for (Eigen::Index c = 0; c < v.size(); ++c) out << ',' << format_double(v(c));
}

void put_empty(std::ostream& out, Eigen::Index count) {
  for (Eigen::Index c = 0; c < count; ++c) out << ',';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& s, int line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
  if (log.states.empty()) throw Error(ErrorKind::InvalidArgument, "empty trajectory");
  const Eigen::Index n = log.leader.front().size();
  const Eigen::Index p = log.controls.empty() ? 0 : log.controls.front().front().size();
  const Eigen::Index q = log.disturbances.empty() ? 0 : log.disturbances.front().front().size();
  out << "step,agent";
  for (Eigen::Index c = 1; c <= n; ++c) out << ",x" << c;
  for (Eigen::Index c = 1; c <= n; ++c) out << ",delta" << c;
  for (Eigen::Index c = 1; c <= p; ++c) out << ",u" << c;
  for (Eigen::Index c = 1; c <= q; ++c) out << ",w" << c;
  out << ",stage_cost\n";
  const int n_agents = log.n_agents();
  for (int k = 0; k <= log.horizon; ++k) {
    out << k << ",0";
    put_vec(out, log.leader[k]);
    put_empty(out, n + p + q + 1);
    out << '\n';
    for (int i = 0; i < n_agents; ++i) {
      out << k << ',' << (i + 1);
      put_vec(out, log.states[k][i]);
      put_vec(out, log.errors[k][i]);
      if (k < log.horizon) {
        put_vec(out, log.controls[k][i]);
        put_vec(out, log.disturbances[k][i]);
        out << ',' << format_double(log.costs[k][i]);
      } else {
        put_empty(out, p + q + 1);
      }
      out << '\n';
    }
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log) {
  auto out = open_out(path);
  write_trajectory_csv(out, log);
}

TrajectoryLog read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "empty trajectory file");
  const auto header = split(line);
  int n = 0, p = 0, q = 0;
  for (const auto& h : header) {
    if (h.rfind("delta", 0) == 0) ++n;
    else if (h.rfind("u", 0) == 0) ++p;
    else if (h.rfind("w", 0) == 0) ++q;
  }
  if (header.size() != static_cast<std::size_t>(3 + 2 * n + p + q))
    throw Error(ErrorKind::ParseError, "unexpected trajectory header");
  TrajectoryLog log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": wrong column count");
    const int k = static_cast<int>(parse_cell(cells[0], line_no));
    const int agent = static_cast<int>(parse_cell(cells[1], line_no));
    auto read_vec = [&](int offset, int dim) {
      Vec v(dim);
      for (int c = 0; c < dim; ++c) v(c) = parse_cell(cells[offset + c], line_no);
      return v;
    };
    if (agent == 0) {
      if (k != static_cast<int>(log.leader.size()))
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": steps out of order");
      log.leader.push_back(read_vec(2, n));
      log.states.emplace_back();
      log.errors.emplace_back();
      continue;
    }
    log.states.back().push_back(read_vec(2, n));
    log.errors.back().push_back(read_vec(2 + n, n));
    if (!cells[2 + 2 * n].empty()) {
      if (static_cast<int>(log.controls.size()) < k + 1) {
        log.controls.emplace_back();
        log.disturbances.emplace_back();
        log.costs.emplace_back();
      }
      log.controls[k].push_back(read_vec(2 + 2 * n, p));
      log.disturbances[k].push_back(read_vec(2 + 2 * n + p, q));
      log.costs[k].push_back(parse_cell(cells[2 + 2 * n + p + q], line_no));
    }
  }
  log.horizon = static_cast<int>(log.leader.size()) - 1;
  if (log.horizon < 1 || static_cast<int>(log.controls.size()) != log.horizon)
    throw Error(ErrorKind::ParseError, "trajectory file is incomplete");
  return log;
}

void write_weight_history_csv(const std::filesystem::path& path, const std::vector<WeightRecord>& history) {
  auto out = open_out(path);
  out << "step,agent,net,frobenius_norm\n";
  for (const WeightRecord& r : history)
    out << r.step << ',' << (r.agent + 1) << ',' << r.net << ',' << format_double(r.frobenius_norm) << '\n';
}

nlohmann::json pi_log_json(const std::vector<PiIteration>& log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PiIteration& it : log) {
    nlohmann::json e;
    e["iter_outer"] = it.iter_outer;
    e["iter_inner"] = it.iter_inner;
    e["inner_norm"] = it.inner_norm;
    if (std::isnan(it.outer_norm))
      e["outer_norm"] = nullptr;
    else
      e["outer_norm"] = it.outer_norm;
    e["probe_values"] = it.probe_values;
    arr.push_back(std::move(e));
  }
  return arr;
}

void write_kernel_csv(const std::filesystem::path& path, const std::vector<std::vector<Vec>>& snapshots) {
  auto out = open_out(path);
  out << "evaluation,agent,half_vectorized_kernel\n";
  for (std::size_t e = 0; e < snapshots.size(); ++e)
    for (std::size_t i = 0; i < snapshots[e].size(); ++i) {
      out << e << ',' << (i + 1);
      put_vec(out, snapshots[e][i]);
      out << '\n';
    }
}

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json vector_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index c = 0; c < v.size(); ++c) arr.push_back(v(c));
  return arr;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace qgame

#pragma once

#include "qgame/dynamics.hpp"
#include "qgame/online_learner.hpp"
#include "qgame/pi_solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qgame {

// Shortest text that parses back to the same double.
std::string format_double(double v);

// Agent ids in files are 1-based; the leader is agent 0.
void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log);
TrajectoryLog read_trajectory_csv(const std::filesystem::path& path);

void write_weight_history_csv(const std::filesystem::path& path, const std::vector<WeightRecord>& history);

nlohmann::json pi_log_json(const std::vector<PiIteration>& log);
void write_kernel_csv(const std::filesystem::path& path, const std::vector<std::vector<Vec>>& snapshots);

nlohmann::json matrix_json(const Mat& m);
nlohmann::json vector_json(const Vec& v);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace qgame

#ifndef HOPTRAJ_SCENARIO_IO_HPP
#define HOPTRAJ_SCENARIO_IO_HPP

#include <string>

#include "hoptraj/simulation.hpp"

namespace hoptraj {

/// Robot parameters from a JSON file; keys match the struct fields
/// (m_r, I_r, g, zeta_t, zeta_d, L_m, L_t, C_T, C_R, omega_rotor_max),
/// SI units, C_T/C_R as 3x3 row-major nested arrays.
RobotParamsd load_params(const std::string& path);

/// Scenario from a JSON file; the referenced params file is resolved
/// relative to the scenario file's directory.
Scenario load_scenario(const std::string& path);

/// Trajectory as JSON text (type, times, n_star, per-output orders and
/// monomial coefficients).
std::string trajectory_to_json(const PolynomialTrajectoryd& traj);
PolynomialTrajectoryd trajectory_from_json(const std::string& text);

/// All per-hop trajectories of a log as a JSON array.
void save_trajectories(const TrajectoryLog& log, const std::string& path);

std::string rmse_to_json(const RmseReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace hoptraj

#endif  // HOPTRAJ_SCENARIO_IO_HPP

#ifndef HOPTRAJ_CSV_HPP
#define HOPTRAJ_CSV_HPP

#include <string>

#include "hoptraj/simulation.hpp"

namespace hoptraj {

/// Per-tick log as CSV.  Fixed column order:
///   t, desired 12-state, U1_d, actual 12-state, U1..U4, phase, V
/// Numbers use the shortest representation that round-trips exactly.
void emit_csv(const TrajectoryLog& log, const std::string& path);

/// Parse a log CSV back; exact inverse of emit_csv for the emitted fields.
/// Hop indices are reconstructed from the stance rows.
TrajectoryLog parse_csv(const std::string& path);

/// Plot-data files: plot_zx.csv (z over x), plot_yx.csv (y over x) and
/// plot_states.csv (states over time), desired and actual side by side.
void emit_plot_data(const TrajectoryLog& log, const std::string& dir);

std::string format_shortest(double v);

}  // namespace hoptraj

#endif  // HOPTRAJ_CSV_HPP

#pragma once

#include <string>

#include "isskit/pde.hpp"

namespace isskit {

/// Floating-point formatting used in every CSV: 17 significant digits,
/// enough to round-trip doubles exactly.
std::string format_g17(double v);

/// Long-format state dump, header "t,species,i,x,value" (species and node
/// index i are 1-based).
void write_trajectory_csv(const std::string& path, const SystemSpec& spec, const Trajectory& traj);

/// Per-time norms, header "t,species,L2,L4,H10,Sup".
void write_norms_csv(const std::string& path, const SystemSpec& spec, const Trajectory& traj);

/// Single state snapshot with the same layout as the trajectory dump.
void write_field_csv(const std::string& path, const SystemSpec& spec, const Field& state,
                     double t = 0.0);

/// Generic numeric table with a caller-supplied header line.
void write_table_csv(const std::string& path, const std::string& header,
                     const std::vector<std::vector<double>>& rows);

void ensure_directory(const std::string& dir);

}  // namespace isskit

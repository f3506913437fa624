#include "isskit/csv.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace isskit {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ensure_directory(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

namespace {

std::ofstream open_out(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

void write_state_rows(std::ofstream& out, const SystemSpec& spec, const Field& state, double t) {
  for (int k = 0; k < spec.n_species; ++k) {
    for (int i = 0; i < spec.grid.n_interior; ++i) {
      out << format_g17(t) << ',' << (k + 1) << ',' << (i + 1) << ','
          << format_g17(spec.grid.node(i)) << ',' << format_g17(state.values(i, k)) << '\n';
    }
  }
}

}  // namespace

void write_trajectory_csv(const std::string& path, const SystemSpec& spec, const Trajectory& traj) {
  auto out = open_out(path);
  out << "t,species,i,x,value\n";
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    write_state_rows(out, spec, traj.states[s], traj.times[s]);
  }
}

void write_norms_csv(const std::string& path, const SystemSpec& spec, const Trajectory& traj) {
  auto out = open_out(path);
  out << "t,species,L2,L4,H10,Sup\n";
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    for (int k = 0; k < spec.n_species; ++k) {
      out << format_g17(traj.times[s]) << ',' << (k + 1) << ','
          << format_g17(field_norm(spec, traj.states[s], NormKind::L2, k)) << ','
          << format_g17(field_norm(spec, traj.states[s], NormKind::L4, k)) << ','
          << format_g17(field_norm(spec, traj.states[s], NormKind::H10, k)) << ','
          << format_g17(field_norm(spec, traj.states[s], NormKind::Sup, k)) << '\n';
    }
  }
}

void write_field_csv(const std::string& path, const SystemSpec& spec, const Field& state,
                     double t) {
  auto out = open_out(path);
  out << "t,species,i,x,value\n";
  write_state_rows(out, spec, state, t);
}

void write_table_csv(const std::string& path, const std::string& header,
                     const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_g17(row[i]);
    }
    out << '\n';
  }
}

}  // namespace isskit

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "isskit/grid.hpp"
#include "isskit/registry.hpp"

namespace isskit {

/// coeff * map(s_source) added to the equation of species `target`.
/// A self term (target == source) is an ordinary reaction; distinct indices
/// give nonlinear cross-species coupling.
struct NonlinTerm {
  int target = 0;
  int source = 0;
  NonlinMap map;
  double coeff = 1.0;
};

/// coeff * map(u_channel) added to the equation of species `target`.
struct InputTerm {
  int target = 0;
  int channel = 0;
  NonlinMap map;
  double coeff = 1.0;
};

/// Declarative description of a coupled 1-D reaction-diffusion network
///
///   ds_i/dt = c_i s_i'' + sum_j R_ij s_j + nonlinear terms + input terms
///
/// on (0, d) with homogeneous Dirichlet or Neumann conditions per species.
struct SystemSpec {
  Grid1D grid;
  int n_species = 1;
  std::vector<double> diffusion;               // c_i > 0, length^2/time
  std::vector<BoundaryCondition> bc;
  Eigen::MatrixXd linear_coupling;             // R, n_species x n_species
  std::vector<NonlinTerm> reactions;
  std::vector<InputTerm> inputs;
  int n_channels = 0;

  void validate() const;
  int state_size() const { return n_species * grid.n_interior; }
};

/// Discretized multi-species state. Column k holds species k on the interior
/// nodes, so the column-major storage coincides with the species-stacked
/// vector used by the linear algebra.
struct Field {
  Grid1D grid;
  Eigen::MatrixXd values;  // n_interior x n_species

  Field() = default;
  Field(const Grid1D& g, int n_species)
      : grid(g), values(Eigen::MatrixXd::Zero(g.n_interior, n_species)) {}

  int n_species() const { return static_cast<int>(values.cols()); }
  Eigen::VectorXd stacked() const {
    return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
  }
  static Field from_stacked(const Grid1D& g, int n_species, const Eigen::VectorXd& x);
  void require_compatible(const SystemSpec& spec) const;
};

/// Input signal u(x, t) per channel. Channels are separable amplitude(t)
/// times profile(x); a callback form covers closed-form inputs defined in
/// code. Piecewise-constant tables are evaluated right-continuously.
class InputSignal {
 public:
  struct Channel {
    enum class TimeKind { Const, Exp, PCTable };
    enum class ProfileKind { Const, Sine, Cosine, Gauss };
    TimeKind time_kind = TimeKind::Const;
    double amp = 0.0;
    double rate = 0.0;                    // Exp: amp e^{-rate t}
    std::vector<double> t_nodes;          // PCTable
    std::vector<double> t_values;
    ProfileKind profile_kind = ProfileKind::Const;
    int mode = 1;                         // Sine/Cosine: profile(x) = trig(mode pi x / d)
    double center = 0.5;                  // Gauss: relative center in (0, 1)
    double width = 0.1;                   // Gauss: relative width
  };

  InputSignal() = default;
  static InputSignal zero(int n_channels);
  static InputSignal constant(std::vector<double> channel_values);
  static InputSignal from_channels(std::vector<Channel> channels);
  static InputSignal callback(int n_channels,
                              std::function<double(int channel, double x, double t, double d)> fn);

  int n_channels() const { return n_channels_; }
  double value(int channel, double x, double t, double d) const;
  /// Samples every channel on the grid: (n_interior x n_channels).
  Eigen::MatrixXd sample(const Grid1D& grid, double t) const;
  const std::vector<Channel>& channels() const { return channels_; }
  bool is_callback() const { return static_cast<bool>(fn_); }

 private:
  int n_channels_ = 0;
  std::vector<Channel> channels_;
  std::function<double(int, double, double, double)> fn_;
};

/// Time-indexed simulation output. blowup is set when the sup norm exceeded
/// the configured bound and the run halted early.
struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  InputSignal input;
  std::optional<double> blowup;
};

}  // namespace isskit

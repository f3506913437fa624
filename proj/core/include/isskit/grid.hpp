#pragma once

#include <Eigen/Core>

#include "isskit/errors.hpp"

namespace isskit {

enum class BoundaryCondition { Dirichlet0, Neumann0 };

/// Uniform interior grid on (0, d): nodes x_i = (i+1) h, i = 0..n_interior-1,
/// h = d / (n_interior + 1). Boundary values are implied by the boundary
/// condition and never stored.
struct Grid1D {
  double d = 1.0;
  int n_interior = 3;

  Grid1D() = default;
  Grid1D(double length, int n) : d(length), n_interior(n) {
    if (!(d > 0.0) || n_interior < 1) throw Error("Grid1D: need d > 0 and n_interior >= 1");
  }

  double h() const { return d / (n_interior + 1); }
  double node(int i) const { return (i + 1) * h(); }

  bool operator==(const Grid1D& o) const { return d == o.d && n_interior == o.n_interior; }
};

/// Composite-trapezoid quadrature weights over [0, d] restricted to interior
/// nodes. Dirichlet boundary values vanish, so every node gets weight h;
/// Neumann boundary values mirror the nearest interior node, which folds the
/// boundary half-cells into the first and last weights.
Eigen::VectorXd quadrature_weights(const Grid1D& grid, BoundaryCondition bc);

}  // namespace isskit

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hjnet/core.hpp"
#include "hjnet/network.hpp"

namespace hjnet {

/// Space and time step pair. Strict admissibility asks dx <= dt on top of the
/// hard bounds; violating it only produces a warning.
struct StepPair {
  double dx = 0.0;
  double dt = 0.0;

  bool strictly_admissible() const { return dx <= dt; }
};

/// Uniform partition of [0, length] into n_cells cells of width h.
struct ArcGrid {
  std::size_t arc = 0;
  double length = 0.0;
  Eigen::Index n_cells = 1;
  double spacing = 0.0;

  Eigen::Index num_nodes() const { return n_cells + 1; }
  double node(Eigen::Index i) const {
    return i == n_cells ? length : static_cast<double>(i) * length / static_cast<double>(n_cells);
  }
  Eigen::VectorXd nodes() const {
    Eigen::VectorXd s(num_nodes());
    for (Eigen::Index i = 0; i < num_nodes(); ++i) s(i) = node(i);
    return s;
  }
  /// Cell [s_j, s_{j+1}] holding s; a point on an interior node belongs to
  /// the cell on its left.
  Eigen::Index cell_of(double s) const;
};

struct TimeGrid {
  Eigen::Index n_steps = 0;
  double horizon = 0.0;
  double spacing = 0.0;

  double node(Eigen::Index n) const {
    return n == n_steps ? horizon
                        : static_cast<double>(n) * horizon / static_cast<double>(n_steps);
  }
};

struct Grids {
  std::vector<ArcGrid> arcs;
  TimeGrid time;
  StepPair pair;
  std::vector<std::string> warnings;
};

/// ceil(x) tolerant to representation error: values within 1e-12 relative of
/// an integer are taken as that integer.
Eigen::Index robust_ceil(double x);

/// Builds the uniform arc grids and the time grid. Throws StepTooLarge when
/// dx >= some arc length or dt >= T; T == 0 yields a zero-step time grid.
Grids make_grids(const Network& network, double horizon, const StepPair& pair);

ArcGrid make_arc_grid(const Arc& arc, std::size_t arc_index, double dx);

/// Piecewise-linear interpolation of node values w on the grid at s.
template <typename Derived>
typename Derived::Scalar interpolate(const ArcGrid& grid, const Eigen::MatrixBase<Derived>& w,
                                     typename Derived::Scalar s) {
  using Scalar = typename Derived::Scalar;
  if (w.size() != grid.num_nodes())
    throw Error(ErrorCode::InvalidArgument, "node vector size does not match the grid");
  if (!(s >= Scalar(0) && s <= Scalar(grid.length)))
    throw Error(ErrorCode::OutOfRange, "interpolation point outside the arc");
  const Eigen::Index j = grid.cell_of(static_cast<double>(s));
  const Scalar s0 = grid.node(j);
  const Scalar s1 = grid.node(j + 1);
  const Scalar t = (s - s0) / (s1 - s0);
  return (Scalar(1) - t) * w(j) + t * w(j + 1);
}

}  // namespace hjnet

#include "hjnet/grid.hpp"

#include <algorithm>
#include <sstream>

namespace hjnet {

Eigen::Index robust_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return static_cast<Eigen::Index>(r);
  return static_cast<Eigen::Index>(std::ceil(x));
}

Eigen::Index ArcGrid::cell_of(double s) const {
  const double q = s / spacing;
  Eigen::Index j = static_cast<Eigen::Index>(std::ceil(q)) - 1;
  j = std::clamp<Eigen::Index>(j, 0, n_cells - 1);
  // Guard against q rounding across a node.
  while (j > 0 && s <= node(j)) --j;
  while (j < n_cells - 1 && s > node(j + 1)) ++j;
  return j;
}

ArcGrid make_arc_grid(const Arc& arc, std::size_t arc_index, double dx) {
  if (!(dx > 0.0)) throw Error(ErrorCode::InvalidArgument, "dx must be positive");
  ArcGrid g;
  g.arc = arc_index;
  g.length = arc.length;
  g.n_cells = std::max<Eigen::Index>(1, robust_ceil(arc.length / dx));
  g.spacing = arc.length / static_cast<double>(g.n_cells);
  return g;
}

Grids make_grids(const Network& network, double horizon, const StepPair& pair) {
  if (!(pair.dx > 0.0) || !(pair.dt > 0.0))
    throw Error(ErrorCode::InvalidArgument, "steps must be positive");
  if (horizon < 0.0) throw Error(ErrorCode::InvalidArgument, "horizon must be nonnegative");
  if (pair.dx >= network.min_arc_length()) {
    std::ostringstream os;
    os << "dx = " << pair.dx << " is not below the shortest arc length " << network.min_arc_length();
    throw Error(ErrorCode::StepTooLarge, os.str());
  }
  if (horizon > 0.0 && pair.dt >= horizon) {
    std::ostringstream os;
    os << "dt = " << pair.dt << " is not below the horizon " << horizon;
    throw Error(ErrorCode::StepTooLarge, os.str());
  }

  Grids grids;
  grids.pair = pair;
  grids.arcs.reserve(network.num_arcs());
  for (std::size_t a = 0; a < network.num_arcs(); ++a)
    grids.arcs.push_back(make_arc_grid(network.arc(a), a, pair.dx));

  grids.time.horizon = horizon;
  if (horizon > 0.0) {
    grids.time.n_steps = robust_ceil(horizon / pair.dt);
    grids.time.spacing = horizon / static_cast<double>(grids.time.n_steps);
  }
  if (!pair.strictly_admissible()) {
    std::ostringstream os;
    os << "pair (dx = " << pair.dx << ", dt = " << pair.dt
       << ") violates dx <= dt; outside the convergence hypotheses";
    grids.warnings.push_back(os.str());
  }
  return grids;
}

}  // namespace hjnet

#include "hjnet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

namespace hjnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double checked_reference(const ReferenceEvaluator& reference, std::size_t arc, double s, double t) {
  double value;
  try {
    value = reference(arc, s, t);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ReferenceUndefined) throw;
    std::ostringstream os;
    os << "reference undefined at arc " << arc << ", s = " << s << ", t = " << t << ": " << e.what();
    throw Error(ErrorCode::ReferenceUndefined, os.str());
  }
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << "reference undefined at arc " << arc << ", s = " << s << ", t = " << t;
    throw Error(ErrorCode::ReferenceUndefined, os.str());
  }
  return value;
}

}  // namespace

// --- Error norms ------------------------------------------------------------------

ErrorReport error_norms(const SolutionField& field, const ReferenceEvaluator& reference) {
  Eigen::Index last = field.first_level();
  while (field.has_level(last + 1)) ++last;
  return error_norms(field, last, reference);
}

ErrorReport error_norms(const SolutionField& field, Eigen::Index level, const ReferenceEvaluator& reference) {
  const Grids& grids = field.grids();
  const double t = grids.time.node(level);
  const auto& endpoints = field.endpoints();
  const Eigen::Index n_vertices = field.level(level).vertex.size();

  double sup = 0.0, sum = 0.0;
  auto account = [&](double deviation) {
    sup = std::max(sup, deviation);
    sum += deviation;
  };

  std::vector<bool> seen(static_cast<std::size_t>(n_vertices), false);
  for (std::size_t a = 0; a < grids.arcs.size(); ++a) {
    const ArcGrid& grid = grids.arcs[a];
    const auto [origin, terminus] = endpoints[a];
    for (const auto& [vertex, i] : {std::pair{origin, Eigen::Index{0}}, std::pair{terminus, grid.n_cells}}) {
      if (seen[vertex]) continue;
      seen[vertex] = true;
      account(std::abs(field.vertex_value(vertex, level) - checked_reference(reference, a, grid.node(i), t)));
    }
    for (Eigen::Index i = 1; i < grid.n_cells; ++i)
      account(std::abs(field.value(a, i, level) - checked_reference(reference, a, grid.node(i), t)));
  }

  ErrorReport report;
  report.E_inf = sup;
  report.E_1 = sum * grids.pair.dx;
  report.dx = grids.pair.dx;
  report.dt = grids.pair.dt;
  return report;
}

// --- Test 1 exact solution ------------------------------------------------------------

double exact_solution_test1(const Network& network, const Point& x, double t, double c) {
  double d = std::numeric_limits<double>::infinity();
  for (const Vertex& v : network.vertices())
    if ((v.coords - x).norm() <= 1e-12) d = 0.0;
  for (const Arc& arc : network.arcs()) {
    if (d == 0.0) break;
    for (std::size_t k = 0; k + 1 < arc.geometry.size(); ++k) {
      const Point a = arc.geometry[k], b = arc.geometry[k + 1];
      const double len = (b - a).norm();
      const double u = std::clamp((x - a).dot(b - a) / (len * len), 0.0, 1.0);
      if ((a + u * (b - a) - x).norm() > 1e-12 * std::max(1.0, arc.length)) continue;
      const double s = arc.cumulative[k] + u * len;
      d = std::min(d, std::min(s, arc.length - s));
    }
  }
  if (!std::isfinite(d)) throw Error(ErrorCode::InvalidArgument, "point is not on the network");
  const double speed = std::sqrt(2.0 * std::abs(c));
  if (d > 0.0 && !(speed * t >= d)) {
    std::ostringstream os;
    os << "t = " << t << " is before d / sqrt(2|c|) = " << (speed > 0.0 ? d / speed : kNaN);
    throw Error(ErrorCode::OutsideValidityWindow, os.str());
  }
  return speed * d + c * t;
}

ReferenceEvaluator exact_reference_test1(const Network& network, double c) {
  std::vector<double> lengths;
  for (const Arc& a : network.arcs()) lengths.push_back(a.length);
  return [lengths, c](std::size_t arc, double s, double t) {
    const double d = std::min(s, lengths.at(arc) - s);
    const double speed = std::sqrt(2.0 * std::abs(c));
    if (d > 0.0 && !(speed * t >= d)) {
      std::ostringstream os;
      os << "t = " << t << " is outside the validity window at s = " << s;
      throw Error(ErrorCode::OutsideValidityWindow, os.str());
    }
    return speed * d + c * t;
  };
}

// --- Convergence studies ----------------------------------------------------------------

std::string DtRule::to_string() const {
  if (kind == Kind::half_dx) return "half_dx";
  std::ostringstream os;
  os << "power_rule(C=" << C << ",p=" << p << ")";
  return os.str();
}

double convergence_rate(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0) || !std::isfinite(coarse) || !std::isfinite(fine)) return kNaN;
  return std::log2(coarse / fine);
}

std::vector<double> halving_ladder(double dx0, std::size_t rungs) {
  std::vector<double> ladder;
  for (std::size_t k = 0; k < rungs; ++k) ladder.push_back(dx0 / std::pow(2.0, static_cast<double>(k)));
  return ladder;
}

ConvergenceTable convergence_study(const Problem& problem, const ReferenceEvaluator& reference,
                                   const std::vector<double>& ladder, const DtRule& rule,
                                   const StudyOptions& options) {
  if (ladder.size() < 3) throw Error(ErrorCode::InvalidArgument, "a ladder needs at least 3 rungs");
  for (std::size_t k = 1; k < ladder.size(); ++k)
    if (std::abs(ladder[k] * 2.0 - ladder[k - 1]) > 1e-9 * ladder[k - 1])
      throw Error(ErrorCode::InvalidArgument, "ladder rungs must halve dx");

  ConvergenceTable table;
  for (double dx : ladder) {
    const StepPair pair{dx, rule(dx)};
    const Grids grids = make_grids(problem.network, problem.horizon, pair);
    Solution best;
    double runtime = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, options.repeats); ++r) {
      Solution sol = solve(problem, grids, options.scheme);
      if (sol.runtime_seconds < runtime) {
        runtime = sol.runtime_seconds;
        best = std::move(sol);
      }
    }
    ErrorReport row = error_norms(best.field, reference);
    row.runtime_seconds = runtime;
    const double speed = options.speed ? *options.speed : field_lipschitz(best.field, grids.time.n_steps);
    row.courant = speed * grids.pair.dt / grids.pair.dx;
    table.rows.push_back(row);
  }
  table.rate_inf.push_back(kNaN);
  table.rate_1.push_back(kNaN);
  for (std::size_t k = 1; k < table.rows.size(); ++k) {
    table.rate_inf.push_back(convergence_rate(table.rows[k - 1].E_inf, table.rows[k].E_inf));
    table.rate_1.push_back(convergence_rate(table.rows[k - 1].E_1, table.rows[k].E_1));
  }
  return table;
}

ReferenceEvaluator reference_from_fine_grid(const Problem& problem, const StepPair& fine,
                                            const std::vector<double>& ladder, double min_ratio,
                                            const SchemeOptions& options) {
  for (double dx : ladder) {
    if (!(fine.dx * min_ratio <= dx * (1.0 + 1e-12))) {
      std::ostringstream os;
      os << "fine dx " << fine.dx << " is not " << min_ratio << " times finer than rung " << dx;
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
  SchemeOptions opts = options;
  opts.keep_history = false;
  opts.keep_records = false;
  const Solution sol = solve(problem, fine, opts);

  struct Data {
    std::vector<ArcGrid> grids;
    std::vector<Eigen::VectorXd> values;
    double horizon;
  };
  auto data = std::make_shared<Data>();
  data->grids = sol.grids.arcs;
  data->horizon = sol.grids.time.horizon;
  const Eigen::Index last = sol.grids.time.n_steps;
  for (std::size_t a = 0; a < data->grids.size(); ++a) data->values.push_back(sol.field.arc_values(a, last));

  return [data](std::size_t arc, double s, double t) {
    if (std::abs(t - data->horizon) > 1e-12 * std::max(1.0, data->horizon)) {
      std::ostringstream os;
      os << "fine-grid reference only holds the final time " << data->horizon << ", asked for " << t;
      throw Error(ErrorCode::ReferenceUndefined, os.str());
    }
    return interpolate(data->grids.at(arc), data->values[arc], s);
  };
}

// --- Diagnostics ------------------------------------------------------------------------------

double discrete_lipschitz(const ArcGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (w.size() < 2) throw Error(ErrorCode::TooFewNodes, "discrete Lipschitz constant needs two nodes");
  if (w.size() != grid.num_nodes()) throw Error(ErrorCode::InvalidArgument, "node vector size does not match the grid");
  double lip = 0.0;
  for (Eigen::Index i = 0; i + 1 < w.size(); ++i)
    lip = std::max(lip, std::abs(w(i + 1) - w(i)) / (grid.node(i + 1) - grid.node(i)));
  return lip;
}

double field_lipschitz(const SolutionField& field, Eigen::Index n) {
  double lip = 0.0;
  Eigen::VectorXd w;
  for (std::size_t a = 0; a < field.grids().arcs.size(); ++a) {
    field.arc_values_into(a, n, w);
    lip = std::max(lip, discrete_lipschitz(field.grids().arcs[a], w));
  }
  return lip;
}

InvariantReport check_invariants(const Problem& problem, const Solution& solution) {
  InvariantReport report;
  const Grids& grids = solution.grids;
  const SolutionField& field = solution.field;
  const Eigen::Index NT = grids.time.n_steps;
  const double tau = grids.time.spacing;
  const double T = grids.time.horizon;
  if (!field.has_level(0) || !field.has_level(NT))
    throw Error(ErrorCode::InvalidArgument, "invariant checks need the full history");

  auto note = [&](bool& flag, const std::string& message) {
    if (flag) report.messages.push_back(message);
    flag = false;
  };

  std::vector<double> time_bound(grids.arcs.size());
  for (std::size_t a = 0; a < grids.arcs.size(); ++a) {
    const ArcModel& m = problem.models[a];
    double max_L = 0.0;
    const int ns = 65, nl = 65;
    for (int i = 0; i < ns; ++i) {
      const double s = m.length * i / (ns - 1);
      for (int k = 0; k < nl; ++k) {
        const double l = -m.beta0 + 2.0 * m.beta0 * k / (nl - 1);
        max_L = std::max(max_L, std::abs(m.L(s, l).as_double()));
      }
    }
    time_bound[a] = ((1.0 + T) * m.ell0 * m.beta0 + max_L) * tau * (1.0 + 1e-6);
  }

  Eigen::VectorXd w, w_prev;
  for (Eigen::Index n = 0; n <= NT; ++n) {
    const double t = grids.time.node(n);
    const auto& level = field.level(n);
    if (!level.vertex.allFinite()) note(report.finite, "non-finite vertex value at level " + std::to_string(n));
    for (std::size_t a = 0; a < grids.arcs.size(); ++a) {
      const ArcGrid& grid = grids.arcs[a];
      const ArcModel& m = problem.models[a];
      field.arc_values_into(a, n, w);
      if (!w.allFinite()) note(report.finite, "non-finite value on arc " + std::to_string(a));
      const double lip = discrete_lipschitz(grid, w);
      const double ratio = lip / ((1.0 + t) * m.ell0);
      report.worst_lipschitz_ratio = std::max(report.worst_lipschitz_ratio, ratio);
      if (ratio > 1.0 + 1e-6)
        note(report.equi_lipschitz, "equiLipschitz bound exceeded on arc " + std::to_string(a) + " at level " +
                                        std::to_string(n));
      if (n > 0) {
        field.arc_values_into(a, n - 1, w_prev);
        const double jump = (w - w_prev).cwiseAbs().maxCoeff();
        report.worst_time_ratio = std::max(report.worst_time_ratio, jump / time_bound[a] * (1.0 + 1e-6));
        if (jump > time_bound[a])
          note(report.time_regularity, "time regularity bound exceeded on arc " + std::to_string(a) +
                                           " at level " + std::to_string(n));
        const auto [o, e] = field.endpoints()[a];
        if (w(0) != level.vertex(static_cast<Eigen::Index>(o)) ||
            w(grid.n_cells) != level.vertex(static_cast<Eigen::Index>(e)))
          note(report.single_valued, "arc endpoint disagrees with the vertex value");
      }
    }
    if (n > 0) {
      const auto& prev = field.level(n - 1);
      for (Eigen::Index v = 0; v < level.vertex.size(); ++v)
        if (level.vertex(v) > prev.vertex(v) + problem.limiters[static_cast<std::size_t>(v)] * tau)
          note(report.vertex_slope, "vertex slope bound exceeded at vertex " + std::to_string(v) + ", level " +
                                        std::to_string(n));
    }
  }

  if (solution.records.size() == static_cast<std::size_t>(NT)) {
    for (Eigen::Index n = 1; n <= NT; ++n) {
      const StepRecord& rec = solution.record(n);
      for (std::size_t a = 0; a < grids.arcs.size(); ++a) {
        const ArcGrid& grid = grids.arcs[a];
        const double beta0 = problem.models[a].beta0;
        for (Eigen::Index i = 1; i < grid.n_cells; ++i) {
          const double alpha = rec.interior_control[a](i - 1);
          const double foot = grid.node(i) - tau * alpha;
          if (std::abs(alpha) > beta0 || foot < -1e-12 * grid.length || foot > grid.length * (1.0 + 1e-12))
            note(report.control_feasible, "infeasible control on arc " + std::to_string(a));
        }
      }
      for (const VertexRecord& vr : rec.vertex) {
        if (vr.branch != VertexBranch::arc) continue;
        if (std::abs(vr.control) > problem.models[*vr.arc].beta0)
          note(report.control_feasible, "infeasible vertex control");
      }
    }
  }
  return report;
}

TrajectoryCheck check_trajectory(const Problem& problem, const Solution& solution,
                                 const DiscreteTrajectory& trajectory) {
  TrajectoryCheck check;
  const ArcModel& m = problem.models[trajectory.arc];
  const ArcGrid& grid = solution.grids.arcs[trajectory.arc];
  const double tau = solution.grids.time.spacing;
  const double h = grid.spacing;
  const double slack = 1e-12 * std::max(1.0, grid.length);

  for (std::size_t k = 0; k < trajectory.controls.size(); ++k) {
    const double step = trajectory.positions[k + 1] - trajectory.positions[k];
    if (std::abs(step) > m.beta0 * tau + h + slack) ++check.displacement_violations;
    if (std::abs(step / tau - trajectory.controls[k]) > (h + slack) / tau) ++check.velocity_violations;
  }

  const Eigen::Index n0 = trajectory.levels.back();
  const Eigen::Index n_star = trajectory.levels.front();
  auto value_at = [&](double s, Eigen::Index n) {
    return interpolate(grid, solution.field.arc_values(trajectory.arc, n), s);
  };
  const double v0 = value_at(trajectory.positions.back(), n0);
  const double v_star = value_at(trajectory.positions.front(), n_star);
  check.action = trajectory.action;
  check.action_limit = v0 - v_star + solution.grids.time.horizon * m.ell0 * (m.beta0 * tau + h + h / tau);
  check.action_bound = check.action <= check.action_limit + 1e-12 * (1.0 + std::abs(check.action_limit));
  return check;
}

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table) {
  out << "dx,dt,E_inf,rate_inf,E_1,rate_1,time_s,courant\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const ErrorReport& r = table.rows[k];
    out << r.dx << ',' << r.dt << ',' << r.E_inf << ',' << table.rate_inf[k] << ',' << r.E_1 << ','
        << table.rate_1[k] << ',' << r.runtime_seconds << ',' << r.courant << '\n';
  }
}

}  // namespace hjnet

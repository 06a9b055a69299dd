#include "hjnet/scheme.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

#include "hjnet/golden_section.hpp"

namespace hjnet {

// --- Problem -----------------------------------------------------------------

std::vector<double> Problem::critical_values() const {
  std::vector<double> c;
  c.reserve(models.size());
  for (const ArcModel& m : models) c.push_back(m.critical_value);
  return c;
}

void Problem::validate() const {
  if (models.size() != network.num_arcs())
    throw Error(ErrorCode::InvalidArgument, "problem needs one arc model per arc");
  for (std::size_t a = 0; a < models.size(); ++a) {
    if (models[a].arc != a) throw Error(ErrorCode::InvalidArgument, "arc models out of order");
    if (!models[a].lagrangian) throw Error(ErrorCode::InvalidArgument, "arc model without Lagrangian");
    if (!(models[a].beta0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "arc model without beta0");
  }
  if (limiters.size() != network.num_vertices())
    throw Error(ErrorCode::InvalidArgument, "problem needs one flux limiter per vertex");
  if (!g) throw Error(ErrorCode::InvalidArgument, "problem without initial datum");
  if (horizon < 0.0) throw Error(ErrorCode::InvalidArgument, "negative horizon");
  const AdmissibilityReport report = check_flux_limiters(network, critical_values(), limiters);
  if (!report.admissible) throw Error(ErrorCode::Inadmissible, "\n" + report.to_string(network));
}

// --- Arc operator --------------------------------------------------------------

namespace {

struct ControlRange {
  double lo;
  double hi;
};

ControlRange control_range(const ArcModel& model, const ArcGrid& grid, double s, double tau) {
  const double lo = std::max((s - grid.length) / tau, -model.beta0);
  const double hi = std::min(s / tau, model.beta0);
  if (lo > hi) throw Error(ErrorCode::EmptyControlInterval, "no admissible control");
  return {lo, hi};
}

// Objective restricted to cell j: (1-t) w_j + t w_{j+1} + tau L(s, a).
struct CellObjective {
  const ArcModel& model;
  const ArcGrid& grid;
  const Eigen::Ref<const Eigen::VectorXd>& w;
  double s;
  double tau;
  Eigen::Index j;
  double s0;
  double s1;

  double interp(double a) const {
    const double y = s - tau * a;
    const double t = std::clamp((y - s0) / (s1 - s0), 0.0, 1.0);
    return (1.0 - t) * w(j) + t * w(j + 1);
  }
  double operator()(double a) const {
    return (interp(a) + tau * model.L(s, a)).as_double();
  }
};

double interp_at(const ArcGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& w, double y) {
  y = std::clamp(y, 0.0, grid.length);
  const Eigen::Index j = grid.cell_of(y);
  const double s0 = grid.node(j), s1 = grid.node(j + 1);
  const double t = std::clamp((y - s0) / (s1 - s0), 0.0, 1.0);
  return (1.0 - t) * w(j) + t * w(j + 1);
}

ArcOperatorResult minimize_cellwise(const ArcModel& model, const ArcGrid& grid,
                                    const Eigen::Ref<const Eigen::VectorXd>& w, double s, double tau,
                                    const ControlRange& range, double tol) {
  const double y_lo = std::max(0.0, s - tau * range.hi);
  const double y_hi = std::min(grid.length, s - tau * range.lo);
  const Eigen::Index j0 = grid.cell_of(y_lo);
  const Eigen::Index j1 = grid.cell_of(y_hi);

  ArcOperatorResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (Eigen::Index j = j0; j <= j1; ++j) {
    const double s0 = grid.node(j), s1 = grid.node(j + 1);
    const double c_lo = std::max(s0, y_lo);
    const double c_hi = std::min(s1, y_hi);
    if (c_lo > c_hi) continue;
    const double a_lo = std::clamp((s - c_hi) / tau, range.lo, range.hi);
    const double a_hi = std::clamp((s - c_lo) / tau, range.lo, range.hi);
    const CellObjective phi{model, grid, w, s, tau, j, s0, s1};

    double a_star, value;
    if (model.is_quadratic()) {
      // d/da [w_j + slope (s - tau a - s_j) + tau (a^2/2 + V)] = tau (a - slope)
      const double slope = (w(j + 1) - w(j)) / (s1 - s0);
      a_star = std::clamp(slope, a_lo, a_hi);
      value = phi(a_star);
    } else {
      const auto m = golden_section_minimize(phi, a_lo, a_hi, tol);
      a_star = m.x;
      value = m.value;
    }
    if (value < best.value) best = {value, a_star};
  }
  return best;
}

ArcOperatorResult minimize_sampled(const ArcModel& model, const ArcGrid& grid,
                                   const Eigen::Ref<const Eigen::VectorXd>& w, double s, double tau,
                                   const ControlRange& range, int samples, double tol) {
  auto phi = [&](double a) { return (interp_at(grid, w, s - tau * a) + tau * model.L(s, a)).as_double(); };
  samples = std::max(samples, 3);
  ArcOperatorResult best{std::numeric_limits<double>::infinity(), range.lo};
  int best_k = 0;
  const double da = (range.hi - range.lo) / (samples - 1);
  for (int k = 0; k < samples; ++k) {
    const double a = k + 1 == samples ? range.hi : range.lo + da * k;
    const double v = phi(a);
    if (v < best.value) {
      best = {v, a};
      best_k = k;
    }
  }
  const double lo = range.lo + da * std::max(0, best_k - 1);
  const double hi = std::min(range.hi, range.lo + da * std::min(samples - 1, best_k + 1));
  const auto refined = golden_section_minimize(phi, lo, hi, tol);
  if (refined.value < best.value) best = {refined.value, refined.x};
  return best;
}

ArcOperatorResult arc_operator_at(const ArcModel& model, const ArcGrid& grid,
                                  const Eigen::Ref<const Eigen::VectorXd>& w, double s, double tau,
                                  const SchemeOptions& options) {
  const ControlRange range = control_range(model, grid, s, tau);
  ArcOperatorResult r = options.strategy == MinimizationStrategy::cellwise
                            ? minimize_cellwise(model, grid, w, s, tau, range, options.golden_tolerance)
                            : minimize_sampled(model, grid, w, s, tau, range, options.control_samples,
                                               options.golden_tolerance);
  if (!std::isfinite(r.value)) {
    std::ostringstream os;
    os << "arc operator produced a non-finite value at s = " << s;
    throw Error(ErrorCode::NonFiniteValue, os.str());
  }
  return r;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HJNET_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += workers) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

ArcOperatorResult apply_arc_operator(const ArcModel& model, const ArcGrid& grid,
                                     const Eigen::Ref<const Eigen::VectorXd>& w, double s, double tau,
                                     const SchemeOptions& options) {
  if (w.size() != grid.num_nodes())
    throw Error(ErrorCode::InvalidArgument, "node vector size does not match the grid");
  if (!(s >= 0.0 && s <= grid.length)) throw Error(ErrorCode::OutOfRange, "s outside the arc");
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  if (!w.allFinite()) throw Error(ErrorCode::NonFiniteValue, "non-finite node values");
  return arc_operator_at(model, grid, w, s, tau, options);
}

VertexUpdate vertex_update(double prev, double limiter, double tau, const std::vector<double>& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "vertex without incident arcs");
  std::size_t k = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i] < candidates[k]) k = i;
  const double flux = prev + limiter * tau;
  if (flux < candidates[k]) return {flux, std::nullopt};
  return {candidates[k], k};
}

// --- SolutionField -------------------------------------------------------------

SolutionField::SolutionField(const Network& network, const Grids& grids)
    : grids_(grids), n_steps_(grids.time.n_steps) {
  endpoints_.reserve(network.num_arcs());
  for (const Arc& a : network.arcs()) endpoints_.emplace_back(a.origin, a.terminus);
}

bool SolutionField::has_level(Eigen::Index n) const {
  return n >= first_ && n < first_ + static_cast<Eigen::Index>(levels_.size());
}

const SolutionField::Level& SolutionField::level(Eigen::Index n) const {
  if (!has_level(n)) throw Error(ErrorCode::OutOfRange, "time level not stored");
  return levels_[static_cast<std::size_t>(n - first_)];
}

SolutionField::Level& SolutionField::level(Eigen::Index n) {
  if (!has_level(n)) throw Error(ErrorCode::OutOfRange, "time level not stored");
  return levels_[static_cast<std::size_t>(n - first_)];
}

double SolutionField::value(std::size_t arc, Eigen::Index i, Eigen::Index n) const {
  const Level& L = level(n);
  const Eigen::Index N = grids_.arcs.at(arc).n_cells;
  if (i == 0) return L.vertex(static_cast<Eigen::Index>(endpoints_[arc].first));
  if (i == N) return L.vertex(static_cast<Eigen::Index>(endpoints_[arc].second));
  return L.interior[arc](i - 1);
}

void SolutionField::arc_values_into(std::size_t arc, Eigen::Index n, Eigen::VectorXd& out) const {
  const Level& L = level(n);
  const Eigen::Index N = grids_.arcs.at(arc).n_cells;
  out.resize(N + 1);
  out(0) = L.vertex(static_cast<Eigen::Index>(endpoints_[arc].first));
  out(N) = L.vertex(static_cast<Eigen::Index>(endpoints_[arc].second));
  if (N > 1) out.segment(1, N - 1) = L.interior[arc];
}

Eigen::VectorXd SolutionField::arc_values(std::size_t arc, Eigen::Index n) const {
  Eigen::VectorXd out;
  arc_values_into(arc, n, out);
  return out;
}

void SolutionField::push_level(Level level) {
  levels_.push_back(std::move(level));
}

void SolutionField::drop_levels_before(Eigen::Index n) {
  while (!levels_.empty() && first_ < n) {
    levels_.pop_front();
    ++first_;
  }
}

// --- Evolution -------------------------------------------------------------------

SolutionField::Level initial_level(const Problem& problem, const Grids& grids) {
  const Network& net = problem.network;
  SolutionField::Level L;
  L.vertex.resize(static_cast<Eigen::Index>(net.num_vertices()));
  for (std::size_t v = 0; v < net.num_vertices(); ++v)
    L.vertex(static_cast<Eigen::Index>(v)) = problem.g(net.vertex(v).coords);
  L.interior.resize(net.num_arcs());
  for (std::size_t a = 0; a < net.num_arcs(); ++a) {
    const ArcGrid& grid = grids.arcs[a];
    Eigen::VectorXd inner(std::max<Eigen::Index>(0, grid.n_cells - 1));
    for (Eigen::Index i = 1; i < grid.n_cells; ++i) inner(i - 1) = problem.g(arc_point(net.arc(a), grid.node(i)));
    L.interior[a] = std::move(inner);
  }
  return L;
}

SolutionField::Level step(const Problem& problem, const Grids& grids, const SolutionField& field,
                          Eigen::Index n, StepRecord* record, const SchemeOptions& options) {
  const Network& net = problem.network;
  const double tau = grids.time.spacing;
  const std::size_t n_arcs = net.num_arcs();

  SolutionField::Level next;
  next.interior.resize(n_arcs);
  // candidates[a] = {origin value, terminus value}; controls likewise.
  std::vector<std::array<ArcOperatorResult, 2>> candidates(n_arcs);
  if (record) {
    record->interior_control.assign(n_arcs, Eigen::VectorXd());
    record->vertex.assign(net.num_vertices(), VertexRecord{});
  }

  parallel_for(n_arcs, resolve_threads(options.threads), [&](std::size_t a) {
    const ArcGrid& grid = grids.arcs[a];
    const ArcModel& model = problem.models[a];
    Eigen::VectorXd w;
    field.arc_values_into(a, n, w);
    const Eigen::Index N = grid.n_cells;
    Eigen::VectorXd inner(std::max<Eigen::Index>(0, N - 1));
    Eigen::VectorXd ctrl(inner.size());
    for (Eigen::Index i = 1; i < N; ++i) {
      try {
        const ArcOperatorResult r = arc_operator_at(model, grid, w, grid.node(i), tau, options);
        inner(i - 1) = r.value;
        ctrl(i - 1) = r.control;
      } catch (const Error& e) {
        std::string what = e.what();
        what = what.substr(what.find(": ") + 2);
        std::ostringstream os;
        os << what << " (arc '" << net.arc(a).id << "', node " << i << ", level " << n + 1 << ")";
        throw Error(e.code(), os.str());
      }
    }
    candidates[a][0] = arc_operator_at(model, grid, w, 0.0, tau, options);
    candidates[a][1] = arc_operator_at(model, grid, w, grid.length, tau, options);
    next.interior[a] = std::move(inner);
    if (record) record->interior_control[a] = std::move(ctrl);
  });

  const auto& prev = field.level(n);
  next.vertex.resize(static_cast<Eigen::Index>(net.num_vertices()));
  std::vector<double> values;
  for (std::size_t v = 0; v < net.num_vertices(); ++v) {
    const auto& inc = net.incidence(v);
    values.clear();
    for (const Incidence& e : inc) values.push_back(candidates[e.arc][e.at_origin ? 0 : 1].value);
    const VertexUpdate u =
        vertex_update(prev.vertex(static_cast<Eigen::Index>(v)), problem.limiters[v], tau, values);
    next.vertex(static_cast<Eigen::Index>(v)) = u.value;
    if (record) {
      VertexRecord& r = record->vertex[v];
      if (u.arc) {
        const Incidence& e = inc[*u.arc];
        r.branch = VertexBranch::arc;
        r.arc = e.arc;
        r.control = candidates[e.arc][e.at_origin ? 0 : 1].control;
      } else {
        r.branch = VertexBranch::flux_limiter;
        r.arc.reset();
        r.control = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return next;
}

Solution solve(const Problem& problem, const StepPair& pair, const SchemeOptions& options) {
  return solve(problem, make_grids(problem.network, problem.horizon, pair), options);
}

Solution solve(const Problem& problem, const Grids& grids, const SchemeOptions& options) {
  problem.validate();
  Solution sol;
  sol.grids = grids;
  sol.field = SolutionField(problem.network, grids);
  const auto start = std::chrono::steady_clock::now();
  sol.field.push_level(initial_level(problem, grids));
  const Eigen::Index N = grids.time.n_steps;
  if (options.keep_records) sol.records.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index n = 0; n < N; ++n) {
    StepRecord rec;
    SolutionField::Level next = step(problem, grids, sol.field, n, options.keep_records ? &rec : nullptr, options);
    sol.field.push_level(std::move(next));
    if (options.keep_records) sol.records.push_back(std::move(rec));
    if (!options.keep_history) sol.field.drop_levels_before(n + 1);
  }
  sol.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

Eigen::MatrixXd solve_on_arc(const Problem& problem, const SolutionField& field, std::size_t arc,
                             const SchemeOptions& options) {
  const Grids& grids = field.grids();
  const ArcGrid& grid = grids.arcs.at(arc);
  const ArcModel& model = problem.models.at(arc);
  const Arc& geometry = problem.network.arc(arc);
  const Eigen::Index N = grid.n_cells;
  const Eigen::Index NT = grids.time.n_steps;
  const double tau = grids.time.spacing;
  const auto [origin, terminus] = field.endpoints()[arc];

  Eigen::MatrixXd w(N + 1, NT + 1);
  for (Eigen::Index i = 0; i <= N; ++i) w(i, 0) = problem.g(arc_point(geometry, grid.node(i)));
  for (Eigen::Index n = 1; n <= NT; ++n) {
    const Eigen::VectorXd prev = w.col(n - 1);
    w(0, n) = field.vertex_value(origin, n);
    w(N, n) = field.vertex_value(terminus, n);
    for (Eigen::Index i = 1; i < N; ++i) w(i, n) = arc_operator_at(model, grid, prev, grid.node(i), tau, options).value;
  }
  return w;
}

// --- Trajectories --------------------------------------------------------------------

const char* to_string(TrajectoryEnd end) {
  switch (end) {
    case TrajectoryEnd::endpoint_reached: return "endpoint_reached";
    case TrajectoryEnd::flux_branch: return "flux_branch";
    case TrajectoryEnd::time_zero: return "time_zero";
  }
  return "unknown";
}

DiscreteTrajectory reconstruct_trajectory(const Problem& problem, const Solution& solution,
                                          std::size_t vertex, Eigen::Index n0) {
  if (n0 < 1 || n0 > solution.grids.time.n_steps)
    throw Error(ErrorCode::OutOfRange, "trajectory start level outside (0, N_T]");
  if (solution.records.size() < static_cast<std::size_t>(n0))
    throw Error(ErrorCode::InvalidArgument, "solution was computed without step records");
  const VertexRecord& start = solution.record(n0).vertex.at(vertex);
  if (start.branch != VertexBranch::arc) {
    std::ostringstream os;
    os << "vertex '" << problem.network.vertex(vertex).id << "' at level " << n0 << " took the flux-limiter branch";
    throw Error(ErrorCode::NotArcBranch, os.str());
  }

  const std::size_t arc = *start.arc;
  const ArcGrid& grid = solution.grids.arcs[arc];
  const ArcModel& model = problem.models[arc];
  const Arc& geometry = problem.network.arc(arc);
  const double tau = solution.grids.time.spacing;
  const Eigen::Index N = grid.n_cells;

  DiscreteTrajectory traj;
  traj.arc = arc;
  traj.start_vertex = vertex;

  Eigen::Index node = geometry.origin == vertex ? 0 : N;
  double control = start.control;
  std::vector<Eigen::Index> levels{n0};
  std::vector<double> positions{grid.node(node)};
  std::vector<double> controls;
  Eigen::VectorXd w;

  for (Eigen::Index n = n0; n > 0; --n) {
    const double s = grid.node(node);
    const double foot = std::clamp(s - tau * control, 0.0, grid.length);
    const Eigen::Index j = grid.cell_of(foot);
    solution.field.arc_values_into(arc, n - 1, w);
    Eigen::Index next;
    if (foot == grid.node(j)) next = j;
    else if (foot == grid.node(j + 1)) next = j + 1;
    else next = w(j) <= w(j + 1) ? j : j + 1;

    const double s_prev = grid.node(next);
    traj.action += tau * model.L(s, (s - s_prev) / tau).as_double();
    controls.push_back(control);
    levels.push_back(n - 1);
    positions.push_back(s_prev);
    node = next;

    if (n - 1 == 0) {
      traj.end = TrajectoryEnd::time_zero;
      break;
    }
    if (node == 0 || node == N) {
      const std::size_t x = node == 0 ? geometry.origin : geometry.terminus;
      const VertexRecord& rec = solution.record(n - 1).vertex[x];
      traj.end = rec.branch == VertexBranch::flux_limiter ? TrajectoryEnd::flux_branch
                                                          : TrajectoryEnd::endpoint_reached;
      break;
    }
    control = solution.record(n - 1).interior_control[arc](node - 1);
  }

  std::reverse(levels.begin(), levels.end());
  std::reverse(positions.begin(), positions.end());
  std::reverse(controls.begin(), controls.end());
  traj.levels = std::move(levels);
  traj.positions = std::move(positions);
  traj.controls = std::move(controls);
  return traj;
}

}  // namespace hjnet

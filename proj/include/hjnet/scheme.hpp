#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hjnet/core.hpp"
#include "hjnet/grid.hpp"
#include "hjnet/hamiltonian.hpp"
#include "hjnet/network.hpp"

namespace hjnet {

struct Problem {
  Network network;
  std::vector<ArcModel> models;   // one per arc, in arc order
  std::vector<double> limiters;   // one per vertex
  InitialDatum g;
  double horizon = 0.0;

  /// Checks sizes, model/arc correspondence and limiter admissibility.
  /// Throws Inadmissible with the full report when a limiter is too large.
  void validate() const;
  std::vector<double> critical_values() const;
};

enum class MinimizationStrategy {
  /// Enumerate the cells crossed by the foot point; minimize the convex
  /// restriction on each (closed form for quadratic costs, golden section
  /// otherwise).
  cellwise,
  /// Uniform control sampling followed by one golden-section refinement.
  sampled,
};

struct SchemeOptions {
  MinimizationStrategy strategy = MinimizationStrategy::cellwise;
  int control_samples = 401;
  double golden_tolerance = 1e-8;
  bool keep_history = true;
  bool keep_records = true;
  /// Worker threads for per-arc sweeps; 0 reads HJNET_THREADS (default 1).
  int threads = 0;
};

struct ArcOperatorResult {
  double value = 0.0;
  double control = 0.0;
};

/// S_gamma[w](s): min over admissible controls of I[w](s - tau a) + tau L(s, a).
ArcOperatorResult apply_arc_operator(const ArcModel& model, const ArcGrid& grid,
                                     const Eigen::Ref<const Eigen::VectorXd>& w, double s, double tau,
                                     const SchemeOptions& options = {});

struct VertexUpdate {
  double value = 0.0;
  std::optional<std::size_t> arc;  // winning candidate; empty for the flux-limiter branch
};

/// min(prev + c tau, min candidates). The flux branch wins only on strict
/// inequality; among arc candidates the first minimum wins.
VertexUpdate vertex_update(double prev, double limiter, double tau, const std::vector<double>& candidates);

/// Grid values on all levels. Vertex values live in one array per level and
/// are shared by every arc touching the vertex; arcs store interior nodes only.
class SolutionField {
 public:
  struct Level {
    Eigen::VectorXd vertex;
    std::vector<Eigen::VectorXd> interior;
  };

  SolutionField() = default;
  SolutionField(const Network& network, const Grids& grids);

  Eigen::Index num_steps() const { return n_steps_; }
  bool has_level(Eigen::Index n) const;
  Eigen::Index first_level() const { return first_; }
  const Level& level(Eigen::Index n) const;
  Level& level(Eigen::Index n);

  double vertex_value(std::size_t vertex, Eigen::Index n) const { return level(n).vertex(static_cast<Eigen::Index>(vertex)); }
  double value(std::size_t arc, Eigen::Index i, Eigen::Index n) const;
  /// Node values of an arc at level n, endpoints taken from the vertex array.
  Eigen::VectorXd arc_values(std::size_t arc, Eigen::Index n) const;
  void arc_values_into(std::size_t arc, Eigen::Index n, Eigen::VectorXd& out) const;

  const Grids& grids() const { return grids_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& endpoints() const { return endpoints_; }

  void push_level(Level level);
  void drop_levels_before(Eigen::Index n);

 private:
  Grids grids_;
  std::vector<std::pair<std::size_t, std::size_t>> endpoints_;  // (origin, terminus) per arc
  std::deque<Level> levels_;
  Eigen::Index first_ = 0;
  Eigen::Index n_steps_ = 0;
};

enum class VertexBranch { arc, flux_limiter };

struct VertexRecord {
  VertexBranch branch = VertexBranch::arc;
  std::optional<std::size_t> arc;
  double control = 0.0;  // minimizer of the winning arc candidate
};

/// Minimizers that produced one level.
struct StepRecord {
  std::vector<Eigen::VectorXd> interior_control;  // per arc, interior nodes
  std::vector<VertexRecord> vertex;
};

struct Solution {
  Grids grids;
  SolutionField field;
  std::vector<StepRecord> records;  // records[n - 1] produced level n
  double runtime_seconds = 0.0;

  const StepRecord& record(Eigen::Index n) const { return records.at(static_cast<std::size_t>(n - 1)); }
};

SolutionField::Level initial_level(const Problem& problem, const Grids& grids);

/// One explicit step: level n -> level n + 1 from a frozen copy of level n.
SolutionField::Level step(const Problem& problem, const Grids& grids, const SolutionField& field,
                          Eigen::Index n, StepRecord* record, const SchemeOptions& options = {});

Solution solve(const Problem& problem, const StepPair& pair, const SchemeOptions& options = {});
Solution solve(const Problem& problem, const Grids& grids, const SchemeOptions& options = {});

/// Evolves one arc alone with Dirichlet data taken from `field` at both
/// endpoints. Returns node values, one column per time level.
Eigen::MatrixXd solve_on_arc(const Problem& problem, const SolutionField& field, std::size_t arc,
                             const SchemeOptions& options = {});

enum class TrajectoryEnd { endpoint_reached, flux_branch, time_zero };

struct DiscreteTrajectory {
  std::size_t arc = 0;
  std::size_t start_vertex = 0;
  std::vector<Eigen::Index> levels;  // increasing, ends at the start level
  std::vector<double> positions;     // grid nodes in [0, |gamma|], aligned with levels
  std::vector<double> controls;      // controls[k] was used from levels[k] to levels[k+1]
  double action = 0.0;               // tau * sum L(xi(t_i), (xi(t_i) - xi(t_{i-1})) / tau)
  TrajectoryEnd end = TrajectoryEnd::time_zero;
};

/// Backward optimal trajectory from vertex x0 at level n0. Requires the
/// vertex value at n0 to come from an arc candidate (NotArcBranch otherwise).
DiscreteTrajectory reconstruct_trajectory(const Problem& problem, const Solution& solution,
                                          std::size_t vertex, Eigen::Index n0);

const char* to_string(TrajectoryEnd end);

}  // namespace hjnet

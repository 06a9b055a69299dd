#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hjnet/grid.hpp"
#include "hjnet/network.hpp"
#include "hjnet/scheme.hpp"

namespace hjnet {

/// Reference solution evaluated at arc parameter s of arc `arc` and time t.
using ReferenceEvaluator = std::function<double(std::size_t arc, double s, double t)>;

struct ErrorReport {
  double E_inf = 0.0;
  double E_1 = 0.0;
  double dx = 0.0;
  double dt = 0.0;
  double runtime_seconds = 0.0;
  double courant = 0.0;
};

/// Sup and dx-weighted 1-norm deviation at the last stored level, with every
/// vertex counted once. Throws ReferenceUndefined when the reference fails.
ErrorReport error_norms(const SolutionField& field, const ReferenceEvaluator& reference);
ErrorReport error_norms(const SolutionField& field, Eigen::Index level, const ReferenceEvaluator& reference);

/// sqrt(2|c|) d + c t where d is the arc-length distance from x to the
/// nearest vertex. Valid for t >= d / sqrt(2|c|); OutsideValidityWindow otherwise.
double exact_solution_test1(const Network& network, const Point& x, double t, double c);
ReferenceEvaluator exact_reference_test1(const Network& network, double c);

struct DtRule {
  enum class Kind { half_dx, power_rule };
  Kind kind = Kind::half_dx;
  double C = 0.5;
  double p = 0.8;

  static DtRule half_dx() { return {}; }
  static DtRule power(double C = 0.5, double p = 0.8) { return {Kind::power_rule, C, p}; }
  double operator()(double dx) const { return kind == Kind::half_dx ? dx / 2.0 : C * std::pow(dx, p); }
  std::string to_string() const;
};

struct ConvergenceTable {
  std::vector<ErrorReport> rows;
  std::vector<double> rate_inf;  // rate_inf[k] compares rows k-1 and k; NaN for k = 0
  std::vector<double> rate_1;
};

struct StudyOptions {
  SchemeOptions scheme{.keep_history = false, .keep_records = false};
  /// Characteristic speed for the Courant number; the discrete Lipschitz
  /// constant of the final level is used when absent.
  std::optional<double> speed;
  /// Solves per rung; the reported runtime is the fastest one.
  int repeats = 1;
};

/// log2(coarse / fine); NaN when either error is zero or not finite.
double convergence_rate(double coarse, double fine);

ConvergenceTable convergence_study(const Problem& problem, const ReferenceEvaluator& reference,
                                   const std::vector<double>& ladder, const DtRule& rule,
                                   const StudyOptions& options = {});

std::vector<double> halving_ladder(double dx0, std::size_t rungs);

/// Solves once at the fine pair and interpolates the final level per arc.
/// Requires every ladder rung to be at least `min_ratio` times the fine dx.
ReferenceEvaluator reference_from_fine_grid(const Problem& problem, const StepPair& fine,
                                            const std::vector<double>& ladder, double min_ratio = 8.0,
                                            const SchemeOptions& options = {});

/// Max adjacent divided difference of node values.
double discrete_lipschitz(const ArcGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& w);

/// Largest discrete Lipschitz constant over all arcs at level n.
double field_lipschitz(const SolutionField& field, Eigen::Index n);

struct InvariantReport {
  bool finite = true;
  bool equi_lipschitz = true;
  bool time_regularity = true;
  bool vertex_slope = true;
  bool single_valued = true;
  bool control_feasible = true;
  double worst_lipschitz_ratio = 0.0;  // max over levels of Lip / ((1 + t_k) ell0)
  double worst_time_ratio = 0.0;
  std::vector<std::string> messages;

  bool ok() const {
    return finite && equi_lipschitz && time_regularity && vertex_slope && single_valued && control_feasible;
  }
};

/// Checks the discrete stability bounds on a solve with full history.
InvariantReport check_invariants(const Problem& problem, const Solution& solution);

struct TrajectoryCheck {
  std::size_t displacement_violations = 0;  // |xi(t) - xi(t - tau)| > beta0 tau + h
  std::size_t velocity_violations = 0;      // |(xi(t) - xi(t - tau)) / tau - alpha| > h / tau
  bool action_bound = true;
  double action = 0.0;
  double action_limit = 0.0;

  bool ok() const { return displacement_violations == 0 && velocity_violations == 0 && action_bound; }
};

TrajectoryCheck check_trajectory(const Problem& problem, const Solution& solution,
                                 const DiscreteTrajectory& trajectory);

void write_convergence_csv(std::ostream& out, const ConvergenceTable& table);

}  // namespace hjnet

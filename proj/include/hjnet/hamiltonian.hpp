#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hjnet/convex.hpp"
#include "hjnet/core.hpp"
#include "hjnet/network.hpp"

namespace hjnet {

using LagrangianFn = std::function<ExtendedReal(double s, double lambda)>;
using HamiltonianFn = std::function<double(double s, double mu)>;
/// Initial datum g on the network, evaluated at physical coordinates so that
/// it is single-valued at vertices.
using InitialDatum = std::function<double(const Point&)>;

/// One additive term of a potential V(x) >= 0:
///   point term:  weight * |x - center|^2
///   axis term:   weight * (x[axis] - offset)^2
struct PotentialTerm {
  enum class Kind { point, axis };
  Kind kind = Kind::point;
  double weight = 0.0;
  Point center = Point::Zero();
  int axis = 0;
  double offset = 0.0;
};

double evaluate_potential(const std::vector<PotentialTerm>& terms, const Point& x);

enum class CostKind { lagrangian_closed_form, hamiltonian_closed_form };
enum class CostFamily { quadratic_kinetic_plus_potential, expression };

/// Power-law family used by CostFamily::expression:
///   as a Lagrangian:  L(s, l)  = a |l|^p / p + b l + V(gamma(s))
///   as a Hamiltonian: H(s, mu) = a |mu|^p / p + b mu - V(gamma(s))
/// The quadratic family is the case a = 1, p = 2, b = 0.
struct PowerLaw {
  double coefficient = 1.0;
  double exponent = 2.0;
  double drift = 0.0;
};

struct ArcCostSpec {
  CostKind kind = CostKind::lagrangian_closed_form;
  CostFamily family = CostFamily::quadratic_kinetic_plus_potential;
  std::vector<PotentialTerm> potential;
  PowerLaw law;
};

/// Running cost and Hamiltonian of one oriented arc, in the arc-length
/// parameter. `lagrangian` is +infinity for |lambda| > beta0.
struct ArcModel {
  std::size_t arc = 0;
  double length = 0.0;
  LagrangianFn lagrangian;
  HamiltonianFn hamiltonian;
  double beta0 = 0.0;
  double ell0 = 0.0;
  double critical_value = 0.0;
  /// Set when L(s, a) = a^2/2 + V(s) on [-beta0, beta0]; enables the exact
  /// cellwise minimizer in the arc operator.
  std::function<double(double)> quadratic_potential;

  ExtendedReal L(double s, double lambda) const { return lagrangian(s, lambda); }
  double H(double s, double mu) const { return hamiltonian(s, mu); }
  bool is_quadratic() const { return static_cast<bool>(quadratic_potential); }
};

/// Closed-form Lagrangian of a cost description without the effective-domain clamp.
std::function<double(double, double)> closed_form_lagrangian(const Arc& arc, const ArcCostSpec& spec);
/// Closed-form Hamiltonian of a cost description (conjugate of the Lagrangian when the
/// cost is given as a Lagrangian).
HamiltonianFn closed_form_hamiltonian(const Arc& arc, const ArcCostSpec& spec);

// --- Convex-envelope modification ------------------------------------------

struct ModifyOptions {
  double margin = 0.25;
  std::optional<double> beta0;    // override of (1 + margin) * beta
  std::optional<double> mu0;      // override of the scanned extension threshold
  std::optional<double> mu_step;  // absolute momentum step; default 1e-2 * width
  double mu_step_fraction = 1e-2;
  std::size_t s_samples = 33;
  double scan_bound_factor = 1e3;
};

/// Compact-domain Hamiltonian/Lagrangian pair obtained from a superlinear
/// Hamiltonian. H(s, .) is the lower convex envelope of the linearly extended
/// Hamiltonian, tabulated at `s_samples`; values between samples are linear in s.
/// On the momentum interval the envelope coincides with the input, which H
/// then evaluates directly.
struct ModifiedPair {
  HamiltonianFn original;
  std::vector<double> s_samples;
  std::vector<ConvexPiecewiseLinear<double>> slices;
  double beta = 0.0;
  double beta0 = 0.0;
  double mu0 = 0.0;
  Interval momentum_interval;

  double H(double s, double mu) const;
  ExtendedReal L(double s, double lambda) const;
  /// Sampled Lipschitz constant of L on [0, a] x [-beta0, beta0], inflated by 5%.
  double lipschitz_L(std::size_t lambda_samples = 201) const;
};

ModifiedPair modify_hamiltonian(const HamiltonianFn& original, double arc_length,
                                const Interval& momentum_interval, const ModifyOptions& options = {});

// --- Critical values and flux limiters -------------------------------------

struct CriticalValueOptions {
  std::size_t s_samples = 65;
  double mu_bound = 1e3;
};

/// c_gamma = -max_s min_mu H(s, mu): sampled in s, then refined around the
/// best sample by golden-section search.
double arc_critical_value(const HamiltonianFn& H, double arc_length,
                          const CriticalValueOptions& options = {});
double arc_critical_value(const ArcModel& model, const CriticalValueOptions& options = {});

struct VertexAdmissibility {
  std::size_t vertex = 0;
  double limiter = 0.0;
  double bound = 0.0;
  bool admissible = false;
};

struct AdmissibilityReport {
  std::vector<VertexAdmissibility> vertices;
  bool admissible = true;

  std::string to_string(const Network& network) const;
};

/// Relative slack on numerically computed critical values.
inline constexpr double kAdmissibilityTolerance = 1e-9;

/// c_x <= min over incident arcs of c_gamma, at every vertex (up to the
/// admissibility tolerance).
AdmissibilityReport check_flux_limiters(const Network& network,
                                        const std::vector<double>& arc_critical_values,
                                        const std::vector<double>& limiters);

std::vector<double> max_admissible_limiters(const Network& network,
                                            const std::vector<double>& arc_critical_values);

// --- Momentum interval selection -------------------------------------------

struct MomentumSelection {
  double lip_g = 0.0;      // max over arcs of Lip(g o gamma)
  double m0 = 0.0;         // sampled constant max_gamma min{m : H(s, (g o gamma)') <= m}
  double threshold = 0.0;  // max(m0 + 1, max_x |c_x|)
  double mu_star = 0.0;    // smallest admissible half-width
  Interval interval;       // [-mu_star, mu_star] widened by 10%
};

struct MomentumOptions {
  std::size_t s_samples = 65;
  double scan_bound = 1e6;
  double widening = 0.10;
};

/// Lip(g o gamma) by maximal divided differences on `samples` uniform points.
double datum_lipschitz(const Arc& arc, const InitialDatum& g, std::size_t samples);

/// max over arcs of max_s H(s, (g o gamma)'(s)), slopes by finite differences.
double datum_level(const Network& network, const std::vector<HamiltonianFn>& hamiltonians,
                   const InitialDatum& g, std::size_t samples);

MomentumSelection select_momentum_interval(const Network& network,
                                           const std::vector<HamiltonianFn>& hamiltonians,
                                           const InitialDatum& g, const std::vector<double>& limiters,
                                           const MomentumOptions& options = {});

// --- Model construction ----------------------------------------------------

/// Sampled Lipschitz constant of L over [0, length] x [-beta0, beta0] in both
/// arguments, maxed with `datum_lip` and inflated by 5%.
double lagrangian_lipschitz(const LagrangianFn& L, double length, double beta0, double datum_lip,
                            std::size_t s_samples = 65, std::size_t lambda_samples = 65);

/// Closed-form Lagrangian clamped to +infinity outside [-beta0, beta0].
ArcModel make_closed_form_model(const Network& network, std::size_t arc, const ArcCostSpec& spec,
                                double beta0, double datum_lip,
                                const CriticalValueOptions& critical = {});

/// Model whose Lagrangian is the conjugate of the modified Hamiltonian.
ArcModel make_modified_model(const Network& network, std::size_t arc, const ArcCostSpec& spec,
                             const Interval& momentum_interval, double datum_lip,
                             const ModifyOptions& options = {},
                             const CriticalValueOptions& critical = {});

/// Reversed-arc view: H_rev(s, mu) = H(|gamma| - s, -mu).
HamiltonianFn reversed_hamiltonian(const HamiltonianFn& H, double arc_length);

}  // namespace hjnet

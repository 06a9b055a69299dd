#include "hjnet/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "hjnet/golden_section.hpp"

namespace hjnet {

double evaluate_potential(const std::vector<PotentialTerm>& terms, const Point& x) {
  double v = 0.0;
  for (const PotentialTerm& t : terms) {
    if (t.kind == PotentialTerm::Kind::point) {
      v += t.weight * (x - t.center).squaredNorm();
    } else {
      const double d = x(t.axis) - t.offset;
      v += t.weight * d * d;
    }
  }
  return v;
}

namespace {

std::function<double(double)> potential_along(const Arc& arc, const std::vector<PotentialTerm>& terms) {
  if (terms.empty()) return [](double) { return 0.0; };
  return [arc, terms](double s) { return evaluate_potential(terms, arc_point(arc, s)); };
}

double power_term(const PowerLaw& law, double x) {
  const double p = law.exponent;
  return law.coefficient * std::pow(std::abs(x), p) / p;
}

// Conjugate of a |x|^p / p, evaluated at y: |y|^q / (q a^(q-1)).
double conjugate_power_term(const PowerLaw& law, double y) {
  const double q = law.exponent / (law.exponent - 1.0);
  return std::pow(std::abs(y), q) / (q * std::pow(law.coefficient, q - 1.0));
}

PowerLaw effective_law(const ArcCostSpec& spec) {
  if (spec.family == CostFamily::quadratic_kinetic_plus_potential) return PowerLaw{1.0, 2.0, 0.0};
  if (!(spec.law.exponent > 1.0) || !(spec.law.coefficient > 0.0))
    throw Error(ErrorCode::InvalidArgument, "power-law cost needs exponent > 1 and coefficient > 0");
  return spec.law;
}

bool is_plain_quadratic(const PowerLaw& law) {
  return law.coefficient == 1.0 && law.exponent == 2.0 && law.drift == 0.0;
}

std::vector<double> uniform_samples(double a, double b, std::size_t n) {
  n = std::max<std::size_t>(n, 2);
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k)
    s[k] = k + 1 == n ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return s;
}

}  // namespace

std::function<double(double, double)> closed_form_lagrangian(const Arc& arc, const ArcCostSpec& spec) {
  const PowerLaw law = effective_law(spec);
  auto V = potential_along(arc, spec.potential);
  if (spec.kind == CostKind::lagrangian_closed_form) {
    return [law, V](double s, double l) { return power_term(law, l) + law.drift * l + V(s); };
  }
  return [law, V](double s, double l) { return conjugate_power_term(law, l - law.drift) + V(s); };
}

HamiltonianFn closed_form_hamiltonian(const Arc& arc, const ArcCostSpec& spec) {
  const PowerLaw law = effective_law(spec);
  auto V = potential_along(arc, spec.potential);
  if (spec.kind == CostKind::hamiltonian_closed_form) {
    return [law, V](double s, double mu) { return power_term(law, mu) + law.drift * mu - V(s); };
  }
  return [law, V](double s, double mu) { return conjugate_power_term(law, mu - law.drift) - V(s); };
}

HamiltonianFn reversed_hamiltonian(const HamiltonianFn& H, double arc_length) {
  return [H, arc_length](double s, double mu) { return H(arc_length - s, -mu); };
}

// --- ModifiedPair ------------------------------------------------------------

namespace {

// Locate s among the samples: index k and weight w with s = (1-w) s_k + w s_{k+1}.
std::pair<std::size_t, double> locate(const std::vector<double>& samples, double s) {
  if (samples.size() == 1) return {0, 0.0};
  if (s <= samples.front()) return {0, 0.0};
  if (s >= samples.back()) return {samples.size() - 2, 1.0};
  const auto it = std::upper_bound(samples.begin(), samples.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - samples.begin()) - 1;
  return {k, (s - samples[k]) / (samples[k + 1] - samples[k])};
}

}  // namespace

double ModifiedPair::H(double s, double mu) const {
  if (original && momentum_interval.contains(mu)) return original(s, mu);
  const auto [k, w] = locate(s_samples, s);
  if (w == 0.0) return slices[k](mu);
  if (w == 1.0) return slices[k + 1](mu);
  return (1.0 - w) * slices[k](mu) + w * slices[k + 1](mu);
}

ExtendedReal ModifiedPair::L(double s, double lambda) const {
  if (std::abs(lambda) > beta0) return ExtendedReal::infinity();
  const auto [k, w] = locate(s_samples, s);
  if (w == 0.0) return slices[k].conjugate(lambda);
  if (w == 1.0) return slices[k + 1].conjugate(lambda);
  return (1.0 - w) * slices[k].conjugate(lambda) + w * slices[k + 1].conjugate(lambda);
}

double ModifiedPair::lipschitz_L(std::size_t lambda_samples) const {
  // In lambda, L(s_k, .) is piecewise linear with slopes equal to the
  // breakpoints of H(s_k, .), so its Lipschitz constant is their max modulus.
  double ell_lambda = 0.0;
  for (const auto& slice : slices)
    ell_lambda = std::max(ell_lambda, slice.breakpoints().cwiseAbs().maxCoeff());

  // In s, L is linear between samples; the difference of two piecewise-linear
  // functions of lambda peaks at a breakpoint of either, or at +-beta0.
  double ell_s = 0.0;
  for (std::size_t k = 0; k + 1 < slices.size(); ++k) {
    std::vector<double> lambdas = uniform_samples(-beta0, beta0, lambda_samples);
    for (const auto* slice : {&slices[k], &slices[k + 1]}) {
      const auto& x = slice->breakpoints();
      const auto& y = slice->values();
      for (Eigen::Index j = 1; j < x.size(); ++j) {
        const double slope = (y(j) - y(j - 1)) / (x(j) - x(j - 1));
        if (std::abs(slope) <= beta0) lambdas.push_back(slope);
      }
    }
    const double ds = s_samples[k + 1] - s_samples[k];
    for (double l : lambdas) {
      const double d = slices[k + 1].conjugate(l).value() - slices[k].conjugate(l).value();
      ell_s = std::max(ell_s, std::abs(d) / ds);
    }
  }
  return 1.05 * std::max(ell_lambda, ell_s);
}

ModifiedPair modify_hamiltonian(const HamiltonianFn& original, double arc_length,
                                const Interval& momentum_interval, const ModifyOptions& options) {
  if (!(momentum_interval.hi > momentum_interval.lo))
    throw Error(ErrorCode::InvalidArgument, "momentum interval must have positive width");
  if (!(arc_length > 0.0)) throw Error(ErrorCode::InvalidArgument, "arc length must be positive");

  ModifiedPair pair;
  pair.momentum_interval = momentum_interval;
  pair.original = original;
  pair.s_samples = uniform_samples(0.0, arc_length, options.s_samples);

  // Lipschitz constant of H in mu over the widened interval.
  const Interval widened = momentum_interval.widened(options.margin);
  const double beta_step = options.mu_step.value_or(options.mu_step_fraction * widened.width());
  const Eigen::Index nb = std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::ceil(widened.width() / beta_step)));
  double beta = 0.0;
  for (double s : pair.s_samples) {
    double prev = original(s, widened.lo);
    for (Eigen::Index i = 1; i <= nb; ++i) {
      const double mu = i == nb ? widened.hi : widened.lo + widened.width() * static_cast<double>(i) / nb;
      const double mu_prev = widened.lo + widened.width() * static_cast<double>(i - 1) / nb;
      const double cur = original(s, mu);
      beta = std::max(beta, std::abs(cur - prev) / (mu - mu_prev));
      prev = cur;
    }
  }
  pair.beta = beta;
  pair.beta0 = options.beta0.value_or((1.0 + options.margin) * beta);
  if (!(pair.beta0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta0 must be positive");

  const double inner = std::max(std::abs(momentum_interval.lo), std::abs(momentum_interval.hi));
  if (options.mu0) {
    if (!(*options.mu0 > inner))
      throw Error(ErrorCode::InvalidArgument, "mu0 must lie outside the momentum interval");
    pair.mu0 = *options.mu0;
  } else {
    // Growth test at +-mu: one-sided slopes outward exceed beta0 for every s.
    auto grows = [&](double mu) {
      const double h = 1e-6 * std::max(1.0, mu);
      for (double s : pair.s_samples) {
        if (!((original(s, mu + h) - original(s, mu)) / h > pair.beta0)) return false;
        if (!((original(s, -mu - h) - original(s, -mu)) / h > pair.beta0)) return false;
      }
      return true;
    };
    const double bound = options.scan_bound_factor * std::max(1.0, inner);
    double lo = inner;
    double hi = std::max(inner, 1e-3) * 1.01 + 1e-3;
    while (!grows(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > bound) {
        std::ostringstream os;
        os << "no extension threshold mu0 <= " << bound << " with outward slope > beta0 = " << pair.beta0;
        throw Error(ErrorCode::SuperlinearityScanFailed, os.str());
      }
    }
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (grows(mid)) hi = mid; else lo = mid;
    }
    pair.mu0 = hi;
  }

  const double step = options.mu_step.value_or(options.mu_step_fraction * 2.0 * pair.mu0);
  const Eigen::Index n = std::max<Eigen::Index>(2, static_cast<Eigen::Index>(std::ceil(2.0 * pair.mu0 / step - 1e-9)));
  Eigen::VectorXd mu(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i)
    mu(i) = i == n ? pair.mu0 : -pair.mu0 + 2.0 * pair.mu0 * static_cast<double>(i) / static_cast<double>(n);

  pair.slices.reserve(pair.s_samples.size());
  for (double s : pair.s_samples) {
    Eigen::VectorXd h0(n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) h0(i) = original(s, mu(i));
    const double scale = 1.0 + h0.cwiseAbs().maxCoeff();
    if (!is_midpoint_convex(h0, 1e-9 * scale)) {
      std::ostringstream os;
      os << "H(s = " << s << ", .) fails midpoint convexity on [-mu0, mu0]";
      throw Error(ErrorCode::NonConvexSlice, os.str());
    }
    const auto hull = lower_convex_envelope(mu, h0);
    const auto& x = hull.breakpoints();
    const auto& y = hull.values();
    // The linear tails of slope +-beta0 cut the hull where its slope leaves
    // [-beta0, beta0].
    Eigen::Index first = 0, last = x.size() - 1;
    for (Eigen::Index k = 0; k + 1 < x.size(); ++k) {
      if ((y(k + 1) - y(k)) / (x(k + 1) - x(k)) > pair.beta0) {
        last = k;
        break;
      }
    }
    for (Eigen::Index k = last; k > 0; --k) {
      if ((y(k) - y(k - 1)) / (x(k) - x(k - 1)) < -pair.beta0) {
        first = k;
        break;
      }
    }
    const Eigen::Index m = last - first + 1;
    pair.slices.emplace_back(Eigen::VectorXd(x.segment(first, m)), Eigen::VectorXd(y.segment(first, m)),
                             -pair.beta0, pair.beta0);
  }
  return pair;
}

// --- Critical values ---------------------------------------------------------

double arc_critical_value(const HamiltonianFn& H, double arc_length, const CriticalValueOptions& options) {
  const double R = options.mu_bound;
  auto min_over_mu = [&](double s) {
    return golden_section_minimize([&](double mu) { return H(s, mu); }, -R, R, 1e-10).value;
  };
  const std::vector<double> s = uniform_samples(0.0, arc_length, options.s_samples);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double v = min_over_mu(s[k]);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  const double a = s[best == 0 ? 0 : best - 1];
  const double b = s[std::min(best + 1, s.size() - 1)];
  const auto refined = golden_section_minimize([&](double x) { return -min_over_mu(x); }, a, b, 1e-11);
  return -std::max(best_value, -refined.value);
}

double arc_critical_value(const ArcModel& model, const CriticalValueOptions& options) {
  return arc_critical_value(model.hamiltonian, model.length, options);
}

std::string AdmissibilityReport::to_string(const Network& network) const {
  std::ostringstream os;
  os << "flux limiter admissibility: " << (admissible ? "PASS" : "FAIL") << '\n';
  for (const auto& v : vertices) {
    os << "  " << network.vertex(v.vertex).id << ": c_x = " << v.limiter << ", bound = " << v.bound
       << (v.admissible ? "  ok" : "  INADMISSIBLE") << '\n';
  }
  return os.str();
}

std::vector<double> max_admissible_limiters(const Network& network,
                                            const std::vector<double>& arc_critical_values) {
  if (arc_critical_values.size() != network.num_arcs())
    throw Error(ErrorCode::InvalidArgument, "one critical value per arc required");
  std::vector<double> c(network.num_vertices(), std::numeric_limits<double>::infinity());
  for (std::size_t v = 0; v < network.num_vertices(); ++v)
    for (const Incidence& inc : network.incidence(v)) c[v] = std::min(c[v], arc_critical_values[inc.arc]);
  return c;
}

AdmissibilityReport check_flux_limiters(const Network& network,
                                        const std::vector<double>& arc_critical_values,
                                        const std::vector<double>& limiters) {
  if (limiters.size() != network.num_vertices())
    throw Error(ErrorCode::InvalidArgument, "one limiter per vertex required");
  const std::vector<double> bound = max_admissible_limiters(network, arc_critical_values);
  AdmissibilityReport report;
  for (std::size_t v = 0; v < network.num_vertices(); ++v) {
    const bool ok = limiters[v] <= bound[v] + kAdmissibilityTolerance * std::max(1.0, std::abs(bound[v]));
    report.vertices.push_back({v, limiters[v], bound[v], ok});
    report.admissible = report.admissible && ok;
  }
  return report;
}

// --- Momentum interval -------------------------------------------------------

double datum_lipschitz(const Arc& arc, const InitialDatum& g, std::size_t samples) {
  const std::vector<double> s = uniform_samples(0.0, arc.length, samples);
  double lip = 0.0;
  double prev = g(arc_point(arc, s[0]));
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double cur = g(arc_point(arc, s[k]));
    lip = std::max(lip, std::abs(cur - prev) / (s[k] - s[k - 1]));
    prev = cur;
  }
  return lip;
}

double datum_level(const Network& network, const std::vector<HamiltonianFn>& hamiltonians,
                   const InitialDatum& g, std::size_t samples) {
  double level = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < network.num_arcs(); ++a) {
    const Arc& arc = network.arc(a);
    const std::vector<double> s = uniform_samples(0.0, arc.length, samples);
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const double slope = (g(arc_point(arc, s[k + 1])) - g(arc_point(arc, s[k]))) / (s[k + 1] - s[k]);
      level = std::max({level, hamiltonians[a](s[k], slope), hamiltonians[a](s[k + 1], slope)});
    }
  }
  return level;
}

MomentumSelection select_momentum_interval(const Network& network,
                                           const std::vector<HamiltonianFn>& hamiltonians,
                                           const InitialDatum& g, const std::vector<double>& limiters,
                                           const MomentumOptions& options) {
  if (hamiltonians.size() != network.num_arcs())
    throw Error(ErrorCode::InvalidArgument, "one Hamiltonian per arc required");
  MomentumSelection sel;
  for (const Arc& arc : network.arcs()) sel.lip_g = std::max(sel.lip_g, datum_lipschitz(arc, g, options.s_samples));
  sel.m0 = datum_level(network, hamiltonians, g, options.s_samples);
  double cmax = 0.0;
  for (double c : limiters) cmax = std::max(cmax, std::abs(c));
  sel.threshold = std::max(sel.m0 + 1.0, cmax);

  std::vector<std::vector<double>> s_grid;
  for (const Arc& arc : network.arcs()) s_grid.push_back(uniform_samples(0.0, arc.length, options.s_samples));

  // True when every |mu'| >= mu lies outside the sublevel set {H <= threshold}.
  auto outside = [&](double mu) {
    if (!(mu > sel.lip_g)) return false;
    const double h = 1e-9 * std::max(1.0, mu);
    for (std::size_t a = 0; a < hamiltonians.size(); ++a) {
      for (double s : s_grid[a]) {
        for (double sign : {1.0, -1.0}) {
          const double here = hamiltonians[a](s, sign * mu);
          if (!(here > sel.threshold)) return false;
          if (hamiltonians[a](s, sign * (mu + h)) < here) return false;
        }
      }
    }
    return true;
  };
  double lo = sel.lip_g;
  double hi = std::max(2.0 * sel.lip_g, 1.0);
  while (!outside(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > options.scan_bound)
      throw Error(ErrorCode::ScanFailed, "no momentum interval found within the scan bound");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (outside(mid)) hi = mid; else lo = mid;
  }
  sel.mu_star = hi;
  const double half = hi * (1.0 + options.widening);
  sel.interval = {-half, half};
  return sel;
}

// --- Models --------------------------------------------------------------------

double lagrangian_lipschitz(const LagrangianFn& L, double length, double beta0, double datum_lip,
                            std::size_t s_samples, std::size_t lambda_samples) {
  const std::vector<double> s = uniform_samples(0.0, length, s_samples);
  const std::vector<double> l = uniform_samples(-beta0, beta0, lambda_samples);
  Eigen::MatrixXd table(s.size(), l.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < l.size(); ++j) table(i, j) = L(s[i], l[j]).value();
  double lip = datum_lip;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < l.size(); ++j) {
      if (i + 1 < s.size()) lip = std::max(lip, std::abs(table(i + 1, j) - table(i, j)) / (s[i + 1] - s[i]));
      if (j + 1 < l.size()) lip = std::max(lip, std::abs(table(i, j + 1) - table(i, j)) / (l[j + 1] - l[j]));
    }
  return 1.05 * lip;
}

ArcModel make_closed_form_model(const Network& network, std::size_t arc_index, const ArcCostSpec& spec,
                                double beta0, double datum_lip, const CriticalValueOptions& critical) {
  if (!(beta0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta0 must be positive");
  const Arc& arc = network.arc(arc_index);
  ArcModel model;
  model.arc = arc_index;
  model.length = arc.length;
  model.beta0 = beta0;
  auto raw = closed_form_lagrangian(arc, spec);
  model.lagrangian = [raw, beta0](double s, double l) -> ExtendedReal {
    if (std::abs(l) > beta0) return ExtendedReal::infinity();
    return ExtendedReal(raw(s, l));
  };
  model.hamiltonian = closed_form_hamiltonian(arc, spec);
  if (is_plain_quadratic(effective_law(spec)))
    model.quadratic_potential = potential_along(arc, spec.potential);
  model.critical_value = arc_critical_value(model.hamiltonian, arc.length, critical);
  const std::size_t ns = std::max<std::size_t>(critical.s_samples, 65);
  model.ell0 = lagrangian_lipschitz(model.lagrangian, arc.length, beta0, datum_lip, ns, 129);
  return model;
}

ArcModel make_modified_model(const Network& network, std::size_t arc_index, const ArcCostSpec& spec,
                             const Interval& momentum_interval, double datum_lip,
                             const ModifyOptions& options, const CriticalValueOptions& critical) {
  const Arc& arc = network.arc(arc_index);
  const HamiltonianFn original = closed_form_hamiltonian(arc, spec);
  auto pair = std::make_shared<const ModifiedPair>(
      modify_hamiltonian(original, arc.length, momentum_interval, options));
  ArcModel model;
  model.arc = arc_index;
  model.length = arc.length;
  model.beta0 = pair->beta0;
  model.lagrangian = [pair](double s, double l) { return pair->L(s, l); };
  model.hamiltonian = [pair](double s, double mu) { return pair->H(s, mu); };
  model.critical_value = arc_critical_value(original, arc.length, critical);
  model.ell0 = std::max(pair->lipschitz_L(), 1.05 * datum_lip);
  return model;
}

}  // namespace hjnet

#pragma once

#include <cmath>

namespace hjnet {

template <typename Scalar>
struct ScalarMinimum {
  Scalar x;
  Scalar value;
};

/// Golden-section search for a unimodal function on [a, b]. Both interval
/// endpoints are evaluated as candidates, so a minimum on the boundary is
/// returned exactly.
template <typename Scalar, typename F>
ScalarMinimum<Scalar> golden_section_minimize(F&& f, Scalar a, Scalar b, Scalar tol,
                                              int max_iterations = 200) {
  ScalarMinimum<Scalar> best{a, f(a)};
  if (!(b > a)) return best;
  const Scalar fb = f(b);
  if (fb < best.value) best = {b, fb};

  const Scalar invphi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar lo = a, hi = b;
  Scalar c = hi - invphi * (hi - lo);
  Scalar d = lo + invphi * (hi - lo);
  Scalar fc = f(c), fd = f(d);
  for (int it = 0; it < max_iterations && (hi - lo) > tol; ++it) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  if (fc < best.value) best = {c, fc};
  if (fd < best.value) best = {d, fd};
  return best;
}

}  // namespace hjnet

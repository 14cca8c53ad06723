#pragma once

// Globally adaptive Gauss-Kronrod 10/21 integration with infinite-range
// mapping, plus a nested driver for integrals of the shape
//   int_lo^hi dx int_{-inf}^x dy f(x, y)
// whose inner integrand decays like (x - y)^-4.

#include <functional>
#include <vector>

namespace sedlab {

struct QuadratureSpec {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  // Inner truncation depth for integrate_double_tail, in units of the inner
  // variable. Rounded up to whole blocks.
  double tail_cut = 16.0 * 6.283185307179586;
  // Below this |x - y| callers switch to series forms. Not used by the engine
  // itself; carried here so a single spec describes one computation.
  double diag_guard = 1e-3;
  int max_subdivisions = 4000;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
};

// Adaptive integral over [lo, hi]. Either end may be infinite; infinite ranges
// are mapped to a finite box with x = c + tan(theta). Throws ConvergenceError
// (carrying the partial value) when max_subdivisions is exhausted.
QuadResult integrate_1d(const std::function<double(double)>& f, double lo, double hi,
                        const QuadratureSpec& spec);

// Same engine on a finite range pre-split at the given increasing break
// points; one error budget for the whole range.
QuadResult integrate_points(const std::function<double(double)>& f, const std::vector<double>& points,
                            const QuadratureSpec& spec);

// One Gauss-Kronrod 21-point panel on a finite interval.
QuadResult gauss_kronrod_21(const std::function<double(double)>& f, double lo, double hi);

struct TailOptions {
  // Block length of the inner variable. For integrands periodic in y apart
  // from the quartic decay (orbit integrals), use the period so that the
  // oscillating parts cancel within each block. 0 means tail_cut / 16.
  double block = 0.0;
  // Minimum decay exponent accepted when checking block contributions.
  double min_decay_exponent = 3.5;
  // Relative tolerance for the inner integrals (the outer one uses spec.rel_tol).
  double inner_rel_tol = 1e-11;
};

// int_{outer_lo}^{outer_hi} dx int_{-inf}^x dy f(x, y). The inner range is
// split into blocks [x - (n+1) w, x - n w]; blocks beyond tail_cut are summed
// analytically assuming contributions C / (n + 1/2)^4 + D / (n + 1/2)^5, with
// C and D matched to the last two computed blocks. Throws ConvergenceError if the measured decay of
// the block sums is slower than min_decay_exponent.
QuadResult integrate_double_tail(const std::function<double(double, double)>& f, double outer_lo,
                                 double outer_hi, const QuadratureSpec& spec,
                                 const TailOptions& options = {});

// Sum_{n >= m} (n + 1/2)^-p, p >= 2.
double power_tail_sum(int m, int p);
double quartic_tail_sum(int m);

}  // namespace sedlab

#include "sedlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "sedlab/error.hpp"

namespace sedlab {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

// Kronrod abscissae; odd indices are the 10-point Gauss nodes.
constexpr double xgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr double wgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double wg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

// Neumaier compensated sum.
struct CompensatedSum {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

struct Panel {
  double lo, hi, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

QuadResult adaptive(const std::function<double(double)>& f, const std::vector<double>& points,
                    const QuadratureSpec& spec) {
  std::priority_queue<Panel> heap;
  long evals = 0;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const QuadResult first = gauss_kronrod_21(f, points[i], points[i + 1]);
    evals += first.evaluations;
    heap.push({points[i], points[i + 1], first.value, first.error});
    total += first.value;
    err += first.error;
  }
  int subdivisions = 0;
  auto done = [&] { return err <= std::max(spec.abs_tol, spec.rel_tol * std::fabs(total)); };
  while (!done()) {
    if (subdivisions >= spec.max_subdivisions) {
      throw ConvergenceError("quadrature: subdivision limit " + std::to_string(spec.max_subdivisions) +
                                 " reached, error estimate " + std::to_string(err),
                             total);
    }
    const Panel p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.lo + p.hi);
    if (!(mid > p.lo && mid < p.hi)) {
      // Interval at machine resolution: accept what we have.
      heap.push({p.lo, p.hi, p.value, 0.0});
      err -= p.error;
      continue;
    }
    const QuadResult l = gauss_kronrod_21(f, p.lo, mid);
    const QuadResult r = gauss_kronrod_21(f, mid, p.hi);
    evals += l.evaluations + r.evaluations;
    heap.push({p.lo, mid, l.value, l.error});
    heap.push({mid, p.hi, r.value, r.error});
    total += l.value + r.value - p.value;
    err += l.error + r.error - p.error;
    ++subdivisions;
  }
  // Re-add in a fixed order for a result independent of heap history.
  std::vector<Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& a, const Panel& b) { return a.lo < b.lo; });
  CompensatedSum s, e;
  for (const auto& p : panels) {
    s.add(p.value);
    e.add(p.error);
  }
  return {s.value(), e.value(), evals};
}

}  // namespace

QuadResult gauss_kronrod_21(const std::function<double(double)>& f, double lo, double hi) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double ah = std::fabs(h);
  double fv1[10], fv2[10];
  const double fc = f(c);
  double resk = wgk[10] * fc;
  double resg = 0.0;
  double resabs = std::fabs(resk);
  for (int j = 0; j < 5; ++j) {
    const int jt = 2 * j + 1;
    const double dx = h * xgk[jt];
    const double f1 = f(c - dx), f2 = f(c + dx);
    fv1[jt] = f1;
    fv2[jt] = f2;
    resg += wg[j] * (f1 + f2);
    resk += wgk[jt] * (f1 + f2);
    resabs += wgk[jt] * (std::fabs(f1) + std::fabs(f2));
  }
  for (int j = 0; j < 5; ++j) {
    const int jt = 2 * j;
    const double dx = h * xgk[jt];
    const double f1 = f(c - dx), f2 = f(c + dx);
    fv1[jt] = f1;
    fv2[jt] = f2;
    resk += wgk[jt] * (f1 + f2);
    resabs += wgk[jt] * (std::fabs(f1) + std::fabs(f2));
  }
  const double mean = 0.5 * resk;
  double resasc = wgk[10] * std::fabs(fc - mean);
  for (int j = 0; j < 10; ++j) resasc += wgk[j] * (std::fabs(fv1[j] - mean) + std::fabs(fv2[j] - mean));
  resasc *= ah;
  resabs *= ah;
  double err = std::fabs((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  QuadResult r;
  r.value = resk * h;
  r.error = err;
  r.evaluations = 21;
  if (!std::isfinite(r.value)) throw DomainError("quadrature: integrand is not finite on the interval");
  return r;
}

QuadResult integrate_1d(const std::function<double(double)>& f, double lo, double hi,
                        const QuadratureSpec& spec) {
  if (!(spec.rel_tol > 0.0 && spec.abs_tol > 0.0)) throw DomainError("quadrature: tolerances must be positive");
  if (lo == hi) return {};
  if (lo > hi) {
    QuadResult r = integrate_1d(f, hi, lo, spec);
    r.value = -r.value;
    return r;
  }
  const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);
  if (!lo_inf && !hi_inf) return adaptive(f, {lo, hi}, spec);

  // x = c + tan(theta) maps the range onto a finite theta interval.
  const double c = lo_inf ? (hi_inf ? 0.0 : hi) : lo;
  const double tlo = lo_inf ? -kHalfPi : 0.0;
  const double thi = hi_inf ? kHalfPi : 0.0;
  auto g = [&](double th) {
    const double t = std::tan(th);
    const double x = c + t;
    if (!std::isfinite(x)) return 0.0;
    const double v = f(x) * (1.0 + t * t);
    return std::isfinite(v) ? v : 0.0;
  };
  return adaptive(g, {tlo, thi}, spec);
}

QuadResult integrate_points(const std::function<double(double)>& f, const std::vector<double>& points,
                            const QuadratureSpec& spec) {
  if (!(spec.rel_tol > 0.0 && spec.abs_tol > 0.0)) throw DomainError("quadrature: tolerances must be positive");
  if (points.size() < 2) throw DomainError("quadrature: need at least two break points");
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i] < points[i + 1]) || !std::isfinite(points[i]) || !std::isfinite(points[i + 1]))
      throw DomainError("quadrature: break points must be finite and increasing");
  }
  return adaptive(f, points, spec);
}

double power_tail_sum(int m, int p) {
  // Direct sum up to n = 20, Euler-Maclaurin beyond.
  constexpr int kDirect = 20;
  double s = 0.0;
  int n = m;
  for (; n < kDirect; ++n) s += std::pow(n + 0.5, -p);
  const double x = n + 0.5;
  s += std::pow(x, 1 - p) / (p - 1) + 0.5 * std::pow(x, -p) + p * std::pow(x, -p - 1) / 12.0 -
       p * (p + 1.0) * (p + 2.0) * std::pow(x, -p - 3) / 720.0;
  return s;
}

double quartic_tail_sum(int m) { return power_tail_sum(m, 4); }

QuadResult integrate_double_tail(const std::function<double(double, double)>& f, double outer_lo,
                                 double outer_hi, const QuadratureSpec& spec, const TailOptions& options) {
  if (!(spec.tail_cut > 0.0)) throw DomainError("quadrature: tail_cut must be positive");
  const double w = options.block > 0.0 ? options.block : spec.tail_cut / 16.0;
  const int nblocks = std::max(4, static_cast<int>(std::ceil(spec.tail_cut / w - 1e-12)));
  const double tail_weight = quartic_tail_sum(nblocks);

  double worst_tail_err = 0.0;
  double env_last = 0.0, env_mid = 0.0, mid_x = 1.0;
  long evals = 0;
  auto inner = [&](double x) {
    QuadratureSpec is = spec;
    is.rel_tol = options.inner_rel_tol;
    std::vector<double> block(nblocks);
    CompensatedSum s;
    for (int n = 0; n < nblocks; ++n) {
      auto fy = [&](double y) { return f(x, y); };
      const QuadResult r = integrate_1d(fy, x - (n + 1) * w, x - n * w, is);
      evals += r.evaluations;
      block[n] = r.value;
      s.add(r.value);
      if (n == 0) is.abs_tol = std::max(spec.abs_tol, 1e-3 * options.inner_rel_tol * std::fabs(r.value));
    }
    // Model the far blocks as C x^-4 + D x^-5 with x = n + 1/2, fitted to the
    // last two; the D part doubles as the error estimate of the closure.
    const double x1 = nblocks - 0.5, x2 = nblocks - 1.5;
    const double p1 = block[nblocks - 1], p2 = block[nblocks - 2];
    // Decay bookkeeping: summed over all outer points, x^4 |P_n| must stay
    // bounded between the middle and the last block. A cubic tail would double it.
    const int mid = nblocks / 2 - 1;
    env_last += std::fabs(p1) * std::pow(x1, 4);
    env_mid += std::fabs(block[mid]) * std::pow(mid + 0.5, 4);
    mid_x = mid + 0.5;
    const double a1 = std::pow(x1, 4), a2 = std::pow(x2, 4);
    const double dcoef = (p1 * a1 - p2 * a2) / (1.0 / x1 - 1.0 / x2);
    const double ccoef = p1 * a1 - dcoef / x1;
    const double dpart = dcoef * power_tail_sum(nblocks, 5);
    worst_tail_err = std::max(worst_tail_err, std::fabs(dpart));
    s.add(ccoef * tail_weight + dpart);
    return s.value();
  };
  QuadResult r = integrate_1d(inner, outer_lo, outer_hi, spec);
  const double allowed = std::pow((nblocks - 0.5) / mid_x, 4.0 - options.min_decay_exponent);
  if (env_last > allowed * env_mid) {
    throw ConvergenceError("quadrature: inner tail decays slower than quartic (growth " +
                               std::to_string(env_last / env_mid) + ")",
                           r.value);
  }
  r.error += worst_tail_err * std::fabs(outer_hi - outer_lo);
  r.evaluations += evals;
  return r;
}

}  // namespace sedlab

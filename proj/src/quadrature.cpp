#include "qfj/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace qfj {

namespace {

// Kronrod nodes on [0, 1] (positive half, symmetric), G7 embedded at odd indices.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const Integrand& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace

QuadratureResult integrate_adaptive(const Integrand& f, double a, double b,
                                    const AdaptiveOptions& opt) {
  if (a == b) return {};
  std::priority_queue<Segment> heap;
  Segment first = gk15(f, a, b);
  heap.push(first);
  double total = first.value;
  double err = first.error;
  int evals = 15;
  int splits = 0;
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (splits >= opt.max_subdivisions)
      throw QuadratureError("adaptive quadrature did not converge, error estimate " +
                                std::to_string(err),
                            {total, err, evals});
    Segment s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    Segment l = gk15(f, s.a, mid);
    Segment r = gk15(f, mid, s.b);
    evals += 30;
    ++splits;
    total += l.value + r.value - s.value;
    err += l.error + r.error - s.error;
    heap.push(l);
    heap.push(r);
    // Roundoff can leave the running error sum slightly off; recompute now and then.
    if (splits % 64 == 0) {
      auto copy = heap;
      double e = 0.0, v = 0.0;
      while (!copy.empty()) {
        e += copy.top().error;
        v += copy.top().value;
        copy.pop();
      }
      err = e;
      total = v;
    }
  }
  return {total, err, evals};
}

QuadratureResult integrate_transverse(const Integrand& f, double scale,
                                      const AdaptiveOptions& opt, double tail_tol) {
  // panels of one scale each, so a coarse first rule cannot step over the bulk
  QuadratureResult acc;
  auto add = [&](double a, double b) {
    const QuadratureResult r = integrate_adaptive(f, a, b, opt);
    acc.value += r.value;
    acc.error += r.error;
    acc.evaluations += r.evaluations;
    return r.value;
  };
  double half = 8.0 * scale;
  for (int k = -8; k < 8; ++k) add(k * scale, (k + 1) * scale);
  for (int k = 0; k < 12; ++k) {
    const double tail = add(half, 2.0 * half) + add(-2.0 * half, -half);
    half *= 2.0;
    if (std::abs(tail) <= tail_tol * std::max(std::abs(acc.value), 1e-300)) {
      acc.error += std::abs(tail);
      return acc;
    }
  }
  throw QuadratureError("transverse integral tail did not settle", acc);
}

namespace {
double simpson(const Integrand& f, double a, double b, int n, int& evals) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
  evals += n + 1;
  return s * h / 3.0;
}
}  // namespace

QuadratureResult integrate_composite(const Integrand& f, double a, double b,
                                     const CompositeOptions& opt) {
  int n = std::max(2, opt.panels);
  if (n % 2) ++n;
  int evals = 0;
  double coarse = simpson(f, a, b, n, evals);
  while (true) {
    n *= 2;
    const double fine = simpson(f, a, b, n, evals);
    const double rich = (fine - coarse) / 15.0;
    if (std::abs(rich) <= opt.rel_tol * std::max(std::abs(fine), 1e-300) || n >= opt.max_panels) {
      QuadratureResult r{fine + rich, std::abs(rich), evals};
      if (std::abs(rich) > opt.rel_tol * std::max(std::abs(fine), 1e-300))
        throw QuadratureError("composite quadrature panel budget exhausted", r);
      return r;
    }
    coarse = fine;
  }
}

}  // namespace qfj

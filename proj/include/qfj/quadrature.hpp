#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace qfj {

using Integrand = std::function<double(double)>;

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  int evaluations = 0;
};

class QuadratureError : public std::runtime_error {
public:
  QuadratureError(const std::string& what, QuadratureResult partial)
      : std::runtime_error(what), partial_(partial) {}
  const QuadratureResult& partial() const noexcept { return partial_; }

private:
  QuadratureResult partial_;
};

struct AdaptiveOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  int max_subdivisions = 2000;
};

/// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]: the interval with
/// the largest error estimate is bisected until the total estimate meets
/// max(abs_tol, rel_tol |I|). Throws QuadratureError on budget exhaustion.
QuadratureResult integrate_adaptive(const Integrand& f, double a, double b,
                                    const AdaptiveOptions& opt = {});

/// Integral over the real line of an integrand decaying like a Gaussian of
/// width `scale`. Starts on [-8 scale, 8 scale] and doubles the half-width
/// until two successive values differ by less than `tail_tol` (relative).
QuadratureResult integrate_transverse(const Integrand& f, double scale,
                                      const AdaptiveOptions& opt = {},
                                      double tail_tol = 1e-10);

struct CompositeOptions {
  int panels = 512;
  double rel_tol = 1e-10;
  int max_panels = 1 << 16;
};

/// Composite Simpson on uniform panels, doubled until the Richardson estimate
/// (S_2n - S_n) / 15 satisfies rel_tol. Returns the extrapolated value.
QuadratureResult integrate_composite(const Integrand& f, double a, double b,
                                     const CompositeOptions& opt = {});

}  // namespace qfj

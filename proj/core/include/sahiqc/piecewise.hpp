#pragma once

#include <vector>

#include "sahiqc/delay_profile.hpp"
#include "sahiqc/events.hpp"

namespace sahiqc {

/// Breakpoints closer than this are treated as the same instant when
/// breakpoint sets are merged.
inline constexpr double kBreakpointTol = 1e-12;

/// Piecewise polynomial on [0, horizon], right-continuous, each segment
/// stored in the local coordinate u = t - t_left with degree <= 4. The
/// calculus on these signals (integration, products, inner products) is
/// closed-form, so norms and residuals carry no quadrature error.
class PiecewiseSignal {
 public:
  using Coeffs = std::vector<double>;  // c0 + c1 u + ... , length 1..5

  PiecewiseSignal(std::vector<double> breakpoints,
                  std::vector<Coeffs> segments);

  static PiecewiseSignal constant(double value, double horizon);
  static PiecewiseSignal zero(double horizon);
  /// slope * t + intercept on [0, horizon].
  static PiecewiseSignal ramp(double slope, double intercept, double horizon);

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<Coeffs>& segments() const { return coeffs_; }
  double horizon() const { return breaks_.back(); }
  std::size_t segment_count() const { return coeffs_.size(); }

  /// Highest effective polynomial degree over all segments.
  int degree() const;

  /// Right-continuous evaluation for t in [0, horizon); t = horizon gives
  /// the left limit.
  double operator()(double t) const;

  /// Exact antiderivative, zero at t = 0, continuous. Requires degree <= 3.
  PiecewiseSignal integrate() const;

  /// Same signal on a breakpoint set refined with the given extra points
  /// (points outside (0, horizon) are ignored).
  PiecewiseSignal refined(const std::vector<double>& extra_points) const;

  PiecewiseSignal scaled(double factor) const;

 private:
  std::size_t segment_of(double t) const;

  std::vector<double> breaks_;
  std::vector<Coeffs> coeffs_;
};

PiecewiseSignal operator+(const PiecewiseSignal& f, const PiecewiseSignal& g);
PiecewiseSignal operator-(const PiecewiseSignal& f, const PiecewiseSignal& g);

/// Values f(t_k) under the right-continuity convention. Every event must
/// lie strictly inside f's horizon.
std::vector<double> sample(const EventSequence& T, const PiecewiseSignal& f);

/// Piecewise-constant signal holding vals[k] on [t_k, t_{k+1}) and the last
/// value up to `horizon`.
PiecewiseSignal hold(const EventSequence& T, const std::vector<double>& vals,
                     double horizon);

/// The composed sample-and-hold: piecewise constant, f evaluated at the
/// active source sample on each inter-update interval. Equals the explicit
/// four-operator hold/sample cascade for right-continuous f.
PiecewiseSignal apply_profile(const DelayProfile& p, const PiecewiseSignal& f);

/// w(t) = integral of v from the active source instant to t: the local
/// integrated-error operator driven by the composed delay. Requires
/// degree(v) <= 3.
PiecewiseSignal delta_apply(const DelayProfile& p, const PiecewiseSignal& v);

/// Exact integral of f*g over [0, horizon] (shared horizon required,
/// merged product degree <= 8).
double l2_inner(const PiecewiseSignal& f, const PiecewiseSignal& g);
double l2_norm(const PiecewiseSignal& f);

/// Windowed near-sinusoid amplitude*sin(omega t + phase) on [t_on, t_off),
/// zero elsewhere, as a piecewise-cubic interpolant with points_per_period
/// nodes per period.
struct NearSinusoid {
  PiecewiseSignal signal;
  /// Sup-norm bound on the interpolation error, (omega*step)^4/384 per unit
  /// amplitude.
  double interp_error_bound;
};
NearSinusoid near_sinusoid(double amplitude, double omega, double phase,
                           double t_on, double t_off, double horizon,
                           int points_per_period = 40);

class Rng;

/// Random piecewise polynomial for randomized trials: `segments`
/// random-width pieces on [0, support_end] with coefficients in [-1, 1]
/// and degree <= max_degree, identically zero on [support_end, horizon].
PiecewiseSignal random_polynomial_signal(Rng& rng, double horizon,
                                         double support_end, int max_degree,
                                         int segments);

}  // namespace sahiqc

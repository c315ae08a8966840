#include "sahiqc/piecewise.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "sahiqc/errors.hpp"
#include "sahiqc/rng.hpp"

namespace sahiqc {

namespace {

constexpr std::size_t kMaxStoredCoeffs = 5;

double poly_eval(const PiecewiseSignal::Coeffs& c, double u) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * u + c[i];
  return r;
}

int poly_degree(const PiecewiseSignal::Coeffs& c) {
  for (std::size_t i = c.size(); i-- > 0;)
    if (c[i] != 0.0) return static_cast<int>(i);
  return 0;
}

/// Coefficients of u -> p(u + shift).
PiecewiseSignal::Coeffs poly_shift(const PiecewiseSignal::Coeffs& c,
                                   double shift) {
  PiecewiseSignal::Coeffs out(c);
  if (shift == 0.0) return out;
  // Synthetic Horner: repeatedly divide by (u - (-shift)).
  for (std::size_t pass = 0; pass + 1 < out.size(); ++pass)
    for (std::size_t i = out.size() - 1; i > pass; --i)
      out[i - 1] += shift * out[i];
  return out;
}

PiecewiseSignal::Coeffs poly_mul(const PiecewiseSignal::Coeffs& a,
                                 const PiecewiseSignal::Coeffs& b) {
  PiecewiseSignal::Coeffs out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

double poly_definite_integral(const PiecewiseSignal::Coeffs& c, double width) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;)
    r = r * width + c[i] / static_cast<double>(i + 1);
  return r * width;
}

std::vector<double> merge_breakpoints(const std::vector<double>& a,
                                      const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  std::size_t w = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (w == 0 || out[i] - out[w - 1] > kBreakpointTol)
      out[w++] = out[i];
  }
  out.resize(w);
  // The merged grid must keep both endpoints exactly.
  out.front() = a.front();
  out.back() = std::max(a.back(), b.back());
  return out;
}

}  // namespace

PiecewiseSignal::PiecewiseSignal(std::vector<double> breakpoints,
                                 std::vector<Coeffs> segments)
    : breaks_(std::move(breakpoints)), coeffs_(std::move(segments)) {
  if (breaks_.size() < 2 || coeffs_.size() + 1 != breaks_.size())
    throw PreconditionError("breakpoint/segment count mismatch");
  if (breaks_.front() != 0.0)
    throw PreconditionError("signal must start at t = 0");
  for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
    if (!(breaks_[i + 1] > breaks_[i]))
      throw PreconditionError("breakpoints must be strictly increasing");
  for (const Coeffs& c : coeffs_)
    if (c.empty() || c.size() > kMaxStoredCoeffs)
      throw PreconditionError("segment degree exceeds 4");
}

PiecewiseSignal PiecewiseSignal::constant(double value, double horizon) {
  if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
  return PiecewiseSignal({0.0, horizon}, {Coeffs{value}});
}

PiecewiseSignal PiecewiseSignal::zero(double horizon) {
  return constant(0.0, horizon);
}

PiecewiseSignal PiecewiseSignal::ramp(double slope, double intercept,
                                      double horizon) {
  if (!(horizon > 0.0)) throw PreconditionError("horizon must be positive");
  return PiecewiseSignal({0.0, horizon}, {Coeffs{intercept, slope}});
}

int PiecewiseSignal::degree() const {
  int d = 0;
  for (const Coeffs& c : coeffs_) d = std::max(d, poly_degree(c));
  return d;
}

std::size_t PiecewiseSignal::segment_of(double t) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
  if (i == 0) throw PreconditionError("evaluation before t = 0");
  if (i >= breaks_.size()) {
    if (t > breaks_.back())
      throw PreconditionError("evaluation beyond the horizon");
    return coeffs_.size() - 1;  // t == horizon: left limit
  }
  return i - 1;
}

double PiecewiseSignal::operator()(double t) const {
  std::size_t s = segment_of(t);
  return poly_eval(coeffs_[s], t - breaks_[s]);
}

PiecewiseSignal PiecewiseSignal::integrate() const {
  if (degree() > 3)
    throw PreconditionError("integrate: segment degree above 3 would "
                            "overflow the stored degree cap");
  std::vector<Coeffs> out;
  out.reserve(coeffs_.size());
  double running = 0.0;
  for (std::size_t s = 0; s < coeffs_.size(); ++s) {
    const Coeffs& c = coeffs_[s];
    std::size_t n = static_cast<std::size_t>(poly_degree(c)) + 1;
    Coeffs anti(n + 1, 0.0);
    anti[0] = running;
    for (std::size_t i = 0; i < n; ++i)
      anti[i + 1] = c[i] / static_cast<double>(i + 1);
    out.push_back(anti);
    running = poly_eval(anti, breaks_[s + 1] - breaks_[s]);
  }
  return PiecewiseSignal(breaks_, std::move(out));
}

PiecewiseSignal PiecewiseSignal::refined(
    const std::vector<double>& extra_points) const {
  std::vector<double> pts;
  for (double p : extra_points)
    if (p > 0.0 && p < horizon()) pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  std::vector<double> grid = merge_breakpoints(breaks_, pts.empty()
                                                            ? breaks_
                                                            : pts);
  std::vector<Coeffs> out;
  out.reserve(grid.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    std::size_t s = segment_of(grid[i]);
    out.push_back(poly_shift(coeffs_[s], grid[i] - breaks_[s]));
  }
  return PiecewiseSignal(std::move(grid), std::move(out));
}

PiecewiseSignal PiecewiseSignal::scaled(double factor) const {
  std::vector<Coeffs> out(coeffs_);
  for (Coeffs& c : out)
    for (double& x : c) x *= factor;
  return PiecewiseSignal(breaks_, std::move(out));
}

namespace {

PiecewiseSignal combine(const PiecewiseSignal& f, const PiecewiseSignal& g,
                        double sign) {
  if (f.horizon() != g.horizon())
    throw PreconditionError("signals must share a horizon");
  std::vector<double> grid =
      merge_breakpoints(f.breakpoints(), g.breakpoints());
  PiecewiseSignal ff = f.refined(grid);
  PiecewiseSignal gg = g.refined(grid);
  std::vector<PiecewiseSignal::Coeffs> out;
  out.reserve(grid.size() - 1);
  for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
    PiecewiseSignal::Coeffs a = ff.segments()[s];
    const PiecewiseSignal::Coeffs& b = gg.segments()[s];
    if (a.size() < b.size()) a.resize(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += sign * b[i];
    out.push_back(std::move(a));
  }
  return PiecewiseSignal(std::move(grid), std::move(out));
}

}  // namespace

PiecewiseSignal operator+(const PiecewiseSignal& f, const PiecewiseSignal& g) {
  return combine(f, g, 1.0);
}

PiecewiseSignal operator-(const PiecewiseSignal& f, const PiecewiseSignal& g) {
  return combine(f, g, -1.0);
}

std::vector<double> sample(const EventSequence& T, const PiecewiseSignal& f) {
  std::vector<double> vals;
  vals.reserve(T.size());
  for (std::size_t k = 0; k < T.size(); ++k) {
    if (T[k] >= f.horizon())
      throw PreconditionError("sample instant at or beyond signal horizon");
    vals.push_back(f(T[k]));
  }
  return vals;
}

PiecewiseSignal hold(const EventSequence& T, const std::vector<double>& vals,
                     double horizon) {
  if (vals.size() != T.size())
    throw PreconditionError("hold: one value per event required");
  if (!(horizon > T.back()))
    throw PreconditionError("hold: horizon must exceed the last event");
  std::vector<double> grid(T.times());
  grid.push_back(horizon);
  std::vector<PiecewiseSignal::Coeffs> segs;
  segs.reserve(vals.size());
  for (double v : vals) segs.push_back({v});
  return PiecewiseSignal(std::move(grid), std::move(segs));
}

PiecewiseSignal apply_profile(const DelayProfile& p,
                              const PiecewiseSignal& f) {
  if (p.horizon() != f.horizon())
    throw PreconditionError("profile and signal must share a horizon");
  std::vector<double> grid;
  std::vector<PiecewiseSignal::Coeffs> segs;
  const auto& eff = p.effective();
  for (std::size_t i = 0; i < eff.size(); ++i) {
    const DelayUpdate& u = p.updates()[eff[i]];
    grid.push_back(u.time);
    segs.push_back({f(u.source)});
  }
  grid.push_back(p.horizon());
  return PiecewiseSignal(std::move(grid), std::move(segs));
}

PiecewiseSignal delta_apply(const DelayProfile& p, const PiecewiseSignal& v) {
  if (p.horizon() != v.horizon())
    throw PreconditionError("profile and signal must share a horizon");
  if (v.degree() > 3)
    throw PreconditionError("delta_apply: input degree above 3");
  PiecewiseSignal V = v.integrate();

  std::vector<double> resets;
  for (std::size_t l : p.effective()) resets.push_back(p.updates()[l].time);
  PiecewiseSignal Vr = V.refined(resets);

  const auto& grid = Vr.breakpoints();
  std::vector<PiecewiseSignal::Coeffs> segs(Vr.segments());
  for (std::size_t s = 0; s < segs.size(); ++s) {
    // Pick the active source just inside the segment so a reset that was
    // collapsed onto a neighbouring grid point still governs the segment it
    // almost coincides with.
    double probe =
        grid[s] + std::min(kBreakpointTol, 0.5 * (grid[s + 1] - grid[s]));
    double base = V(p.source_time(probe));
    segs[s][0] -= base;
  }
  return PiecewiseSignal(grid, std::move(segs));
}

double l2_inner(const PiecewiseSignal& f, const PiecewiseSignal& g) {
  if (f.horizon() != g.horizon())
    throw PreconditionError("signals must share a horizon");
  if (f.degree() + g.degree() > 8)
    throw PreconditionError("l2_inner: product degree above 8");
  std::vector<double> grid =
      merge_breakpoints(f.breakpoints(), g.breakpoints());
  PiecewiseSignal ff = f.refined(grid);
  PiecewiseSignal gg = g.refined(grid);
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
    PiecewiseSignal::Coeffs prod =
        poly_mul(ff.segments()[s], gg.segments()[s]);
    acc += poly_definite_integral(prod, grid[s + 1] - grid[s]);
  }
  return acc;
}

double l2_norm(const PiecewiseSignal& f) { return std::sqrt(l2_inner(f, f)); }

NearSinusoid near_sinusoid(double amplitude, double omega, double phase,
                           double t_on, double t_off, double horizon,
                           int points_per_period) {
  if (!(omega > 0.0)) throw PreconditionError("omega must be positive");
  if (!(0.0 <= t_on && t_on < t_off && t_off <= horizon))
    throw PreconditionError("need 0 <= t_on < t_off <= horizon");
  if (points_per_period < 4)
    throw PreconditionError("need at least 4 points per period");

  double period = 2.0 * std::acos(-1.0) / omega;
  double step = period / points_per_period;
  std::size_t n = static_cast<std::size_t>(std::ceil((t_off - t_on) / step));

  std::vector<double> grid;
  std::vector<PiecewiseSignal::Coeffs> segs;
  if (t_on > 0.0) {
    grid.push_back(0.0);
    segs.push_back({0.0});
  }
  for (std::size_t j = 0; j < n; ++j) {
    double a = t_on + static_cast<double>(j) * step;
    double b = std::min(t_on + static_cast<double>(j + 1) * step, t_off);
    double w = b - a;
    if (!(w > kBreakpointTol)) break;
    double f0 = amplitude * std::sin(omega * a + phase);
    double f1 = amplitude * std::sin(omega * b + phase);
    double d0 = amplitude * omega * std::cos(omega * a + phase);
    double d1 = amplitude * omega * std::cos(omega * b + phase);
    double c2 = (3.0 * (f1 - f0) / w - 2.0 * d0 - d1) / w;
    double c3 = (2.0 * (f0 - f1) / w + d0 + d1) / (w * w);
    grid.push_back(a);
    segs.push_back({f0, d0, c2, c3});
  }
  grid.push_back(t_off);
  if (t_off < horizon) {
    segs.push_back({0.0});
    grid.push_back(horizon);
  }

  double bound = std::abs(amplitude) * std::pow(omega * step, 4) / 384.0;
  return {PiecewiseSignal(std::move(grid), std::move(segs)), bound};
}

PiecewiseSignal random_polynomial_signal(Rng& rng, double horizon,
                                         double support_end, int max_degree,
                                         int segments) {
  if (!(support_end > 0.0) || !(support_end <= horizon))
    throw PreconditionError("support must be a nonempty prefix of [0, horizon]");
  if (max_degree < 0 || max_degree > 3)
    throw PreconditionError("trial inputs are limited to degree 3");
  if (segments < 1) throw PreconditionError("need at least one segment");

  std::vector<double> grid{0.0};
  for (int i = 1; i < segments; ++i)
    grid.push_back(rng.uniform(0.0, support_end));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  while (grid.back() >= support_end) grid.pop_back();
  grid.push_back(support_end);

  std::vector<PiecewiseSignal::Coeffs> segs;
  for (std::size_t s = 0; s + 1 < grid.size(); ++s) {
    std::size_t deg = rng.index(static_cast<std::uint64_t>(max_degree) + 1);
    PiecewiseSignal::Coeffs c(deg + 1);
    for (double& x : c) x = rng.uniform(-1.0, 1.0);
    segs.push_back(std::move(c));
  }
  if (support_end < horizon) {
    grid.push_back(horizon);
    segs.push_back({0.0});
  }
  return PiecewiseSignal(std::move(grid), std::move(segs));
}

}  // namespace sahiqc

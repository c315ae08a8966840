#include "sahiqc/certify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <unordered_map>
#include <utility>

#include "sahiqc/errors.hpp"

namespace sahiqc {

namespace {

using Complex = std::complex<double>;

std::vector<double> log_points(double lo, double hi, int n) {
  std::vector<double> pts;
  if (n <= 0) return pts;
  if (n == 1) {
    pts.push_back(lo);
    return pts;
  }
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    pts.push_back(lo * std::pow(hi / lo, i / (n - 1.0)));
  return pts;
}

/// Log grid centered (geometrically) on the plant's eigenvalue magnitudes.
std::vector<double> plant_freq_grid(const Eigen::MatrixXd& A,
                                    const SearchSpec& spec) {
  double omega_c = 1.0;
  if (A.rows() > 0) {
    Eigen::VectorXcd eigs = checked_eigenvalues(A);
    double log_sum = 0.0;
    int counted = 0;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
      double mag = std::abs(eigs(i));
      if (mag > 0.0) {
        log_sum += std::log(mag);
        ++counted;
      }
    }
    if (counted > 0) omega_c = std::exp(log_sum / counted);
  }
  return log_points(omega_c / spec.freq_span, omega_c * spec.freq_span,
                    spec.freq_points);
}

/// Golden-section maximization of f over [wa, wb] in log frequency,
/// reporting every probe through f itself (the caller tracks the best).
template <class F>
void golden_refine(F&& f, double wa, double wb) {
  constexpr double kGr = 0.6180339887498949;
  double a = std::log(wa), b = std::log(wb);
  double x1 = b - kGr * (b - a), x2 = a + kGr * (b - a);
  double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
  for (int it = 0; it < 90 && b - a > 1e-7; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGr * (b - a);
      f2 = f(std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGr * (b - a);
      f1 = f(std::exp(x1));
    }
  }
}

/// Shared supremum search: grid pass, exact endpoints (omega = 0 and
/// omega = inf), then golden-section refinement of the top local maxima.
template <class Eval>
FdiSup grid_supremum(const std::vector<double>& grid, Eval&& eval,
                     double at_zero, double at_inf, int refine_rounds) {
  FdiSup sup;
  auto consider = [&](double value, double omega) {
    if (value > sup.value) {
      sup.value = value;
      sup.omega = omega;
    }
  };

  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    f[i] = eval(grid[i]);
    ++sup.evaluations;
    consider(f[i], grid[i]);
  }
  consider(at_zero, 0.0);
  consider(at_inf, std::numeric_limits<double>::infinity());
  sup.evaluations += 2;

  // Local maxima of the sampled form, best first.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < f.size(); ++i) {
    bool left_ok = i == 0 || f[i] >= f[i - 1];
    bool right_ok = i + 1 == f.size() || f[i] >= f[i + 1];
    if (left_ok && right_ok) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(),
            [&](std::size_t a, std::size_t b) { return f[a] > f[b]; });
  if (static_cast<int>(peaks.size()) > refine_rounds)
    peaks.resize(static_cast<std::size_t>(refine_rounds));

  for (std::size_t i : peaks) {
    if (grid.size() < 2) break;
    double wa = grid[i == 0 ? 0 : i - 1];
    double wb = grid[std::min(i + 1, grid.size() - 1)];
    if (!(wb > wa)) continue;
    golden_refine(
        [&](double w) {
          double v = eval(w);
          ++sup.evaluations;
          consider(v, w);
          return v;
        },
        wa, wb);
  }
  return sup;
}

double stability_form(Complex g, const Multiplier& m) {
  return (m.beta * m.X + m.eta * m.Y) * std::norm(g) +
         2.0 * m.Y * g.real() - m.X;
}

double performance_form(const Eigen::Matrix2cd& H, const Multiplier& m,
                        double gamma) {
  double a = m.beta * m.X + m.eta * m.Y;
  Complex hzd = H(0, 0), hzw = H(0, 1), hvd = H(1, 0), hvw = H(1, 1);
  double l00 = std::norm(hzd) + a * std::norm(hvd) - gamma * gamma;
  double l11 = std::norm(hzw) + a * std::norm(hvw) +
               2.0 * m.Y * hvw.real() - m.X;
  Complex l01 = std::conj(hzd) * hzw + a * std::conj(hvd) * hvw +
                m.Y * std::conj(hvd);
  double mid = 0.5 * (l00 + l11);
  double rad = std::hypot(0.5 * (l00 - l11), std::abs(l01));
  return mid + rad;
}

/// Memoized scalar frequency response over a fixed grid.
class ScalarEvaluator {
 public:
  ScalarEvaluator(const StateSpace& sys, const SearchSpec& spec)
      : sys_(sys), grid_(plant_freq_grid(sys.A, spec)) {
    values_.reserve(grid_.size());
    for (double w : grid_) values_.push_back(freq_response(sys_, w)(0, 0));
    at_zero_ = freq_response(sys_, 0.0)(0, 0);
    at_inf_ = Complex(sys_.D(0, 0), 0.0);
  }

  const std::vector<double>& grid() const { return grid_; }

  FdiSup sup(const Multiplier& m, int refine_rounds) const {
    std::size_t next = 0;
    FdiSup s = grid_supremum(
        grid_,
        [&](double w) -> double {
          // The grid pass visits grid_ in order; refinement probes hit
          // the memo map.
          Complex g;
          if (next < grid_.size() && w == grid_[next])
            g = values_[next++];
          else
            g = response(w);
          return stability_form(g, m);
        },
        stability_form(at_zero_, m), stability_form(at_inf_, m),
        refine_rounds);
    return s;
  }

 private:
  Complex response(double w) const {
    std::uint64_t key = std::bit_cast<std::uint64_t>(w);
    auto it = extra_.find(key);
    if (it != extra_.end()) return it->second;
    Complex g = freq_response(sys_, w)(0, 0);
    extra_.emplace(key, g);
    return g;
  }

  const StateSpace& sys_;
  std::vector<double> grid_;
  std::vector<Complex> values_;
  Complex at_zero_, at_inf_;
  mutable std::unordered_map<std::uint64_t, Complex> extra_;
};

/// Same idea for the 2x2 analysis response.
class PlantEvaluator {
 public:
  PlantEvaluator(const AnalysisPlant& G, const SearchSpec& spec)
      : sys_(G.sys()), grid_(plant_freq_grid(sys_.A, spec)) {
    values_.reserve(grid_.size());
    for (double w : grid_) values_.push_back(freq_response(sys_, w));
    at_zero_ = freq_response(sys_, 0.0);
    at_inf_ = sys_.D.cast<Complex>();
  }

  FdiSup sup(const Multiplier& m, double gamma, int refine_rounds) const {
    std::size_t next = 0;
    return grid_supremum(
        grid_,
        [&](double w) -> double {
          Eigen::Matrix2cd H;
          if (next < grid_.size() && w == grid_[next])
            H = values_[next++];
          else
            H = response(w);
          return performance_form(H, m, gamma);
        },
        performance_form(at_zero_, m, gamma),
        performance_form(at_inf_, m, gamma), refine_rounds);
  }

 private:
  Eigen::Matrix2cd response(double w) const {
    std::uint64_t key = std::bit_cast<std::uint64_t>(w);
    auto it = extra_.find(key);
    if (it != extra_.end()) return it->second;
    Eigen::Matrix2cd H = freq_response(sys_, w);
    extra_.emplace(key, H);
    return H;
  }

  const StateSpace& sys_;
  std::vector<double> grid_;
  std::vector<Eigen::Matrix2cd, Eigen::aligned_allocator<Eigen::Matrix2cd>>
      values_;
  Eigen::Matrix2cd at_zero_, at_inf_;
  mutable std::unordered_map<
      std::uint64_t, Eigen::Matrix2cd, std::hash<std::uint64_t>,
      std::equal_to<std::uint64_t>,
      Eigen::aligned_allocator<std::pair<const std::uint64_t,
                                         Eigen::Matrix2cd>>>
      extra_;
};

void check_stability_inputs(const StateSpace& Gvw, const Multiplier& m) {
  if (Gvw.inputs() != 1 || Gvw.outputs() != 1)
    throw PreconditionError("stability form needs a scalar system");
  if (Gvw.states() >= 1 && !(hurwitz_margin(Gvw) < -kAlphaStab))
    throw PreconditionError("stability form needs a stable system");
  if (!(m.X + m.Y > 0.0))
    throw PreconditionError("degenerate multiplier: X = Y = 0");
}

/// Scans the (X, Y) stability grid at fixed (beta, eta); fills `rep` with
/// the witness (feasible) or the least-bad point (infeasible).
bool scan_stability(const ScalarEvaluator& ev, double beta, double eta,
                    const SearchSpec& spec, CertificationReport& rep) {
  rep.feasible = false;
  rep.margin = std::numeric_limits<double>::infinity();
  for (double X : spec.x_grid_stability()) {
    for (double Y : spec.y_grid()) {
      if (X == 0.0 && Y == 0.0) continue;
      Multiplier m(beta, eta, X, Y);
      FdiSup s = ev.sup(m, spec.refine_rounds);
      rep.points_scanned += s.evaluations;
      if (s.value < rep.margin) {
        rep.margin = s.value;
        rep.X = X;
        rep.Y = Y;
        rep.worst_omega = s.omega;
      }
      if (s.value < -feasibility_epsilon(X, Y)) {
        rep.feasible = true;
        rep.margin = s.value;
        rep.X = X;
        rep.Y = Y;
        rep.worst_omega = s.omega;
        return true;
      }
    }
  }
  return false;
}

StateSpace zero_weight() {
  return StateSpace::static_gain(Eigen::MatrixXd::Zero(1, 1));
}

void require_h_delta(double h, double delta) {
  if (!(h > 0.0)) throw PreconditionError("h must be positive");
  if (!(delta >= 0.0)) throw PreconditionError("delta must be non-negative");
}

}  // namespace

double feasibility_epsilon(double X, double Y, double gamma) {
  return 1e-7 * (1.0 + std::abs(X) + std::abs(Y) + gamma * gamma);
}

std::vector<double> SearchSpec::y_grid() const {
  std::vector<double> ys{0.0};
  for (double y : log_points(y_lo, y_hi, y_points)) ys.push_back(y);
  return ys;
}

std::vector<double> SearchSpec::x_grid_stability() const {
  return x_free ? std::vector<double>{1.0, 0.0} : std::vector<double>{1.0};
}

std::vector<double> SearchSpec::x_grid_performance() const {
  std::vector<double> xs = log_points(x_lo, x_hi, x_points);
  if (xs.empty())
    throw PreconditionError("performance scan needs a positive X grid");
  for (double x : xs)
    if (!(x > 0.0))
      throw PreconditionError("performance X grid must be positive");
  return xs;
}

FdiSup fdi_sup_stability(const StateSpace& Gvw, const Multiplier& m,
                         const SearchSpec& spec) {
  check_stability_inputs(Gvw, m);
  ScalarEvaluator ev(Gvw, spec);
  return ev.sup(m, spec.refine_rounds);
}

double fdi_margin_stability(const StateSpace& Gvw, const Multiplier& m,
                            const SearchSpec& spec) {
  return fdi_sup_stability(Gvw, m, spec).value;
}

FdiSup fdi_sup_performance(const AnalysisPlant& G, const Multiplier& m,
                           double gamma, const SearchSpec& spec) {
  if (!(m.X > 0.0))
    throw PreconditionError(
        "performance form needs X > 0 (w channel at infinite frequency)");
  if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
  PlantEvaluator ev(G, spec);
  return ev.sup(m, gamma, spec.refine_rounds);
}

double fdi_margin_performance(const AnalysisPlant& G, const Multiplier& m,
                              double gamma, const SearchSpec& spec) {
  return fdi_sup_performance(G, m, gamma, spec).value;
}

CertificationReport certify_stability(const StateSpace& P,
                                      const StateSpace& F, double h,
                                      double delta, const SearchSpec& spec) {
  require_h_delta(h, delta);
  auto [beta, eta] = beta_eta(bounds_from_h_delta(h, delta));
  AnalysisPlant G = assemble_G(P, F, zero_weight());
  StateSpace Gvw = G.Gvw();
  ScalarEvaluator ev(Gvw, spec);
  CertificationReport rep;
  scan_stability(ev, beta, eta, spec, rep);
  return rep;
}

CertificationReport certify_performance(const StateSpace& P,
                                        const StateSpace& F,
                                        const StateSpace& W, double h,
                                        double delta,
                                        const SearchSpec& spec) {
  require_h_delta(h, delta);
  auto [beta, eta] = beta_eta(bounds_from_h_delta(h, delta));
  AnalysisPlant G = assemble_G(P, F, W);
  PlantEvaluator ev(G, spec);

  std::int64_t total_points = 0;
  std::vector<double> xs = spec.x_grid_performance();
  std::vector<double> ys = spec.y_grid();

  auto scan = [&](double gamma, CertificationReport& out) -> bool {
    out.feasible = false;
    out.margin = std::numeric_limits<double>::infinity();
    for (double X : xs) {
      for (double Y : ys) {
        Multiplier m(beta, eta, X, Y);
        FdiSup s = ev.sup(m, gamma, spec.refine_rounds);
        total_points += s.evaluations;
        if (s.value < out.margin) {
          out.margin = s.value;
          out.X = X;
          out.Y = Y;
          out.worst_omega = s.omega;
        }
        if (s.value < -feasibility_epsilon(X, Y, gamma)) {
          out.feasible = true;
          out.margin = s.value;
          out.X = X;
          out.Y = Y;
          out.worst_omega = s.omega;
          out.gamma = gamma;
          return true;
        }
      }
    }
    return false;
  };

  // Doubling/halving ladder from gamma = 1 to bracket the threshold.
  constexpr double kGammaCap = 1073741824.0;  // 2^30
  CertificationReport best;
  double lo, hi;
  if (scan(1.0, best)) {
    hi = 1.0;
    lo = 0.5;
    CertificationReport probe;
    while (lo > 1e-9 && scan(lo, probe)) {
      best = probe;
      hi = lo;
      lo *= 0.5;
    }
  } else {
    lo = 1.0;
    hi = 2.0;
    CertificationReport probe;
    while (!scan(hi, probe)) {
      lo = hi;
      hi *= 2.0;
      if (hi > kGammaCap) {
        best.points_scanned = total_points;
        return best;  // infeasible: least-bad witness at the cap
      }
    }
    best = probe;
  }

  while (hi - lo > kTolGamma * hi) {
    double mid = 0.5 * (lo + hi);
    CertificationReport probe;
    if (scan(mid, probe)) {
      best = probe;
      hi = mid;
    } else {
      lo = mid;
    }
  }

  best.feasible = true;
  best.gamma = hi;
  best.points_scanned = total_points;
  return best;
}

double max_h(const StateSpace& P, const StateSpace& F, double delta,
             const SearchSpec& spec) {
  if (!(delta >= 0.0))
    throw PreconditionError("delta must be non-negative");
  AnalysisPlant G = assemble_G(P, F, zero_weight());
  StateSpace Gvw = G.Gvw();
  ScalarEvaluator ev(Gvw, spec);

  auto feasible_at = [&](double h) -> bool {
    auto [beta, eta] = beta_eta(bounds_from_h_delta(h, delta));
    CertificationReport rep;
    return scan_stability(ev, beta, eta, spec, rep);
  };

  // Adaptive seed: the first decade step at which the certificate holds.
  double seed = 0.0;
  for (double cand = 1e-3; cand >= 0.9e-9; cand /= 10.0)
    if (feasible_at(cand)) {
      seed = cand;
      break;
    }
  if (seed == 0.0)
    throw NumericError(
        "no stability certificate even at the smallest seed gap");

  double lo = seed, hi = 2.0 * seed;
  int guard = 0;
  while (feasible_at(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 60)
      throw NumericError("certified h appears unbounded for this loop");
  }
  while (hi - lo > kTolH * hi) {
    double mid = 0.5 * (lo + hi);
    if (feasible_at(mid))
      lo = mid;
    else
      hi = mid;
  }
  double h_max = lo;

  // Post-hoc boundary sweep: monotonicity was assumed, so verify it on
  // 12 points around the result and downgrade when it fails.
  bool clean = true;
  double best_verified = 0.0;
  bool prefix_feasible = true;
  for (int k = 0; k < 12; ++k) {
    double h = h_max * (0.8 + 0.4 * k / 11.0);
    bool feas = feasible_at(h);
    bool expected = h <= h_max;
    if (feas != expected) clean = false;
    if (feas && prefix_feasible)
      best_verified = std::max(best_verified, h);
    if (!feas) prefix_feasible = false;
  }
  if (clean) return h_max;
  if (best_verified > 0.0) return std::min(h_max, best_verified);
  throw NumericError("verification sweep contradicts the bisection result");
}

double lmi_eval_stability(const StateSpace& Gvw, const Multiplier& m,
                          const Eigen::MatrixXd& Q) {
  if (Gvw.inputs() != 1 || Gvw.outputs() != 1)
    throw PreconditionError("stability LMI needs a scalar system");
  Eigen::Index n = Gvw.states();
  if (Q.rows() != n || Q.cols() != n)
    throw PreconditionError("Q must match the state dimension");
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm()))
    throw PreconditionError("Q must be symmetric");

  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n + 1, n + 1);
  lhs.topLeftCorner(n, n) = Gvw.A.transpose() * Q + Q * Gvw.A;
  lhs.topRightCorner(n, 1) = Q * Gvw.B;
  lhs.bottomLeftCorner(1, n) = Gvw.B.transpose() * Q;

  Eigen::MatrixXd S(2, n + 1);
  S.topLeftCorner(1, n) = Gvw.C;
  S(0, n) = Gvw.D(0, 0);
  S.bottomLeftCorner(1, n).setZero();
  S(1, n) = 1.0;
  lhs += S.transpose() * m.matrix() * S;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (lhs + lhs.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericError("LMI eigenvalue computation failed");
  return es.eigenvalues().maxCoeff();
}

double lmi_eval_performance(const AnalysisPlant& G, const Multiplier& m,
                            double gamma, const Eigen::MatrixXd& Q) {
  if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
  const StateSpace& sys = G.sys();
  Eigen::Index n = sys.states();
  if (Q.rows() != n || Q.cols() != n)
    throw PreconditionError("Q must match the state dimension");
  if ((Q - Q.transpose()).norm() > 1e-12 * (1.0 + Q.norm()))
    throw PreconditionError("Q must be symmetric");

  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n + 2, n + 2);
  lhs.topLeftCorner(n, n) = sys.A.transpose() * Q + Q * sys.A;
  lhs.block(0, n, n, 2) = Q * sys.B;
  lhs.block(n, 0, 2, n) = sys.B.transpose() * Q;

  // Channel stack (z, v, d, w) in terms of (x, d, w).
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(4, n + 2);
  S.block(0, 0, 2, n) = sys.C;
  S.block(0, n, 2, 2) = sys.D;
  S(2, n) = 1.0;
  S(3, n + 1) = 1.0;

  double a = m.beta * m.X + m.eta * m.Y;
  Eigen::Matrix4d mid = Eigen::Matrix4d::Zero();
  mid(0, 0) = 1.0;
  mid(1, 1) = a;
  mid(1, 3) = m.Y;
  mid(3, 1) = m.Y;
  mid(2, 2) = -gamma * gamma;
  mid(3, 3) = -m.X;
  lhs += S.transpose() * mid * S;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (lhs + lhs.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericError("LMI eigenvalue computation failed");
  return es.eigenvalues().maxCoeff();
}

}  // namespace sahiqc

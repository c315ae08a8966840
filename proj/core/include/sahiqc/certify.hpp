#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "sahiqc/events.hpp"
#include "sahiqc/multiplier.hpp"
#include "sahiqc/state_space.hpp"

namespace sahiqc {

/// Relative tolerance of the h bisection in max_h.
inline constexpr double kTolH = 1e-3;
/// Relative tolerance of the gamma bisection in certify_performance.
inline constexpr double kTolGamma = 1e-3;

/// The frequency-domain inequalities are strict; a point certifies only
/// when its supremum clears this margin below zero.
double feasibility_epsilon(double X, double Y, double gamma = 0.0);

/// Grid policy for the multiplier scan and the frequency sweep.
struct SearchSpec {
  /// Stability scan: X in {1, 0} when true, {1} when false. (Verdicts are
  /// invariant to a joint positive scaling of (X, Y), so X is normalized.)
  bool x_free = true;
  int y_points = 13;
  double y_lo = 1e-3, y_hi = 1e3;
  int x_points = 7;  // performance only; positive log grid
  double x_lo = 1e-2, x_hi = 1e2;
  int freq_points = 400;
  double freq_span = 1e3;   // grid spans [1/span, span] * omega_c
  int refine_rounds = 5;    // local maxima refined to convergence

  std::vector<double> y_grid() const;             // {0} then log points
  std::vector<double> x_grid_stability() const;   // {1} or {1, 0}
  std::vector<double> x_grid_performance() const; // positive log points
};

struct CertificationReport {
  bool feasible = false;
  double X = 0.0;
  double Y = 0.0;
  /// Supremum of the frequency-domain form at the reported (X, Y) — the
  /// certificate margin when feasible, the least-bad value seen otherwise.
  double margin = std::numeric_limits<double>::infinity();
  double worst_omega = 0.0;
  /// Performance only: the smallest certified closed-loop gain.
  double gamma = 0.0;
  /// Scan statistics: frequency-form evaluations and refinement probes.
  std::int64_t points_scanned = 0;
  std::int64_t refinements = 0;
};

/// Supremum over omega in [0, inf] of
///   f(w) = (beta X + eta Y) |G(jw)|^2 + 2 Y Re G(jw) - X
/// for scalar stable G, on the SearchSpec frequency grid with local
/// refinement; the value and where it was attained.
struct FdiSup {
  double value = -std::numeric_limits<double>::infinity();
  double omega = 0.0;
  std::int64_t evaluations = 0;
};

FdiSup fdi_sup_stability(const StateSpace& Gvw, const Multiplier& m,
                         const SearchSpec& spec);
double fdi_margin_stability(const StateSpace& Gvw, const Multiplier& m,
                            const SearchSpec& spec);

/// Supremum over omega of the largest eigenvalue of
///   [H(jw); I]^* Pi_p [H(jw); I],
/// where H is the 2x2 response of the analysis plant (rows z, v; columns
/// d, w) and Pi_p couples the performance channel (gain gamma on d -> z)
/// with the operator multiplier (m.X > 0 required so the w channel is
/// negative at infinite frequency).
FdiSup fdi_sup_performance(const AnalysisPlant& G, const Multiplier& m,
                           double gamma, const SearchSpec& spec);
double fdi_margin_performance(const AnalysisPlant& G, const Multiplier& m,
                              double gamma, const SearchSpec& spec);

/// Scans the multiplier grid for a stability certificate of the loop
/// (P, -F) under sample/update bounds derived from (h, delta).
CertificationReport certify_stability(const StateSpace& P,
                                      const StateSpace& F, double h,
                                      double delta,
                                      const SearchSpec& spec = {});

/// Bisects the closed-loop gain gamma, scanning the multiplier grid at
/// each candidate; returns the smallest certified gamma with its witness.
CertificationReport certify_performance(const StateSpace& P,
                                        const StateSpace& F,
                                        const StateSpace& W, double h,
                                        double delta,
                                        const SearchSpec& spec = {});

/// Largest h whose stability certificate the bisection can verify,
/// assuming feasibility is monotone in h; a 12-point sweep around the
/// result checks the boundary and downgrades it if monotonicity fails.
double max_h(const StateSpace& P, const StateSpace& F, double delta,
             const SearchSpec& spec = {});

/// Largest eigenvalue of the assembled stability LMI left-hand side
///   [[A'Q + QA, QB],[B'Q, 0]] + [C D; 0 I]' M(X, Y) [C D; 0 I]
/// for the scalar v/w subsystem; negative certifies feasibility with the
/// supplied Q. A checker for externally produced certificates.
double lmi_eval_stability(const StateSpace& Gvw, const Multiplier& m,
                          const Eigen::MatrixXd& Q);

/// Performance analogue with the 4x4 middle matrix on channels
/// (z, v, d, w) and gain gamma.
double lmi_eval_performance(const AnalysisPlant& G, const Multiplier& m,
                            double gamma, const Eigen::MatrixXd& Q);

}  // namespace sahiqc

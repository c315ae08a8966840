#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sahiqc {

/// Systems with max Re(eigenvalue) above this are rejected wherever
/// stability is required; values in [-alpha, 0] count as numerically
/// marginal.
inline constexpr double kAlphaStab = 1e-9;
/// Relative tolerance of the norm bisection.
inline constexpr double kTolHinf = 1e-6;
/// Absolute tolerance on frequency-response comparisons.
inline constexpr double kTolTf = 1e-9;

/// Continuous-time realization x' = Ax + Bu, y = Cx + Du. n = 0 encodes a
/// static gain.
struct StateSpace {
  Eigen::MatrixXd A, B, C, D;

  StateSpace(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C,
             Eigen::MatrixXd D);

  static StateSpace static_gain(Eigen::MatrixXd D);

  /// SISO transfer function from numerator/denominator coefficients in
  /// descending powers of s, realized in controllable canonical form.
  /// Requires deg(num) <= deg(den) and a nonzero leading den coefficient.
  static StateSpace from_transfer(const std::vector<double>& num,
                                  const std::vector<double>& den);

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }
};

/// Eigenvalues of M with the residual guard ||Mv - lambda v|| <= 1e-8||M||
/// enforced on every pair.
Eigen::VectorXcd checked_eigenvalues(const Eigen::MatrixXd& M);

/// max over eigenvalues of A of Re(lambda). Requires n >= 1.
double hurwitz_margin(const StateSpace& sys);

/// Realization of s*F(s) for strictly proper stable F:
/// (A, B, C*A, C*B).
StateSpace derivative_compose(const StateSpace& F);

/// C (jwI - A)^{-1} B + D; omega may be infinity (returns D). Throws when
/// jw is a pole.
Eigen::MatrixXcd freq_response(const StateSpace& sys, double omega);

struct HinfResult {
  double norm;
  double peak_omega;  // may be infinity when the feedthrough dominates
};

/// Peak gain over frequency, certified by bisection on the Hamiltonian
/// imaginary-eigenvalue test, to relative tolerance tol.
HinfResult hinf_norm(const StateSpace& sys, double tol = kTolHinf);

/// The four-block analysis system: inputs (d, w), outputs (z, v). The two
/// input channels share the summing junction, so the d and w columns of
/// the realization coincide.
class AnalysisPlant {
 public:
  explicit AnalysisPlant(StateSpace G);

  const StateSpace& sys() const { return G_; }

  /// SISO subsystem for output row i (0 = z, 1 = v) and input column j
  /// (0 = d, 1 = w).
  StateSpace channel(Eigen::Index i, Eigen::Index j) const;

  StateSpace Gzd() const { return channel(0, 0); }
  StateSpace Gzw() const { return channel(0, 1); }
  StateSpace Gvd() const { return channel(1, 0); }
  StateSpace Gvw() const { return channel(1, 1); }

 private:
  StateSpace G_;
};

/// Closes the loop u = d + w - F y, y = P u and augments the performance
/// weight W and the differentiated filter path v = (d/dt)(F y):
/// the map (d, w) -> (z, v) with z = W u. P, F, W must be SISO, F strictly
/// proper and stable, and the nominal loop stable.
AnalysisPlant assemble_G(const StateSpace& P, const StateSpace& F,
                         const StateSpace& W);

}  // namespace sahiqc

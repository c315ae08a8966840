#include "sahiqc/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "sahiqc/errors.hpp"

namespace sahiqc {

namespace {

using Complex = std::complex<double>;

std::string dim_string(const Eigen::MatrixXd& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

}  // namespace

StateSpace::StateSpace(Eigen::MatrixXd A_, Eigen::MatrixXd B_,
                       Eigen::MatrixXd C_, Eigen::MatrixXd D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
  if (A.rows() != A.cols())
    throw PreconditionError("A must be square, got " + dim_string(A));
  if (B.rows() != A.rows())
    throw PreconditionError("B must have as many rows as A");
  if (C.cols() != A.rows())
    throw PreconditionError("C must have as many columns as A");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    throw PreconditionError("D must be (outputs x inputs)");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
    throw PreconditionError("state-space matrices must be finite");
}

StateSpace StateSpace::static_gain(Eigen::MatrixXd D) {
  Eigen::Index p = D.rows(), m = D.cols();
  return StateSpace(Eigen::MatrixXd::Zero(0, 0), Eigen::MatrixXd::Zero(0, m),
                    Eigen::MatrixXd::Zero(p, 0), std::move(D));
}

StateSpace StateSpace::from_transfer(const std::vector<double>& num,
                                     const std::vector<double>& den) {
  if (den.empty() || den.front() == 0.0)
    throw PreconditionError("denominator needs a nonzero leading coefficient");
  if (num.size() > den.size())
    throw PreconditionError("transfer function must be proper");
  if (num.empty()) throw PreconditionError("empty numerator");

  Eigen::Index n = static_cast<Eigen::Index>(den.size()) - 1;
  double lead = den.front();

  // Ascending-power normalized coefficients.
  std::vector<double> a(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    a[static_cast<std::size_t>(i)] =
        den[den.size() - 1 - static_cast<std::size_t>(i)] / lead;
  std::vector<double> b(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::size_t i = 0; i < num.size(); ++i)
    b[num.size() - 1 - i] = num[i] / lead;

  if (n == 0) return static_gain(Eigen::MatrixXd::Constant(1, 1, b[0]));

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  for (Eigen::Index j = 0; j < n; ++j)
    A(n - 1, j) = -a[static_cast<std::size_t>(j)];
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  Eigen::MatrixXd C(1, n);
  double bn = b[static_cast<std::size_t>(n)];
  for (Eigen::Index j = 0; j < n; ++j)
    C(0, j) = b[static_cast<std::size_t>(j)] -
              bn * a[static_cast<std::size_t>(j)];
  Eigen::MatrixXd D = Eigen::MatrixXd::Constant(1, 1, bn);
  return StateSpace(std::move(A), std::move(B), std::move(C), std::move(D));
}

Eigen::VectorXcd checked_eigenvalues(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return Eigen::VectorXcd(0);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success)
    throw NumericError("eigenvalue iteration did not converge");
  Eigen::MatrixXcd Mc = M.cast<Complex>();
  const Eigen::MatrixXcd& V = es.eigenvectors();
  double scale = std::max(M.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    double res = (Mc * V.col(i) - es.eigenvalues()(i) * V.col(i)).norm();
    if (!(res <= 1e-8 * scale)) {
      std::ostringstream os;
      os << "eigenvalue residual " << res << " exceeds 1e-8 * " << scale;
      throw NumericError(os.str());
    }
  }
  return es.eigenvalues();
}

double hurwitz_margin(const StateSpace& sys) {
  if (sys.states() < 1)
    throw PreconditionError("hurwitz_margin needs at least one state");
  return checked_eigenvalues(sys.A).real().maxCoeff();
}

StateSpace derivative_compose(const StateSpace& F) {
  if (!F.D.isZero(0.0))
    throw PreconditionError("derivative of non-strictly-proper block");
  if (F.states() >= 1 && !(hurwitz_margin(F) < -kAlphaStab))
    throw PreconditionError("derivative_compose requires a stable block");
  return StateSpace(F.A, F.B, F.C * F.A, F.C * F.B);
}

Eigen::MatrixXcd freq_response(const StateSpace& sys, double omega) {
  if (sys.states() == 0 || std::isinf(omega)) return sys.D.cast<Complex>();

  Eigen::MatrixXcd M = -sys.A.cast<Complex>();
  M.diagonal().array() += Complex(0.0, omega);

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "pole on the imaginary axis at omega = " << omega;
    throw PreconditionError(os.str());
  }
  Eigen::MatrixXcd X = lu.solve(sys.B.cast<Complex>());
  double res = (M * X - sys.B.cast<Complex>()).norm();
  double scale = (sys.A.norm() + std::abs(omega) + 1.0) * (X.norm() + 1.0);
  if (!(res <= 1e-8 * scale))
    throw NumericError("frequency-response solve residual too large");
  return sys.C.cast<Complex>() * X + sys.D.cast<Complex>();
}

namespace {

double sigma_max(const Eigen::MatrixXcd& M) {
  return M.jacobiSvd().singularValues()(0);
}

/// Frequencies (> 0) where the gamma-level Hamiltonian touches the
/// imaginary axis; empty means gamma is an upper bound on the norm.
std::vector<double> hamiltonian_axis_freqs(const StateSpace& sys,
                                           double gamma) {
  Eigen::Index n = sys.states(), m = sys.inputs(), p = sys.outputs();
  Eigen::MatrixXd R = gamma * gamma * Eigen::MatrixXd::Identity(m, m) -
                      sys.D.transpose() * sys.D;
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericError("Hamiltonian test requires gamma above the "
                       "feedthrough gain");
  Eigen::MatrixXd Rinv = llt.solve(Eigen::MatrixXd::Identity(m, m));

  Eigen::MatrixXd Acl = sys.A + sys.B * Rinv * sys.D.transpose() * sys.C;
  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = Acl;
  H.topRightCorner(n, n) = sys.B * Rinv * sys.B.transpose();
  H.bottomLeftCorner(n, n) =
      -sys.C.transpose() *
      (Eigen::MatrixXd::Identity(p, p) + sys.D * Rinv * sys.D.transpose()) *
      sys.C;
  H.bottomRightCorner(n, n) = -Acl.transpose();

  Eigen::VectorXcd eigs = checked_eigenvalues(H);
  double axis_tol = 1e-9 * (1.0 + H.norm());
  std::vector<double> freqs;
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    if (std::abs(eigs(i).real()) <= axis_tol && eigs(i).imag() > 0.0)
      freqs.push_back(eigs(i).imag());
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end(),
                          [](double a, double b) {
                            return std::abs(a - b) <= 1e-9 * (1.0 + a);
                          }),
              freqs.end());
  return freqs;
}

}  // namespace

HinfResult hinf_norm(const StateSpace& sys, double tol) {
  if (sys.states() == 0) return {sigma_max(sys.D.cast<Complex>()), 0.0};
  if (!(hurwitz_margin(sys) < -kAlphaStab))
    throw PreconditionError("hinf_norm requires a stable system");
  if (!(tol > 0.0) || !(tol < 1.0))
    throw PreconditionError("tol must be in (0, 1)");

  // Seed the lower bound from structured frequencies: DC, resonances, and a
  // short log sweep around them.
  Eigen::VectorXcd poles = checked_eigenvalues(sys.A);
  std::vector<double> seeds{0.0};
  double w_min = std::numeric_limits<double>::infinity(), w_max = 0.0;
  for (Eigen::Index i = 0; i < poles.size(); ++i) {
    double mag = std::abs(poles(i));
    seeds.push_back(mag);
    w_min = std::min(w_min, mag);
    w_max = std::max(w_max, mag);
  }
  double sweep_lo = 1e-2 * w_min;
  double sweep_hi = 1e2 * w_max;
  for (int i = 0; i <= 24; ++i)
    seeds.push_back(sweep_lo * std::pow(sweep_hi / sweep_lo, i / 24.0));

  double best = sigma_max(sys.D.cast<Complex>());
  double peak = std::numeric_limits<double>::infinity();
  if (sys.D.isZero(0.0)) {
    best = 0.0;
    peak = 0.0;
  }
  for (double w : seeds) {
    double g = sigma_max(freq_response(sys, w));
    if (g > best) {
      best = g;
      peak = w;
    }
  }

  double lo = best;
  double hi = std::max(2.0 * best, 1e-12);
  int guard = 0;
  while (!hamiltonian_axis_freqs(sys, hi).empty()) {
    hi *= 2.0;
    if (++guard > 120)
      throw NumericError("hinf_norm: no finite upper bound found");
  }

  while (hi - lo > tol * hi) {
    double mid = 0.5 * (lo + hi);
    std::vector<double> freqs = hamiltonian_axis_freqs(sys, mid);
    if (freqs.empty()) {
      hi = mid;
      continue;
    }
    // Some singular value crosses mid at these frequencies; evaluating
    // there both tightens the lower bound and tracks the peak.
    double lo_next = mid;
    for (double w : freqs) {
      double g = sigma_max(freq_response(sys, w));
      if (g > best) {
        best = g;
        peak = w;
      }
      lo_next = std::max(lo_next, g);
    }
    lo = lo_next;
  }
  return {0.5 * (lo + hi), peak};
}

AnalysisPlant::AnalysisPlant(StateSpace G) : G_(std::move(G)) {
  if (G_.inputs() != 2 || G_.outputs() != 2)
    throw PreconditionError("analysis plant must map (d, w) -> (z, v)");
  if (G_.states() >= 1 && !(hurwitz_margin(G_) < -kAlphaStab))
    throw PreconditionError("nominal closed loop is not stable");
}

StateSpace AnalysisPlant::channel(Eigen::Index i, Eigen::Index j) const {
  if (i < 0 || i > 1 || j < 0 || j > 1)
    throw PreconditionError("channel index out of range");
  return StateSpace(G_.A, G_.B.col(j), G_.C.row(i),
                    G_.D.block(i, j, 1, 1));
}

AnalysisPlant assemble_G(const StateSpace& P, const StateSpace& F,
                         const StateSpace& W) {
  for (const StateSpace* blk : {&P, &F, &W})
    if (blk->inputs() != 1 || blk->outputs() != 1)
      throw PreconditionError("P, F, W must be SISO");
  if (!F.D.isZero(0.0))
    throw PreconditionError(
        "algebraic loop: F must be strictly proper");
  if (F.states() >= 1 && !(hurwitz_margin(F) < -kAlphaStab))
    throw PreconditionError("F must be stable");

  Eigen::Index np = P.states(), nf = F.states(), nw = W.states();
  Eigen::Index n = np + nf + nw;
  double dp = P.D(0, 0), dw = W.D(0, 0);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.block(0, 0, np, np) = P.A;
  A.block(0, np, np, nf) = -P.B * F.C;
  A.block(np, 0, nf, np) = F.B * P.C;
  A.block(np, np, nf, nf) = F.A - F.B * dp * F.C;
  A.block(np + nf, np, nw, nf) = -W.B * F.C;
  A.block(np + nf, np + nf, nw, nw) = W.A;

  Eigen::MatrixXd Bu(n, 1);
  Bu.block(0, 0, np, 1) = P.B;
  Bu.block(np, 0, nf, 1) = F.B * dp;
  Bu.block(np + nf, 0, nw, 1) = W.B;
  Eigen::MatrixXd B(n, 2);
  B << Bu, Bu;

  Eigen::MatrixXd Cz = Eigen::MatrixXd::Zero(1, n);
  Cz.block(0, np, 1, nf) = -dw * F.C;
  Cz.block(0, np + nf, 1, nw) = W.C;

  double cfbf = nf > 0 ? (F.C * F.B)(0, 0) : 0.0;
  Eigen::MatrixXd Cv = Eigen::MatrixXd::Zero(1, n);
  Cv.block(0, 0, 1, np) = cfbf * P.C;
  Cv.block(0, np, 1, nf) = F.C * F.A - cfbf * dp * F.C;

  Eigen::MatrixXd C(2, n);
  C << Cz, Cv;
  Eigen::MatrixXd D(2, 2);
  double dv = cfbf * dp;
  D << dw, dw, dv, dv;

  try {
    return AnalysisPlant(StateSpace(A, B, C, D));
  } catch (const PreconditionError&) {
    throw PreconditionError(
        "nominal closed loop of P with -F is not stable");
  }
}

}  // namespace sahiqc

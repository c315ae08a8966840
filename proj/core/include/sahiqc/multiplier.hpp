#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sahiqc/delay_profile.hpp"
#include "sahiqc/events.hpp"
#include "sahiqc/piecewise.hpp"

namespace sahiqc {

/// Tolerance for the empirical operator inequalities when the trial input
/// is an exact piecewise polynomial (inner products are closed-form).
inline constexpr double kTolLemmaExact = 1e-9;
/// Tolerance when the input is an interpolated sinusoid, dominated by the
/// interpolation error rather than by the inequality itself.
inline constexpr double kTolLemmaInterp = 1e-4;

/// The two-by-two multiplier family certifying the integrated-error
/// operator: M = [[beta X + eta Y, Y], [Y, -X]], combining a gain channel
/// (scaled by X) and a shifted-passivity channel (scaled by Y).
struct Multiplier {
  double beta;
  double eta;
  double X;
  double Y;

  Multiplier(double beta_, double eta_, double X_, double Y_);

  Eigen::Matrix2d matrix() const;
};

/// (beta, eta) for the operator bounds implied by `b`:
///   beta = ( 2(tau_sample + tau_response)/pi
///            + sqrt((tau_sample + tau_response) * tau_natural) )^2
///   eta  = tau_natural.
std::pair<double, double> beta_eta(const AsyncBounds& b);

/// Outcome of one empirical operator trial.
struct TrialResult {
  /// ||delta_apply(p, v)|| / (sqrt(beta) * ||v||); gain trials only.
  double ratio = 0.0;
  /// <delta_apply(p,v), v> + (tau_natural/2)||v||^2; passivity trials only.
  double slack = 0.0;
  double norm_v = 0.0;
  double norm_w = 0.0;
};

/// Empirical check of the L2 gain bound on one admissible profile. The
/// profile must satisfy the staleness/gap invariants for `b`, and v must
/// vanish on the trailing tau_sample + tau_response window so the
/// integrated error settles inside the horizon.
TrialResult gain_trial(const DelayProfile& p, const AsyncBounds& b,
                       const PiecewiseSignal& v);

/// Empirical check of the shifted-passivity bound; same preconditions,
/// except an identically zero input is allowed (slack is then zero).
TrialResult passivity_trial(const DelayProfile& p, const AsyncBounds& b,
                            const PiecewiseSignal& v);

/// Quadratic form <[v; w], M [v; w]> in L2:
///   beta X ||v||^2 - X ||w||^2 + 2 Y <w, v> + eta Y ||v||^2.
/// Non-negative (up to tolerance) whenever w is the integrated error of an
/// admissible profile matching (beta, eta).
double iqc_residual(const PiecewiseSignal& v, const PiecewiseSignal& w,
                    const Multiplier& m);

enum class TrialKind { gain, passivity };

struct TrialRow {
  std::uint64_t seed = 0;
  double value = 0.0;   // ratio for gain batches, slack for passivity
  double norm_v = 0.0;
  bool pass = false;
};

struct TrialBatchConfig {
  AsyncBounds bounds;
  double input_horizon;       // support of the random inputs
  GenMode mode = GenMode::jittered_delay;
  int count = 100;
  std::uint64_t base_seed = 1;
  int max_degree = 3;
  int segments = 8;
  int max_threads = 0;        // 0 = hardware default
};

/// Runs `count` independent trials, each with its own seeded generator for
/// the event pair and the input. Deterministic in base_seed regardless of
/// the thread count; rows come back in seed order.
std::vector<TrialRow> lemma_trial_batch(TrialKind kind,
                                        const TrialBatchConfig& cfg);

}  // namespace sahiqc

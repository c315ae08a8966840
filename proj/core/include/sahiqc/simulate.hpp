#pragma once

#include <vector>

#include "sahiqc/events.hpp"
#include "sahiqc/piecewise.hpp"
#include "sahiqc/state_space.hpp"

namespace sahiqc {

/// One recorded filter-output sample.
struct SampleRecord {
  double time;
  double value;
};

/// One actuator update: at `time` the held value switches to `value`, the
/// sample taken at `source`.
struct UpdateRecord {
  double time;
  double source;
  double value;
};

/// Full record of one sampled-data run. The continuous signals are exact at
/// every internal step boundary and cubic Hermite interpolants in between;
/// `u`, `held` and `d` are exactly piecewise constant.
struct LoopTrace {
  PiecewiseSignal u, y, z, v, w, held, d;
  std::vector<SampleRecord> samples;
  std::vector<UpdateRecord> applied;
  double norm_d;
  double norm_z;
  /// Euclidean norm of the stacked continuous state when the disturbance
  /// support ends, and at the end of the run (decay evidence).
  double state_norm_input_end;
  double state_norm_horizon;
};

/// Response of `sys` to a piecewise-constant input from rest. States
/// advance by one matrix exponential per constant-input interval, so the
/// trajectory is step-size independent; the returned output is a piecewise
/// cubic on substeps chosen so that ||A||*dt <= 0.02.
PiecewiseSignal lti_response(const StateSpace& sys,
                             const PiecewiseSignal& input);

/// Event-exact simulation of the sampled-data loop u = d - held, y = P u,
/// with `held` the zero-order-held feedback: the filter output C_f x_f is
/// recorded at every sample instant and activated at the update instant
/// that consumes it. W shapes the reported performance output z = W u.
/// All initial states are zero; d must be piecewise constant; F strictly
/// proper (otherwise the sampled loop has an algebraic loop).
LoopTrace simulate_loop(const StateSpace& P, const StateSpace& F,
                        const StateSpace& W, const EventSequence& samples,
                        const EventSequence& updates,
                        const PiecewiseSignal& d);

/// ||z|| / ||d|| from the exact trace norms. The disturbance must carry
/// positive energy.
double empirical_gain(const LoopTrace& trace);

}  // namespace sahiqc

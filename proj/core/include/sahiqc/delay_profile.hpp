#pragma once

#include <cstddef>
#include <vector>

#include "sahiqc/events.hpp"

namespace sahiqc {

/// One hold-update instant: at `time` the held output switches to the value
/// sampled at `source` (the latest sample at or before `time`). Updates
/// whose source sample is unchanged from the previous update are kept but
/// flagged no-op; the composed delay is continuous across them.
struct DelayUpdate {
  double time;
  double source;
  std::size_t source_index;
  bool no_op;
};

/// The composed delay of a two-stage sample/hold cascade, reduced to a
/// single time-varying delay sigma(t) = t - source(t) with slope 1 between
/// effective updates and downward resets at them.
class DelayProfile {
 public:
  DelayProfile(std::vector<DelayUpdate> updates, double horizon);

  const std::vector<DelayUpdate>& updates() const { return updates_; }
  /// Indices into updates() where the source actually changes.
  const std::vector<std::size_t>& effective() const { return effective_; }
  double horizon() const { return horizon_; }

  /// Age of the value feeding the output at time t in [0, horizon).
  double sigma(double t) const;
  /// Sample instant feeding the output at time t.
  double source_time(double t) const;
  /// Index of that sample in the originating sample sequence.
  std::size_t source_index(double t) const;

  /// Largest post-reset delay over effective updates (bounded by
  /// tau_natural for admissible pairs).
  double max_reset() const;
  /// Largest gap between consecutive effective updates, including the tail
  /// to the horizon (bounded by tau_prime + tau_circ for admissible pairs).
  double max_effective_gap() const;

 private:
  const DelayUpdate& active(double t) const;

  std::vector<DelayUpdate> updates_;
  std::vector<std::size_t> effective_;
  double horizon_;
};

/// Builds the composed profile for samples Tp consumed by updates Ts over
/// [0, horizon). Requires horizon <= both sequence horizons so every
/// update's source is known.
DelayProfile delay_profile(const EventSequence& samples,
                           const EventSequence& updates, double horizon);

}  // namespace sahiqc

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sahiqc {

/// Strictly increasing event instants on [0, horizon), first event exactly
/// at 0. Finite stand-in for the one-sided infinite sequences the operators
/// are defined over; everything downstream works on [0, horizon].
class EventSequence {
 public:
  EventSequence(std::vector<double> times, double horizon);

  const std::vector<double>& times() const { return times_; }
  double horizon() const { return horizon_; }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t k) const { return times_[k]; }
  double back() const { return times_.back(); }

  /// Index of the last event <= t. Requires t >= 0 (there is always such an
  /// event because the sequence starts at 0).
  std::size_t floor_index(double t) const;

 private:
  std::vector<double> times_;
  double horizon_;
};

/// The four admissibility bounds: max sample gap, max update gap, max
/// sample-to-update response delay, max staleness of the value an update
/// activates.
struct AsyncBounds {
  double tau_prime;
  double tau_star;
  double tau_circ;
  double tau_natural;

  AsyncBounds(double tau_prime, double tau_star, double tau_circ,
              double tau_natural);
};

/// Bounds for the one-parameter family: sample period h, relative update
/// slack delta. Yields (h, (1+delta)h, delta*h, h*min(delta,1)).
AsyncBounds bounds_from_h_delta(double h, double delta);

struct Violation {
  enum class Kind {
    sample_gap,   // t'_{k+1} - t'_k > tau_prime
    update_gap,   // t*_{k+1} - t*_k > tau_star
    response,     // phi_k - t'_k > tau_circ
    staleness     // phi_k - (last sample <= phi_k) > tau_natural
  };
  Kind kind;
  std::size_t index;
  double value;
  double limit;
};

std::string to_string(Violation::Kind k);

struct ValidationReport {
  bool pass = true;
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
};

/// Checks the four gap/response/staleness constraints for the pair
/// (samples, updates) against bounds b. phi_k is the first update at or
/// after sample k (co-timed events count: the update reads the new value).
/// Samples whose phi_k falls outside the update list produce a coverage
/// warning, not a failure.
ValidationReport validate(const EventSequence& samples,
                          const EventSequence& updates, const AsyncBounds& b);

enum class GenMode { synchronous, jittered_delay, down_sampling };

GenMode gen_mode_from_string(const std::string& s);
std::string to_string(GenMode m);

/// Minimum sample gap used by generators, as a fraction of tau_prime.
inline constexpr double kMinGapFraction = 1.0 / 20.0;

/// Draws an admissible (samples, updates) pair on [0, horizon) for the
/// given bounds. Deterministic for a fixed seed. Throws PreconditionError
/// when the mode cannot realize the bounds (e.g. down-sampling with
/// tau_circ = 0).
std::pair<EventSequence, EventSequence> gen_admissible(const AsyncBounds& b,
                                                       double horizon,
                                                       GenMode mode,
                                                       std::uint64_t seed);

}  // namespace sahiqc

#include "sahiqc/events.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sahiqc/errors.hpp"
#include "sahiqc/rng.hpp"

namespace sahiqc {

EventSequence::EventSequence(std::vector<double> times, double horizon)
    : times_(std::move(times)), horizon_(horizon) {
  if (times_.empty()) throw PreconditionError("event sequence is empty");
  if (times_.front() != 0.0)
    throw PreconditionError("event sequence must start at t = 0");
  for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
    if (!(times_[k + 1] > times_[k]))
      throw PreconditionError("event times must be strictly increasing");
  }
  if (!(horizon_ > times_.back()))
    throw PreconditionError("horizon must exceed the last event time");
  if (!std::isfinite(horizon_))
    throw PreconditionError("horizon must be finite");
}

std::size_t EventSequence::floor_index(double t) const {
  if (t < 0.0) throw PreconditionError("floor_index requires t >= 0");
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

AsyncBounds::AsyncBounds(double tp, double ts, double tc, double tn)
    : tau_prime(tp), tau_star(ts), tau_circ(tc), tau_natural(tn) {
  if (!(tau_prime > 0.0) || !(tau_star > 0.0))
    throw PreconditionError("tau_prime and tau_star must be positive");
  if (tau_circ < 0.0 || tau_circ > tau_star)
    throw PreconditionError("tau_circ must lie in [0, tau_star]");
  if (tau_natural < 0.0 || tau_natural > std::min(tau_circ, tau_prime))
    throw PreconditionError(
        "tau_natural must lie in [0, min(tau_circ, tau_prime)]");
}

AsyncBounds bounds_from_h_delta(double h, double delta) {
  if (!(h > 0.0)) throw PreconditionError("h must be positive");
  if (delta < 0.0) throw PreconditionError("delta must be nonnegative");
  return AsyncBounds(h, (1.0 + delta) * h, delta * h,
                     h * std::min(delta, 1.0));
}

std::string to_string(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::sample_gap: return "sample_gap";
    case Violation::Kind::update_gap: return "update_gap";
    case Violation::Kind::response: return "response";
    case Violation::Kind::staleness: return "staleness";
  }
  return "unknown";
}

ValidationReport validate(const EventSequence& samples,
                          const EventSequence& updates, const AsyncBounds& b) {
  ValidationReport report;
  auto flag = [&](Violation::Kind kind, std::size_t k, double value,
                  double limit) {
    report.violations.push_back({kind, k, value, limit});
  };
  // Sequences designed to sit exactly on a bound can overshoot it by a few
  // ulps once the instants are rounded to doubles; a relative slop keeps
  // such boundary-tight inputs from reading as violations.
  auto exceeds = [](double value, double limit) {
    return value > limit + 1e-12 * (1.0 + limit);
  };

  const auto& tp = samples.times();
  const auto& ts = updates.times();

  for (std::size_t k = 0; k + 1 < tp.size(); ++k) {
    double gap = tp[k + 1] - tp[k];
    if (exceeds(gap, b.tau_prime))
      flag(Violation::Kind::sample_gap, k, gap, b.tau_prime);
  }
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    double gap = ts[k + 1] - ts[k];
    if (exceeds(gap, b.tau_star))
      flag(Violation::Kind::update_gap, k, gap, b.tau_star);
  }

  // Trailing coverage: an admissible extension past the horizon would need
  // an event within the gap bound of the last listed one.
  if (exceeds(samples.horizon() - tp.back(), b.tau_prime))
    report.warnings.push_back(
        "sample sequence stops more than tau_prime before its horizon");
  if (exceeds(updates.horizon() - ts.back(), b.tau_star))
    report.warnings.push_back(
        "update sequence stops more than tau_star before its horizon");

  std::size_t unchecked = 0;
  for (std::size_t k = 0; k < tp.size(); ++k) {
    // First update at or after sample k (co-timed update sees the sample).
    auto it = std::lower_bound(ts.begin(), ts.end(), tp[k]);
    if (it == ts.end()) {
      ++unchecked;
      continue;
    }
    double phi = *it;
    double response = phi - tp[k];
    if (exceeds(response, b.tau_circ))
      flag(Violation::Kind::response, k, response, b.tau_circ);
    double staleness = phi - tp[samples.floor_index(phi)];
    if (exceeds(staleness, b.tau_natural))
      flag(Violation::Kind::staleness, k, staleness, b.tau_natural);
  }
  if (unchecked > 0) {
    std::ostringstream msg;
    msg << unchecked << " trailing sample(s) have no update at or after them; "
        << "response/staleness constraints unchecked there";
    report.warnings.push_back(msg.str());
  }

  report.pass = report.violations.empty();
  return report;
}

GenMode gen_mode_from_string(const std::string& s) {
  if (s == "synchronous") return GenMode::synchronous;
  if (s == "jittered-delay") return GenMode::jittered_delay;
  if (s == "down-sampling") return GenMode::down_sampling;
  throw PreconditionError("unknown generator mode: " + s);
}

std::string to_string(GenMode m) {
  switch (m) {
    case GenMode::synchronous: return "synchronous";
    case GenMode::jittered_delay: return "jittered-delay";
    case GenMode::down_sampling: return "down-sampling";
  }
  return "unknown";
}

namespace {

std::pair<EventSequence, EventSequence> gen_synchronous(const AsyncBounds& b,
                                                        double horizon) {
  double gap = std::min(b.tau_prime, b.tau_star);
  std::vector<double> t;
  for (std::size_t k = 0; static_cast<double>(k) * gap < horizon; ++k)
    t.push_back(static_cast<double>(k) * gap);
  return {EventSequence(t, horizon), EventSequence(t, horizon)};
}

std::pair<EventSequence, EventSequence> gen_jittered(const AsyncBounds& b,
                                                     double horizon,
                                                     Rng& rng) {
  double g_min = kMinGapFraction * b.tau_prime;
  double g_max = std::min(b.tau_prime, b.tau_star);
  if (g_max < g_min)
    throw PreconditionError(
        "jittered-delay infeasible: tau_star below the minimum sample gap");

  std::vector<double> tp{0.0};
  while (true) {
    double next = tp.back() + rng.uniform(g_min, g_max);
    if (next >= horizon) break;
    tp.push_back(next);
  }

  // Update k trails sample k by delta_k < gap_k, so updates stay ordered
  // and each one reads its own sample. The extra clamp keeps consecutive
  // update gaps within tau_star when tau_star < tau_prime + tau_natural.
  std::vector<double> del(tp.size(), 0.0);  // del[0] = 0: both start at 0
  for (std::size_t k = 1; k < tp.size(); ++k) {
    double gap = (k + 1 < tp.size() ? tp[k + 1] : horizon) - tp[k];
    double prev_gap = tp[k] - tp[k - 1];
    double hi = std::min({b.tau_natural, gap,
                          del[k - 1] + b.tau_star - prev_gap});
    del[k] = hi > 0.0 ? rng.uniform(0.0, hi) : 0.0;
  }

  std::vector<double> ts(tp.size());
  for (std::size_t k = 0; k < tp.size(); ++k) ts[k] = tp[k] + del[k];
  while (!ts.empty() && ts.back() >= horizon) ts.pop_back();
  return {EventSequence(tp, horizon), EventSequence(ts, horizon)};
}

std::pair<EventSequence, EventSequence> gen_down_sampling(const AsyncBounds& b,
                                                          double horizon,
                                                          Rng& rng) {
  double g_min = kMinGapFraction * b.tau_prime;
  // Cap so that skipping one sample between co-timed updates is always
  // admissible: the stale sample sits at most one gap (<= tau_circ) before
  // its update, and the update gap spans two sample gaps (<= tau_star).
  double g_max = std::min({b.tau_prime, b.tau_circ, 0.5 * b.tau_star});
  if (g_max < g_min)
    throw PreconditionError(
        "down-sampling infeasible: bounds leave no room to skip a sample "
        "(need min(tau_prime, tau_circ, tau_star/2) >= tau_prime/20)");

  std::vector<double> tp{0.0};
  while (true) {
    double next = tp.back() + rng.uniform(g_min, g_max);
    if (next >= horizon) break;
    tp.push_back(next);
  }

  std::vector<double> ts{0.0};
  bool skipped = false;
  std::size_t k = 0;
  while (k + 1 < tp.size()) {
    bool skip = k + 2 < tp.size() && rng.coin(0.4);
    k += skip ? 2 : 1;
    skipped = skipped || skip;
    ts.push_back(tp[k]);
  }
  if (!skipped && ts.size() >= 3) {
    // A strict subset is part of the contract; drop one interior update.
    ts.erase(ts.begin() + static_cast<std::ptrdiff_t>(1 + rng.index(ts.size() - 2)));
  }
  return {EventSequence(tp, horizon), EventSequence(ts, horizon)};
}

}  // namespace

std::pair<EventSequence, EventSequence> gen_admissible(const AsyncBounds& b,
                                                       double horizon,
                                                       GenMode mode,
                                                       std::uint64_t seed) {
  if (!(horizon >= 10.0 * b.tau_prime))
    throw PreconditionError("horizon must be at least 10 * tau_prime");

  Rng rng(seed);
  std::pair<EventSequence, EventSequence> pair =
      mode == GenMode::synchronous  ? gen_synchronous(b, horizon)
      : mode == GenMode::jittered_delay ? gen_jittered(b, horizon, rng)
                                        : gen_down_sampling(b, horizon, rng);

  ValidationReport check = validate(pair.first, pair.second, b);
  if (!check.pass)
    throw NumericError("generator produced an inadmissible pair (" +
                       to_string(check.violations.front().kind) + ")");
  return pair;
}

}  // namespace sahiqc

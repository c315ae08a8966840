#include "sahiqc/delay_profile.hpp"

#include <algorithm>
#include <cmath>

#include "sahiqc/errors.hpp"

namespace sahiqc {

DelayProfile::DelayProfile(std::vector<DelayUpdate> updates, double horizon)
    : updates_(std::move(updates)), horizon_(horizon) {
  if (updates_.empty()) throw PreconditionError("delay profile has no updates");
  if (updates_.front().time != 0.0)
    throw PreconditionError("first update must be at t = 0");
  for (std::size_t l = 0; l < updates_.size(); ++l) {
    const DelayUpdate& u = updates_[l];
    if (u.source > u.time)
      throw PreconditionError("update source must not lie in the future");
    if (l > 0 && !(u.time > updates_[l - 1].time))
      throw PreconditionError("update times must be strictly increasing");
    if (l > 0 && u.source < updates_[l - 1].source)
      throw PreconditionError("update sources must be nondecreasing");
    bool no_op = l > 0 && u.source_index == updates_[l - 1].source_index;
    if (u.no_op != no_op)
      throw PreconditionError("no-op flag inconsistent with source indices");
    if (!no_op) effective_.push_back(l);
  }
  if (!(horizon_ > updates_.back().time))
    throw PreconditionError("horizon must exceed the last update time");
}

const DelayUpdate& DelayProfile::active(double t) const {
  if (t < 0.0 || t >= horizon_)
    throw PreconditionError("time outside [0, horizon)");
  auto it = std::upper_bound(
      updates_.begin(), updates_.end(), t,
      [](double lhs, const DelayUpdate& u) { return lhs < u.time; });
  return *(it - 1);
}

double DelayProfile::sigma(double t) const { return t - active(t).source; }

double DelayProfile::source_time(double t) const { return active(t).source; }

std::size_t DelayProfile::source_index(double t) const {
  return active(t).source_index;
}

double DelayProfile::max_reset() const {
  double m = 0.0;
  for (std::size_t l : effective_)
    m = std::max(m, updates_[l].time - updates_[l].source);
  return m;
}

double DelayProfile::max_effective_gap() const {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < effective_.size(); ++i)
    m = std::max(m, updates_[effective_[i + 1]].time -
                        updates_[effective_[i]].time);
  m = std::max(m, horizon_ - updates_[effective_.back()].time);
  return m;
}

DelayProfile delay_profile(const EventSequence& samples,
                           const EventSequence& updates, double horizon) {
  if (!(horizon > 0.0) || horizon > samples.horizon() ||
      horizon > updates.horizon())
    throw PreconditionError(
        "profile horizon must be positive and within both sequence horizons");

  std::vector<DelayUpdate> out;
  for (std::size_t l = 0; l < updates.size(); ++l) {
    double time = updates[l];
    if (time >= horizon) break;
    std::size_t q = samples.floor_index(time);
    bool no_op = !out.empty() && out.back().source_index == q;
    out.push_back({time, samples[q], q, no_op});
  }
  return DelayProfile(std::move(out), horizon);
}

}  // namespace sahiqc

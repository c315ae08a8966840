#include "sahiqc/simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include <unsupported/Eigen/MatrixFunctions>

#include "sahiqc/delay_profile.hpp"
#include "sahiqc/errors.hpp"

namespace sahiqc {

namespace {

/// Collects exact (value, derivative) pairs at substep boundaries into a
/// piecewise cubic Hermite signal.
class HermiteBuilder {
 public:
  void add(double t1, double width, double p0, double m0, double p1,
           double m1) {
    double c2 = (3.0 * (p1 - p0) - (2.0 * m0 + m1) * width) / (width * width);
    double c3 =
        (2.0 * (p0 - p1) + (m0 + m1) * width) / (width * width * width);
    breaks_.push_back(t1);
    segments_.push_back({p0, m0, c2, c3});
  }

  PiecewiseSignal take() && {
    return PiecewiseSignal(std::move(breaks_), std::move(segments_));
  }

 private:
  std::vector<double> breaks_{0.0};
  std::vector<PiecewiseSignal::Coeffs> segments_;
};

/// Constant-input propagator: one matrix exponential of the augmented
/// [[A, B],[0, 0]] per distinct step width, reused across the run.
class Stepper {
 public:
  Stepper(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
      : A_(A), B_(B), n_(A.rows()) {}

  /// Advances x across `width` under constant input u.
  void advance(Eigen::VectorXd& x, double u, double width) {
    const Eigen::MatrixXd& E = exponential(width);
    x = E.topLeftCorner(n_, n_) * x + E.topRightCorner(n_, 1) * u;
  }

  /// Substep count keeping ||A||*dt small enough for the cubic output
  /// interpolants to stay below ~1e-9 relative error.
  int substeps(double width) const {
    double scale = A_.norm() * width / 0.02;
    if (!(scale > 1.0)) return 1;
    return static_cast<int>(std::ceil(scale));
  }

 private:
  const Eigen::MatrixXd& exponential(double width) {
    std::uint64_t key = std::bit_cast<std::uint64_t>(width);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n_ + 1, n_ + 1);
    aug.topLeftCorner(n_, n_) = A_ * width;
    aug.topRightCorner(n_, 1) = B_ * width;
    return cache_.emplace(key, aug.exp()).first->second;
  }

  Eigen::MatrixXd A_, B_;
  Eigen::Index n_;
  std::unordered_map<std::uint64_t, Eigen::MatrixXd> cache_;
};

void require_siso(const StateSpace& sys, const char* name) {
  if (sys.inputs() != 1 || sys.outputs() != 1)
    throw PreconditionError(std::string(name) + " must be SISO");
}

/// Sorted unique time points in [0, horizon], closer than the breakpoint
/// tolerance merged onto the earlier representative.
std::vector<double> merge_times(std::vector<double> pts, double horizon) {
  pts.push_back(0.0);
  pts.push_back(horizon);
  std::sort(pts.begin(), pts.end());
  std::vector<double> merged;
  for (double t : pts) {
    if (t < 0.0 || t > horizon) continue;
    if (merged.empty() ||
        t - merged.back() > kBreakpointTol * (1.0 + std::abs(t)))
      merged.push_back(t);
  }
  merged.back() = horizon;
  return merged;
}

bool matches(double t, double event) {
  return std::abs(t - event) <= kBreakpointTol * (1.0 + std::abs(event));
}

/// End of the last segment with any nonzero coefficient (0 when the signal
/// is identically zero).
double support_end(const PiecewiseSignal& f) {
  const auto& segs = f.segments();
  for (std::size_t i = segs.size(); i-- > 0;) {
    for (double c : segs[i])
      if (c != 0.0) return f.breakpoints()[i + 1];
  }
  return 0.0;
}

}  // namespace

PiecewiseSignal lti_response(const StateSpace& sys,
                             const PiecewiseSignal& input) {
  require_siso(sys, "system");
  if (input.degree() != 0)
    throw PreconditionError("input must be piecewise constant");

  Stepper stepper(sys.A, sys.B);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.states());
  double dval = sys.D(0, 0);
  HermiteBuilder out;

  const auto& breaks = input.breakpoints();
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double u = input.segments()[i][0];
    int m = stepper.substeps(breaks[i + 1] - breaks[i]);
    double dt = (breaks[i + 1] - breaks[i]) / m;
    for (int j = 0; j < m; ++j) {
      double p0 = (sys.C * x)(0, 0) + dval * u;
      double m0 = (sys.C * (sys.A * x + sys.B * u))(0, 0);
      stepper.advance(x, u, dt);
      double p1 = (sys.C * x)(0, 0) + dval * u;
      double m1 = (sys.C * (sys.A * x + sys.B * u))(0, 0);
      double t1 = j + 1 == m ? breaks[i + 1] : breaks[i] + (j + 1) * dt;
      out.add(t1, dt, p0, m0, p1, m1);
    }
  }
  return std::move(out).take();
}

LoopTrace simulate_loop(const StateSpace& P, const StateSpace& F,
                        const StateSpace& W, const EventSequence& samples,
                        const EventSequence& updates,
                        const PiecewiseSignal& d) {
  require_siso(P, "plant");
  require_siso(F, "filter");
  require_siso(W, "weight");
  if (F.D(0, 0) != 0.0)
    throw PreconditionError(
        "filter feedthrough closes an algebraic loop with the hold");
  if (d.degree() != 0)
    throw PreconditionError("disturbance must be piecewise constant");

  const double horizon = d.horizon();
  if (samples.back() >= horizon || updates.back() >= horizon)
    throw PreconditionError("event outside the simulation horizon");
  DelayProfile profile = delay_profile(samples, updates, horizon);

  const Eigen::Index np = P.states(), nf = F.states(), nw = W.states();
  const Eigen::Index n = np + nf + nw;
  const double dp = P.D(0, 0), dw = W.D(0, 0);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.block(0, 0, np, np) = P.A;
  A.block(np, 0, nf, np) = F.B * P.C;
  A.block(np, np, nf, nf) = F.A;
  A.block(np + nf, np + nf, nw, nw) = W.A;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
  B.block(0, 0, np, 1) = P.B;
  B.block(np, 0, nf, 1) = F.B * dp;
  B.block(np + nf, 0, nw, 1) = W.B;

  // Output rows over the stacked state (exact values and, with the input
  // term, exact derivatives).
  Eigen::RowVectorXd row_y = Eigen::RowVectorXd::Zero(n);
  row_y.segment(0, np) = P.C;
  Eigen::RowVectorXd row_z = Eigen::RowVectorXd::Zero(n);
  row_z.segment(np + nf, nw) = W.C;
  Eigen::RowVectorXd row_fy = Eigen::RowVectorXd::Zero(n);
  row_fy.segment(np, nf) = F.C;
  Eigen::RowVectorXd row_v = Eigen::RowVectorXd::Zero(n);
  row_v.segment(0, np) = (F.C * F.B)(0, 0) * P.C;
  row_v.segment(np, nf) = F.C * F.A;
  const double dv = (F.C * F.B)(0, 0) * dp;

  std::vector<double> event_pts;
  event_pts.insert(event_pts.end(), samples.times().begin(),
                   samples.times().end());
  event_pts.insert(event_pts.end(), updates.times().begin(),
                   updates.times().end());
  const auto& dbreaks = d.breakpoints();
  event_pts.insert(event_pts.end(), dbreaks.begin(), dbreaks.end());
  std::vector<double> grid = merge_times(std::move(event_pts), horizon);

  Stepper stepper(A, B);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  double held = 0.0;

  std::vector<double> sample_values(samples.size());
  std::vector<SampleRecord> sample_log;
  std::vector<UpdateRecord> update_log;
  sample_log.reserve(samples.size());
  update_log.reserve(profile.updates().size());
  std::size_t next_sample = 0, next_update = 0;

  HermiteBuilder y_sig, z_sig, v_sig, w_sig;
  std::vector<double> pc_breaks{0.0};
  std::vector<PiecewiseSignal::Coeffs> u_segs, held_segs;

  const double d_end = support_end(d);
  double norm_at_input_end = d_end == 0.0 ? 0.0 : -1.0;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];

    // Samples strictly precede updates at a shared instant, so an update
    // may consume the sample taken at its own time (zero response delay).
    while (next_sample < samples.size() && matches(t, samples[next_sample])) {
      double value = (row_fy * x)(0, 0);
      sample_values[next_sample] = value;
      sample_log.push_back({samples[next_sample], value});
      ++next_sample;
    }
    while (next_update < profile.updates().size() &&
           matches(t, profile.updates()[next_update].time)) {
      const DelayUpdate& up = profile.updates()[next_update];
      held = sample_values.at(up.source_index);
      update_log.push_back({up.time, up.source, held});
      ++next_update;
    }
    if (norm_at_input_end < 0.0 && t >= d_end - kBreakpointTol)
      norm_at_input_end = x.norm();
    if (i + 1 == grid.size()) break;

    double u_now = d(t) - held;
    pc_breaks.push_back(grid[i + 1]);
    u_segs.push_back({u_now});
    held_segs.push_back({held});

    int m = stepper.substeps(grid[i + 1] - t);
    double dt = (grid[i + 1] - t) / m;
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd xdot = A * x + B * u_now;
      double y0 = (row_y * x)(0, 0) + dp * u_now;
      double ydot0 = (row_y * xdot)(0, 0);
      double z0 = (row_z * x)(0, 0) + dw * u_now;
      double zdot0 = (row_z * xdot)(0, 0);
      double v0 = (row_v * x)(0, 0) + dv * u_now;
      double vdot0 = (row_v * xdot)(0, 0);
      double w0 = (row_fy * x)(0, 0) - held;
      double wdot0 = (row_fy * xdot)(0, 0);

      stepper.advance(x, u_now, dt);
      Eigen::VectorXd xdot1 = A * x + B * u_now;
      double t1 = j + 1 == m ? grid[i + 1] : t + (j + 1) * dt;
      y_sig.add(t1, dt, y0, ydot0, (row_y * x)(0, 0) + dp * u_now,
                (row_y * xdot1)(0, 0));
      z_sig.add(t1, dt, z0, zdot0, (row_z * x)(0, 0) + dw * u_now,
                (row_z * xdot1)(0, 0));
      v_sig.add(t1, dt, v0, vdot0, (row_v * x)(0, 0) + dv * u_now,
                (row_v * xdot1)(0, 0));
      w_sig.add(t1, dt, w0, wdot0, (row_fy * x)(0, 0) - held,
                (row_fy * xdot1)(0, 0));
    }
  }

  PiecewiseSignal u_sig(pc_breaks, std::move(u_segs));
  PiecewiseSignal held_sig(std::move(pc_breaks), std::move(held_segs));
  PiecewiseSignal z_done = std::move(z_sig).take();
  double norm_d = l2_norm(d);
  double norm_z = l2_norm(z_done);

  return LoopTrace{std::move(u_sig),
                   std::move(y_sig).take(),
                   std::move(z_done),
                   std::move(v_sig).take(),
                   std::move(w_sig).take(),
                   std::move(held_sig),
                   d,
                   std::move(sample_log),
                   std::move(update_log),
                   norm_d,
                   norm_z,
                   norm_at_input_end < 0.0 ? 0.0 : norm_at_input_end,
                   x.norm()};
}

double empirical_gain(const LoopTrace& trace) {
  if (!(trace.norm_d > 0.0))
    throw PreconditionError("gain is undefined for zero input energy");
  return trace.norm_z / trace.norm_d;
}

}  // namespace sahiqc

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "sahiqc/delay_profile.hpp"
#include "sahiqc/errors.hpp"
#include "sahiqc/events.hpp"
#include "sahiqc/multiplier.hpp"
#include "sahiqc/piecewise.hpp"
#include "sahiqc/rng.hpp"
#include "test_util.hpp"

using namespace sahiqc;
using std::numbers::pi;

namespace {

/// Synchronous sample-and-hold with period h over n periods plus one
/// settle period: events at 0, h, ..., n*h, horizon (n+1)*h.
struct SyncSetup {
  AsyncBounds bounds;
  DelayProfile profile;
  double horizon;
};

SyncSetup sync_setup(double h, int n) {
  AsyncBounds b(h, h, 0.0, 0.0);
  double horizon = (n + 1) * h;
  auto [samples, updates] =
      gen_admissible(b, horizon, GenMode::synchronous, 7);
  return {b, delay_profile(samples, updates, horizon), horizon};
}

PiecewiseSignal step_support(double level, double support_end,
                             double horizon) {
  return PiecewiseSignal({0.0, support_end, horizon}, {{level}, {0.0}});
}

}  // namespace

TEST_CASE("beta_eta matches the closed-form bound parameters") {
  SUBCASE("all four bounds active") {
    auto [beta, eta] = beta_eta(AsyncBounds(1.0, 2.0, 1.0, 1.0));
    double root = 4.0 / pi + std::sqrt(2.0);
    CHECK(beta == doctest::Approx(root * root).epsilon(1e-14));
    CHECK(eta == 1.0);
  }
  SUBCASE("synchronous bounds collapse to the sampling gain") {
    for (double h : {0.25, 1.0, 3.0}) {
      auto [beta, eta] = beta_eta(AsyncBounds(h, h, 0.0, 0.0));
      CHECK(beta == doctest::Approx(4.0 * h * h / (pi * pi)).epsilon(1e-14));
      CHECK(eta == 0.0);
    }
  }
  SUBCASE("fresh values keep the sqrt term out even with slow updates") {
    auto [beta, eta] = beta_eta(AsyncBounds(1.0, 3.0, 2.0, 0.0));
    CHECK(beta == doctest::Approx(36.0 / (pi * pi)).epsilon(1e-14));
    CHECK(eta == 0.0);
  }
}

TEST_CASE("multiplier matrix layout and validation") {
  Multiplier m(7.0, 0.5, 2.0, 3.0);
  Eigen::Matrix2d M = m.matrix();
  CHECK(M(0, 0) == doctest::Approx(7.0 * 2.0 + 0.5 * 3.0));
  CHECK(M(0, 1) == 3.0);
  CHECK(M(1, 0) == 3.0);
  CHECK(M(1, 1) == -2.0);
  CHECK(M.isApprox(M.transpose()));

  CHECK_THROWS_AS(Multiplier(-1.0, 0.0, 1.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(Multiplier(1.0, -0.1, 1.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(Multiplier(1.0, 0.0, -1.0, 1.0), PreconditionError);
  CHECK_THROWS_AS(Multiplier(1.0, 0.0, 1.0, -1.0), PreconditionError);
}

TEST_CASE("gain trial on the synchronous constant input is closed-form") {
  double h = 0.1;
  int n = 50;
  SyncSetup s = sync_setup(h, n);
  PiecewiseSignal v = step_support(1.0, n * h, s.horizon);

  TrialResult r = gain_trial(s.profile, s.bounds, v);
  // Saw-tooth error: energy h^3/3 per period against the gain bound 2h/pi.
  CHECK(r.ratio == doctest::Approx(pi / (2.0 * std::sqrt(3.0))).epsilon(1e-9));
  CHECK(r.ratio <= 1.0 + kTolLemmaExact);
  CHECK(r.norm_v == doctest::Approx(std::sqrt(n * h)).epsilon(1e-12));
  CHECK(r.norm_w ==
        doctest::Approx(std::sqrt(n * h * h * h / 3.0)).epsilon(1e-12));

  SUBCASE("homogeneity: scaling the input leaves the ratio unchanged") {
    TrialResult rs = gain_trial(s.profile, s.bounds, v.scaled(-2.5));
    CHECK(rs.ratio == doctest::Approx(r.ratio).epsilon(1e-12));
  }
  SUBCASE("input vanishing on a subinterval stays within the bound") {
    PiecewiseSignal gappy({0.0, 1.0, 2.0, n * h, s.horizon},
                          {{1.0}, {0.0}, {-0.5}, {0.0}});
    TrialResult rg = gain_trial(s.profile, s.bounds, gappy);
    CHECK(rg.ratio <= 1.0 + kTolLemmaExact);
    CHECK(rg.ratio > 0.0);
  }
}

TEST_CASE("passivity trial on the synchronous constant input is closed-form") {
  double h = 0.1;
  int n = 50;
  SyncSetup s = sync_setup(h, n);
  PiecewiseSignal v = step_support(1.0, n * h, s.horizon);

  TrialResult r = passivity_trial(s.profile, s.bounds, v);
  CHECK(r.slack == doctest::Approx(n * h * h / 2.0).epsilon(1e-12));
  CHECK(r.slack >= -kTolLemmaExact * r.norm_v * r.norm_v);

  SUBCASE("zero input has zero slack") {
    TrialResult rz =
        passivity_trial(s.profile, s.bounds, PiecewiseSignal::zero(s.horizon));
    CHECK(rz.slack == 0.0);
    CHECK(rz.norm_v == 0.0);
  }
}

TEST_CASE("trial preconditions") {
  double h = 0.1;
  SyncSetup s = sync_setup(h, 50);

  SUBCASE("zero-norm input rejected for gain") {
    CHECK_THROWS_AS(
        gain_trial(s.profile, s.bounds, PiecewiseSignal::zero(s.horizon)),
        PreconditionError);
  }
  SUBCASE("input reaching into the settle window rejected") {
    CHECK_THROWS_AS(gain_trial(s.profile, s.bounds,
                               PiecewiseSignal::constant(1.0, s.horizon)),
                    PreconditionError);
  }
  SUBCASE("profile violating the bounds rejected") {
    // Same event pattern validated against much tighter staleness/gap
    // limits than it satisfies.
    AsyncBounds tight(h / 4.0, h / 4.0, 0.0, 0.0);
    PiecewiseSignal v = step_support(1.0, 5.0 - h / 4.0, 5.0);
    DelayProfile p = s.profile;
    CHECK_THROWS_AS(gain_trial(p, tight, v), PreconditionError);
  }
}

TEST_CASE("iqc_residual algebra") {
  double h = 0.1;
  int n = 50;
  SyncSetup s = sync_setup(h, n);
  PiecewiseSignal v = step_support(1.0, n * h, s.horizon);
  PiecewiseSignal w = delta_apply(s.profile, v);
  auto [beta, eta] = beta_eta(s.bounds);
  double nv2 = l2_inner(v, v);
  double nw2 = l2_inner(w, w);

  SUBCASE("pure gain reduction") {
    double r = iqc_residual(v, w, Multiplier(beta, eta, 1.0, 0.0));
    CHECK(r == doctest::Approx(beta * nv2 - nw2).epsilon(1e-12));
    CHECK(r > 0.0);
  }
  SUBCASE("pure passivity reduction") {
    double r = iqc_residual(v, w, Multiplier(beta, eta, 0.0, 1.0));
    CHECK(r == doctest::Approx(2.0 * (n * h * h / 2.0)).epsilon(1e-12));
  }
  SUBCASE("consistency with the trial operations") {
    TrialResult g = gain_trial(s.profile, s.bounds, v);
    double r = iqc_residual(v, w, Multiplier(beta, eta, 1.0, 0.0));
    CHECK(r == doctest::Approx(beta * nv2 * (1.0 - g.ratio * g.ratio))
                   .epsilon(1e-10));
    TrialResult p = passivity_trial(s.profile, s.bounds, v);
    double rp = iqc_residual(v, w, Multiplier(beta, eta, 0.0, 1.0));
    // eta = 0 here, so the residual is exactly twice the slack.
    CHECK(rp == doctest::Approx(2.0 * p.slack).epsilon(1e-12));
  }
  SUBCASE("quadratic scaling in the pair") {
    Multiplier m(beta, eta, 0.7, 1.3);
    double base = iqc_residual(v, w, m);
    for (double c : {-3.0, -0.5, 0.25, 2.0}) {
      double scaled = iqc_residual(v.scaled(c), w.scaled(c), m);
      CHECK(scaled == doctest::Approx(c * c * base).epsilon(1e-12));
    }
  }
}

TEST_CASE("multiplier cone: residual non-negative across the (X, Y) grid") {
  Rng rng(0xc09e5eedu);
  const std::vector<double> grid_vals = {0.0,  0.01, 0.0316, 0.1, 0.316,
                                         1.0,  3.16, 10.0,   31.6, 100.0};
  int done = 0;
  while (done < 200) {
    AsyncBounds b = testutil::random_bounds(rng);
    GenMode mode = done % 2 == 0 ? GenMode::jittered_delay
                                 : GenMode::synchronous;
    double tail = b.tau_prime + b.tau_circ;
    double support = 12.0 * b.tau_prime;
    double horizon = support + tail;
    auto [samples, updates] = gen_admissible(b, horizon, mode, rng.raw());
    DelayProfile p = delay_profile(samples, updates, horizon);
    PiecewiseSignal v = random_polynomial_signal(rng, horizon, support, 3, 6);
    PiecewiseSignal w = delta_apply(p, v);
    auto [beta, eta] = beta_eta(b);
    double nv2 = l2_inner(v, v);
    ++done;

    for (double X : grid_vals)
      for (double Y : grid_vals) {
        double r = iqc_residual(v, w, Multiplier(beta, eta, X, Y));
        CHECK(r >= -kTolLemmaExact * nv2);
      }
  }
}

TEST_CASE("beta is nondecreasing in each bound parameter") {
  Rng rng(0xbe7au);
  for (int i = 0; i < 200; ++i) {
    AsyncBounds b = testutil::random_bounds(rng);
    double base = beta_eta(b).first;
    double bump = rng.uniform(0.01, 0.5);

    CHECK(beta_eta(AsyncBounds(b.tau_prime + bump, b.tau_star + bump,
                               b.tau_circ, b.tau_natural))
              .first >= base);
    CHECK(beta_eta(AsyncBounds(b.tau_prime, b.tau_star + bump,
                               b.tau_circ + bump, b.tau_natural))
              .first >= base);
    double tn = std::min(b.tau_natural + bump,
                         std::min(b.tau_circ, b.tau_prime));
    if (tn >= b.tau_natural)
      CHECK(beta_eta(AsyncBounds(b.tau_prime, b.tau_star, b.tau_circ, tn))
                .first >= base);
  }
}

TEST_CASE("randomized lemma batches stay within their contracts") {
  SUBCASE("jittered profiles, gain") {
    TrialBatchConfig cfg{AsyncBounds(1.0, 1.5, 0.5, 0.4), 12.0,
                         GenMode::jittered_delay, 1000, 11, 3, 8, 0};
    std::vector<TrialRow> rows = lemma_trial_batch(TrialKind::gain, cfg);
    REQUIRE(rows.size() == 1000);
    for (const TrialRow& r : rows) {
      CHECK(r.pass);
      CHECK(r.value <= 1.0 + kTolLemmaExact);
      CHECK(r.value >= 0.0);
    }
  }
  SUBCASE("jittered profiles, passivity") {
    TrialBatchConfig cfg{AsyncBounds(1.0, 1.5, 0.5, 0.4), 12.0,
                         GenMode::jittered_delay, 1000, 12, 3, 8, 0};
    std::vector<TrialRow> rows = lemma_trial_batch(TrialKind::passivity, cfg);
    REQUIRE(rows.size() == 1000);
    for (const TrialRow& r : rows)
      CHECK(r.value >= -kTolLemmaExact * r.norm_v * r.norm_v);
  }
  SUBCASE("synchronous and down-sampling modes") {
    for (GenMode mode : {GenMode::synchronous, GenMode::down_sampling}) {
      AsyncBounds b = mode == GenMode::down_sampling
                          ? AsyncBounds(1.0, 3.0, 2.0, 0.0)
                          : AsyncBounds(0.25, 0.25, 0.0, 0.0);
      TrialBatchConfig cfg{b, 10.0, mode, 200, 21, 3, 8, 0};
      for (TrialKind kind : {TrialKind::gain, TrialKind::passivity})
        for (const TrialRow& r : lemma_trial_batch(kind, cfg)) CHECK(r.pass);
    }
  }
  SUBCASE("deterministic in the seed and thread count") {
    TrialBatchConfig cfg{AsyncBounds(1.0, 1.5, 0.5, 0.4), 12.0,
                         GenMode::jittered_delay, 50, 99, 3, 8, 0};
    std::vector<TrialRow> a = lemma_trial_batch(TrialKind::gain, cfg);
    cfg.max_threads = 1;
    std::vector<TrialRow> b = lemma_trial_batch(TrialKind::gain, cfg);
    cfg.max_threads = 3;
    std::vector<TrialRow> c = lemma_trial_batch(TrialKind::gain, cfg);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].seed == b[i].seed);
      CHECK(a[i].value == b[i].value);
      CHECK(b[i].value == c[i].value);
    }
  }
}

TEST_CASE("synchronous gain bound is nearly attained by slow sinusoids") {
  double h = 0.5;
  AsyncBounds b(h, h, 0.0, 0.0);
  Rng rng(0x51);
  double sup_ratio = 0.0;

  int freqs = 40, phases = 5;
  double w_lo = 0.3 * pi / (2.0 * h), w_hi = 1.5 * pi / (2.0 * h);
  for (int i = 0; i < freqs; ++i) {
    double omega = w_lo * std::pow(w_hi / w_lo, i / (freqs - 1.0));
    double t_off = 12.0 * 2.0 * pi / omega;
    double horizon = t_off + h;
    auto [samples, updates] =
        gen_admissible(b, horizon, GenMode::synchronous, 3);
    DelayProfile p = delay_profile(samples, updates, horizon);
    for (int k = 0; k < phases; ++k) {
      double phase = rng.uniform(0.0, 2.0 * pi);
      NearSinusoid ns = near_sinusoid(1.0, omega, phase, 0.0, t_off, horizon);
      TrialResult r = gain_trial(p, b, ns.signal);
      CHECK(r.ratio <= 1.0 + kTolLemmaInterp);
      sup_ratio = std::max(sup_ratio, r.ratio);
    }
  }
  CHECK(sup_ratio > 0.8);
}

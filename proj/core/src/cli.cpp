#include "sahiqc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sahiqc/certify.hpp"
#include "sahiqc/delay_profile.hpp"
#include "sahiqc/errors.hpp"
#include "sahiqc/events.hpp"
#include "sahiqc/multiplier.hpp"
#include "sahiqc/parallel.hpp"
#include "sahiqc/simulate.hpp"
#include "sahiqc/system_io.hpp"

namespace sahiqc::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

constexpr double kGridTol = 1e-12;

// ---------------------------------------------------------------------
// Small shared plumbing: output directory, CSV files, flag grammars.

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

/// All outputs are deterministic for fixed flags and seed except this one
/// comment line.
std::string timestamp_line() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[48];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string("# generated ") + buf + "\n";
}

/// --out flag, then SAHIQC_OUTPUT_DIR, then the working directory. The
/// directory is created on demand.
std::filesystem::path resolve_out_dir(const std::string& flag) {
  std::string dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("SAHIQC_OUTPUT_DIR");
    if (env != nullptr && *env != '\0') dir = env;
  }
  if (dir.empty()) dir = ".";
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "'");
  return p;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) return parts;
    start = pos + 1;
  }
}

/// `value` or `start:step:stop`, both ends included (within 1e-12 relative
/// slack, so 0:0.25:2 lands exactly on 2).
std::vector<double> parse_grid(const std::string& text,
                               const std::string& flag) {
  const auto parts = split(text, ':');
  try {
    if (parts.size() == 1) return {parse_double(parts[0])};
    if (parts.size() != 3)
      throw Error("expected <value> or start:step:stop");
    const double start = parse_double(parts[0]);
    const double step = parse_double(parts[1]);
    const double stop = parse_double(parts[2]);
    const double tol =
        kGridTol * std::max({1.0, std::fabs(start), std::fabs(stop)});
    if (step == 0.0) {
      if (std::fabs(stop - start) <= tol) return {start};
      throw Error("zero step with distinct endpoints");
    }
    if ((stop - start) * step < 0.0)
      throw Error("step points away from the stop value");
    std::vector<double> grid;
    for (int k = 0; k < 1000001; ++k) {
      double v = start + k * step;
      if (step > 0.0 ? v > stop + tol : v < stop - tol) break;
      if (std::fabs(v - stop) <= tol) v = stop;  // land exactly on the end
      grid.push_back(v);
      if (v == stop) break;
    }
    if (grid.size() >= 1000000) throw Error("more than 10^6 grid points");
    return grid;
  } catch (const Error& e) {
    throw Error(flag + " '" + text + "': " + e.what());
  }
}

AsyncBounds parse_bounds(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4)
    throw Error("--bounds '" + text +
                "': expected tau_prime,tau_star,tau_circ,tau_natural");
  return AsyncBounds(parse_double(parts[0]), parse_double(parts[1]),
                     parse_double(parts[2]), parse_double(parts[3]));
}

void apply_y_mode(SearchSpec& spec, const std::string& mode) {
  if (mode == "zero")
    spec.y_points = 0;  // multiplier grid collapses to Y = 0
  else if (mode != "free")
    throw Error("--y-mode must be 'free' or 'zero'");
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------
// Flag storage. One struct serves all subcommands; presence is tracked
// through the CLI option pointers where it matters.

struct Opts {
  std::string system_path;
  std::string events_path;
  std::string out_flag;
  std::string y_mode = "free";
  std::string mode = "jittered-delay";
  std::string bounds_str;
  std::string delta_grid = "0:0.25:2";
  std::string h_grid;
  std::string pulse = "1,1";
  double h = 0.0;
  double delta = 0.0;
  double horizon = 20.0;
  double dt = 0.01;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  int trials = 1000;
  int threads = 0;
  bool echo_system = false;
};

struct OptionRefs {
  CLI::Option* h = nullptr;
  CLI::Option* delta = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* gamma = nullptr;
  CLI::Option* bounds = nullptr;
  CLI::Option* horizon = nullptr;
};

SystemFile load_and_echo(const Opts& o) {
  SystemFile sf = load_system(o.system_path);
  if (o.echo_system) std::cout << format_system(sf);
  return sf;
}

double resolve_h(const SystemFile& sf, const Opts& o, const CLI::Option* oh) {
  if (oh != nullptr && oh->count() > 0) return o.h;
  if (sf.h) return *sf.h;
  throw Error("no sampling period: pass --h or set \"h\" in the system file");
}

double resolve_delta(const SystemFile& sf, const Opts& o,
                     const CLI::Option* od) {
  if (od != nullptr && od->count() > 0) return o.delta;
  if (sf.delta) return *sf.delta;
  return 0.0;
}

// ---------------------------------------------------------------------
// Subcommand bodies. Each returns the process exit code.

int run_validate(const Opts& o, const OptionRefs& refs) {
  const EventFile ef = load_events_json(o.events_path);
  std::optional<AsyncBounds> bounds;
  if (refs.bounds->count() > 0)
    bounds.emplace(parse_bounds(o.bounds_str));
  else if (refs.h->count() > 0)
    bounds.emplace(bounds_from_h_delta(o.h, o.delta));
  else if (ef.bounds)
    bounds = ef.bounds;
  else
    throw Error(
        "no admissibility bounds: pass --bounds or --h/--delta, or store "
        "them in the events file");

  const ValidationReport report = validate(ef.samples, ef.updates, *bounds);

  std::string csv = timestamp_line();
  csv += "kind,index,value_s,limit_s\n";
  for (const Violation& v : report.violations)
    csv += to_string(v.kind) + "," + std::to_string(v.index) + "," +
           fmt(v.value) + "," + fmt(v.limit) + "\n";
  const auto out = resolve_out_dir(o.out_flag) / "validate.csv";
  write_text(out.string(), csv);

  for (const std::string& w : report.warnings)
    std::cout << "warning: " << w << "\n";
  std::cout << "validate: " << (report.pass ? "PASS" : "FAIL") << " ("
            << ef.samples.size() << " samples, " << ef.updates.size()
            << " updates, " << report.violations.size() << " violations)\n";
  std::cout << "wrote " << out.string() << "\n";
  return report.pass ? kExitOk : kExitInfeasible;
}

int run_delay_profile(const Opts& o, const OptionRefs& refs) {
  const EventFile ef = load_events_json(o.events_path);
  double horizon =
      std::min(ef.samples.horizon(), ef.updates.horizon());
  if (refs.horizon->count() > 0) horizon = o.horizon;
  const DelayProfile profile =
      delay_profile(ef.samples, ef.updates, horizon);

  std::string csv = timestamp_line();
  csv += "index,time_s,source_time_s,source_index,delay_s,effective\n";
  const auto& ups = profile.updates();
  for (std::size_t k = 0; k < ups.size(); ++k)
    csv += std::to_string(k) + "," + fmt(ups[k].time) + "," +
           fmt(ups[k].source) + "," + std::to_string(ups[k].source_index) +
           "," + fmt(ups[k].time - ups[k].source) + "," +
           (ups[k].no_op ? "0" : "1") + "\n";
  const auto out = resolve_out_dir(o.out_flag) / "delay_profile.csv";
  write_text(out.string(), csv);

  std::cout << "delay-profile: " << ups.size() << " updates, "
            << profile.effective().size()
            << " effective, max_reset=" << fmt(profile.max_reset())
            << " max_effective_gap=" << fmt(profile.max_effective_gap())
            << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

int run_lemma_check(const Opts& o) {
  const AsyncBounds bounds = parse_bounds(o.bounds_str);
  if (o.trials < 1) throw Error("--trials must be at least 1");
  TrialBatchConfig cfg{bounds,
                       o.horizon,
                       gen_mode_from_string(o.mode),
                       o.trials,
                       o.seed,
                       /*max_degree=*/3,
                       /*segments=*/8,
                       o.threads};
  const auto gain_rows = lemma_trial_batch(TrialKind::gain, cfg);
  const auto pass_rows = lemma_trial_batch(TrialKind::passivity, cfg);

  std::string csv = timestamp_line();
  csv += "kind,seed,value,norm_v,pass\n";
  bool all_pass = true;
  double max_ratio = -std::numeric_limits<double>::infinity();
  double min_slack = std::numeric_limits<double>::infinity();
  for (const TrialRow& r : gain_rows) {
    csv += "gain," + std::to_string(r.seed) + "," + fmt(r.value) + "," +
           fmt(r.norm_v) + "," + (r.pass ? "1" : "0") + "\n";
    all_pass = all_pass && r.pass;
    max_ratio = std::max(max_ratio, r.value);
  }
  for (const TrialRow& r : pass_rows) {
    csv += "passivity," + std::to_string(r.seed) + "," + fmt(r.value) + "," +
           fmt(r.norm_v) + "," + (r.pass ? "1" : "0") + "\n";
    all_pass = all_pass && r.pass;
    min_slack = std::min(min_slack, r.value);
  }
  const auto out = resolve_out_dir(o.out_flag) / "lemma_check.csv";
  write_text(out.string(), csv);

  std::cout << "lemma-check: " << (all_pass ? "PASS" : "FAIL") << " ("
            << o.trials << " trials per kind, max gain ratio "
            << fmt(max_ratio) << ", min passivity slack " << fmt(min_slack)
            << ")\n";
  std::cout << "wrote " << out.string() << "\n";
  return all_pass ? kExitOk : kExitInfeasible;
}

int run_certify_stability(const Opts& o, const OptionRefs& refs) {
  const SystemFile sf = load_and_echo(o);
  const double h = resolve_h(sf, o, refs.h);
  const double delta = resolve_delta(sf, o, refs.delta);
  SearchSpec spec = sf.search;
  apply_y_mode(spec, o.y_mode);

  const CertificationReport rep =
      certify_stability(sf.P, sf.F, h, delta, spec);

  std::string csv = timestamp_line();
  csv += "h_s,delta,feasible,X,Y,margin,worst_omega_rad_s,points_scanned,"
         "refinements\n";
  csv += fmt(h) + "," + fmt(delta) + "," + (rep.feasible ? "1" : "0") + "," +
         fmt(rep.X) + "," + fmt(rep.Y) + "," + fmt(rep.margin) + "," +
         fmt(rep.worst_omega) + "," + std::to_string(rep.points_scanned) +
         "," + std::to_string(rep.refinements) + "\n";
  const auto out = resolve_out_dir(o.out_flag) / "certify_stability.csv";
  write_text(out.string(), csv);

  std::cout << "certify-stability: "
            << (rep.feasible ? "FEASIBLE" : "INFEASIBLE") << " h=" << fmt(h)
            << " delta=" << fmt(delta) << " X=" << fmt(rep.X)
            << " Y=" << fmt(rep.Y) << " margin=" << fmt(rep.margin)
            << " worst_omega=" << fmt(rep.worst_omega) << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return rep.feasible ? kExitOk : kExitInfeasible;
}

int run_certify_performance(const Opts& o, const OptionRefs& refs) {
  const SystemFile sf = load_and_echo(o);
  const double h = resolve_h(sf, o, refs.h);
  const double delta = resolve_delta(sf, o, refs.delta);
  SearchSpec spec = sf.search;
  apply_y_mode(spec, o.y_mode);

  const CertificationReport rep =
      certify_performance(sf.P, sf.F, sf.W, h, delta, spec);

  std::string csv = timestamp_line();
  csv += "h_s,delta,feasible,gamma,X,Y,margin,worst_omega_rad_s,"
         "points_scanned,refinements\n";
  csv += fmt(h) + "," + fmt(delta) + "," + (rep.feasible ? "1" : "0") + "," +
         fmt(rep.gamma) + "," + fmt(rep.X) + "," + fmt(rep.Y) + "," +
         fmt(rep.margin) + "," + fmt(rep.worst_omega) + "," +
         std::to_string(rep.points_scanned) + "," +
         std::to_string(rep.refinements) + "\n";
  const auto out = resolve_out_dir(o.out_flag) / "certify_performance.csv";
  write_text(out.string(), csv);

  if (rep.feasible)
    std::cout << "certify-performance: gamma=" << fmt(rep.gamma)
              << " h=" << fmt(h) << " delta=" << fmt(delta)
              << " X=" << fmt(rep.X) << " Y=" << fmt(rep.Y)
              << " margin=" << fmt(rep.margin) << "\n";
  else
    std::cout << "certify-performance: INFEASIBLE h=" << fmt(h)
              << " delta=" << fmt(delta)
              << " (no finite gain certificate)\n";
  std::cout << "wrote " << out.string() << "\n";
  return rep.feasible ? kExitOk : kExitInfeasible;
}

const char kStabilityPlot[] = R"py(#!/usr/bin/env python3
"""Plot the certified maximum sampling period against the timing slack."""
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep_stability.csv"
with open(path) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
delta = [float(r["delta"]) for r in rows]
h_max = [float(r["h_max_s"]) for r in rows]
plt.plot(delta, h_max, marker="o")
plt.xlabel("delta (update slack / sampling period)")
plt.ylabel("certified h_max [s]")
plt.grid(True)
out = path.rsplit(".", 1)[0] + ".png"
plt.savefig(out, dpi=160, bbox_inches="tight")
print("wrote", out)
)py";

const char kPerformancePlot[] = R"py(#!/usr/bin/env python3
"""Plot the certified closed-loop gain against the sampling period."""
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep_performance.csv"
with open(path) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
feasible = [r for r in rows if float(r["gamma"]) > 0.0]
h = [float(r["h_s"]) for r in feasible]
gamma = [float(r["gamma"]) for r in feasible]
plt.plot(h, gamma, marker="o")
plt.xlabel("sampling period h [s]")
plt.ylabel("certified gain")
plt.grid(True)
out = path.rsplit(".", 1)[0] + ".png"
plt.savefig(out, dpi=160, bbox_inches="tight")
print("wrote", out)
)py";

const char kTracePlot[] = R"py(#!/usr/bin/env python3
"""Plot the simulated loop signals from a trace CSV."""
import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trace.csv"
with open(path) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
t = [float(r["time_s"]) for r in rows]
fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
for name in ("d", "u", "held"):
    axes[0].plot(t, [float(r[name]) for r in rows], label=name)
for name in ("y", "z"):
    axes[1].plot(t, [float(r[name]) for r in rows], label=name)
for name in ("v", "w"):
    axes[2].plot(t, [float(r[name]) for r in rows], label=name)
for ax in axes:
    ax.grid(True)
    ax.legend(loc="upper right")
axes[2].set_xlabel("time [s]")
out = path.rsplit(".", 1)[0] + ".png"
plt.savefig(out, dpi=160, bbox_inches="tight")
print("wrote", out)
)py";

int run_sweep_stability(const Opts& o, const OptionRefs& refs) {
  const SystemFile sf = load_and_echo(o);
  const std::vector<double> deltas = parse_grid(o.delta_grid, "--delta");
  SearchSpec spec = sf.search;
  apply_y_mode(spec, o.y_mode);
  (void)refs;

  struct Row {
    double delta = 0.0;
    double h_max = std::numeric_limits<double>::quiet_NaN();
    double X = std::numeric_limits<double>::quiet_NaN();
    double Y = std::numeric_limits<double>::quiet_NaN();
    double margin = std::numeric_limits<double>::quiet_NaN();
    std::string note;
  };
  std::vector<Row> rows(deltas.size());

  parallel_for_indexed(
      deltas.size(),
      [&](std::size_t i) {
        Row& r = rows[i];
        r.delta = deltas[i];
        try {
          r.h_max = max_h(sf.P, sf.F, r.delta, spec);
          const CertificationReport rep =
              certify_stability(sf.P, sf.F, r.h_max, r.delta, spec);
          r.X = rep.X;
          r.Y = rep.Y;
          r.margin = rep.margin;
        } catch (const NumericError& e) {
          r.note = e.what();  // no certificate at any h, or non-monotone
        }
      },
      static_cast<unsigned>(o.threads));

  std::string csv = timestamp_line();
  csv += "delta,h_max_s,X,Y,margin\n";
  bool any = false;
  for (const Row& r : rows) {
    csv += fmt(r.delta) + "," + fmt(r.h_max) + "," + fmt(r.X) + "," +
           fmt(r.Y) + "," + fmt(r.margin) + "\n";
    any = any || std::isfinite(r.h_max);
  }
  const auto dir = resolve_out_dir(o.out_flag);
  const auto out = dir / "sweep_stability.csv";
  write_text(out.string(), csv);
  write_text((dir / "sweep_stability_plot.py").string(), kStabilityPlot);

  for (const Row& r : rows) {
    if (!r.note.empty())
      std::cout << "warning: delta=" << fmt(r.delta) << ": " << r.note
                << "\n";
    std::cout << "delta=" << fmt(r.delta) << " h_max=" << fmt(r.h_max)
              << "\n";
  }
  std::cout << "wrote " << out.string() << "\n";
  return any ? kExitOk : kExitInfeasible;
}

int run_sweep_performance(const Opts& o, const OptionRefs& refs) {
  const SystemFile sf = load_and_echo(o);
  const std::vector<double> hs = parse_grid(o.h_grid, "--h");
  const double delta = resolve_delta(sf, o, refs.delta);
  SearchSpec spec = sf.search;
  apply_y_mode(spec, o.y_mode);

  std::vector<CertificationReport> reps(hs.size());
  parallel_for_indexed(
      hs.size(),
      [&](std::size_t i) {
        reps[i] = certify_performance(sf.P, sf.F, sf.W, hs[i], delta, spec);
      },
      static_cast<unsigned>(o.threads));

  std::string csv = timestamp_line();
  csv += "h_s,delta,gamma,X,Y\n";
  bool any = false;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    csv += fmt(hs[i]) + "," + fmt(delta) + "," + fmt(reps[i].gamma) + "," +
           fmt(reps[i].X) + "," + fmt(reps[i].Y) + "\n";
    any = any || reps[i].feasible;
  }
  const auto dir = resolve_out_dir(o.out_flag);
  const auto out = dir / "sweep_performance.csv";
  write_text(out.string(), csv);
  write_text((dir / "sweep_performance_plot.py").string(), kPerformancePlot);

  for (std::size_t i = 0; i < hs.size(); ++i)
    std::cout << "h=" << fmt(hs[i]) << " gamma="
              << (reps[i].feasible ? fmt(reps[i].gamma)
                                   : std::string("infeasible"))
              << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return any ? kExitOk : kExitInfeasible;
}

int run_simulate(const Opts& o, const OptionRefs& refs) {
  const SystemFile sf = load_and_echo(o);
  const double h = resolve_h(sf, o, refs.h);
  const double delta = resolve_delta(sf, o, refs.delta);
  const GenMode mode = gen_mode_from_string(o.mode);
  if (mode != GenMode::synchronous && refs.seed->count() == 0)
    throw Error("--seed is required for randomized event generation");
  if (!(o.horizon > 0.0)) throw Error("--horizon must be positive");
  if (!(o.dt > 0.0)) throw Error("--dt must be positive");

  const auto pulse_parts = split(o.pulse, ',');
  if (pulse_parts.size() != 2)
    throw Error("--pulse '" + o.pulse + "': expected amplitude,width");
  const double amp = parse_double(pulse_parts[0]);
  const double width = parse_double(pulse_parts[1]);
  if (!(width > 0.0) || width >= o.horizon)
    throw Error("--pulse width must lie strictly inside the horizon");
  if (amp == 0.0) throw Error("--pulse amplitude must be nonzero");
  const PiecewiseSignal d({0.0, width, o.horizon}, {{amp}, {0.0}});

  const AsyncBounds bounds = bounds_from_h_delta(h, delta);
  const auto [samples, updates] =
      gen_admissible(bounds, o.horizon, mode, o.seed);
  const LoopTrace trace = simulate_loop(sf.P, sf.F, sf.W, samples, updates, d);
  const double gain = empirical_gain(trace);

  std::string csv = timestamp_line();
  csv += "time_s,d,u,y,z,v,w,held\n";
  for (double t : parse_grid("0:" + fmt(o.dt) + ":" + fmt(o.horizon), "--dt"))
    csv += fmt(t) + "," + fmt(trace.d(t)) + "," + fmt(trace.u(t)) + "," +
           fmt(trace.y(t)) + "," + fmt(trace.z(t)) + "," + fmt(trace.v(t)) +
           "," + fmt(trace.w(t)) + "," + fmt(trace.held(t)) + "\n";
  const auto dir = resolve_out_dir(o.out_flag);
  const auto out = dir / "trace.csv";
  write_text(out.string(), csv);
  save_events_json(EventFile{samples, updates, bounds},
                   (dir / "events_used.json").string());
  write_text((dir / "trace_plot.py").string(), kTracePlot);

  std::cout << "simulate: " << samples.size() << " samples, "
            << updates.size() << " updates, |d|=" << fmt(trace.norm_d)
            << " |z|=" << fmt(trace.norm_z) << " gain=" << fmt(gain) << "\n";
  std::cout << "wrote " << out.string() << "\n";

  if (refs.gamma->count() > 0) {
    const bool ok = gain <= o.gamma + 1e-3;
    std::cout << "gain check: " << (ok ? "PASS" : "FAIL") << " (certified "
              << fmt(o.gamma) << ")\n";
    return ok ? kExitOk : kExitInfeasible;
  }
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{
      "Certification and simulation toolkit for sampled feedback loops "
      "with asynchronous hold updates",
      "sahiqc"};
  // --h is a real flag (the sampling period), so the help flag must not
  // claim the -h short name; subcommands inherit this choice.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  Opts o;
  OptionRefs validate_refs, dp_refs, cs_refs, cp_refs, ss_refs, sp_refs,
      sim_refs;

  auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", o.out_flag,
                    "Output directory (default: SAHIQC_OUTPUT_DIR or '.')");
  };
  auto add_system = [&](CLI::App* cmd) {
    cmd->add_option("--system", o.system_path, "System definition JSON file")
        ->required();
    cmd->add_flag("--echo-system", o.echo_system,
                  "Print the parsed system back as JSON");
  };
  auto add_y_mode = [&](CLI::App* cmd) {
    cmd->add_option("--y-mode", o.y_mode,
                    "Multiplier search: 'free' scans the passivity weight "
                    "grid, 'zero' pins Y = 0");
  };
  auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option("--threads", o.threads,
                    "Worker threads (0 = hardware default)");
  };

  CLI::App* validate_cmd = app.add_subcommand(
      "validate", "Check an event-pair file against timing bounds");
  validate_cmd->add_option("--events", o.events_path, "Events JSON file")
      ->required();
  validate_refs.bounds = validate_cmd->add_option(
      "--bounds", o.bounds_str, "tau_prime,tau_star,tau_circ,tau_natural");
  validate_refs.h = validate_cmd->add_option(
      "--h", o.h, "Sampling period (with --delta, replaces --bounds)");
  validate_refs.delta =
      validate_cmd->add_option("--delta", o.delta, "Relative update slack");
  add_out(validate_cmd);

  CLI::App* dp_cmd = app.add_subcommand(
      "delay-profile",
      "Reduce an event pair to its composed time-varying delay");
  dp_cmd->add_option("--events", o.events_path, "Events JSON file")
      ->required();
  dp_refs.horizon = dp_cmd->add_option(
      "--horizon", o.horizon,
      "Profile horizon (default: the shorter sequence horizon)");
  add_out(dp_cmd);

  CLI::App* lemma_cmd = app.add_subcommand(
      "lemma-check",
      "Empirical gain-ratio and passivity-slack trials for the "
      "integrated-error operator");
  lemma_cmd
      ->add_option("--bounds", o.bounds_str,
                   "tau_prime,tau_star,tau_circ,tau_natural")
      ->required();
  lemma_cmd->add_option("--trials", o.trials, "Trials per inequality");
  lemma_cmd->add_option("--seed", o.seed, "Base seed (trials are seeded "
                                          "consecutively)")
      ->required();
  lemma_cmd->add_option("--mode", o.mode,
                        "Event generator: synchronous, jittered-delay, "
                        "down-sampling");
  lemma_cmd->add_option("--horizon", o.horizon,
                        "Support of the random trial inputs [s]");
  add_threads(lemma_cmd);
  add_out(lemma_cmd);

  CLI::App* cs_cmd = app.add_subcommand(
      "certify-stability",
      "Search the multiplier grid for a loop stability certificate");
  add_system(cs_cmd);
  cs_refs.h = cs_cmd->add_option("--h", o.h, "Sampling period [s]");
  cs_refs.delta =
      cs_cmd->add_option("--delta", o.delta, "Relative update slack");
  add_y_mode(cs_cmd);
  add_out(cs_cmd);

  CLI::App* cp_cmd = app.add_subcommand(
      "certify-performance",
      "Bisect the smallest certified disturbance-to-output gain");
  add_system(cp_cmd);
  cp_refs.h = cp_cmd->add_option("--h", o.h, "Sampling period [s]");
  cp_refs.delta =
      cp_cmd->add_option("--delta", o.delta, "Relative update slack");
  add_y_mode(cp_cmd);
  add_out(cp_cmd);

  CLI::App* ss_cmd = app.add_subcommand(
      "sweep-stability",
      "Certified maximum sampling period over a slack grid");
  add_system(ss_cmd);
  ss_cmd->add_option("--delta", o.delta_grid,
                     "Slack grid start:step:stop (default 0:0.25:2)");
  add_y_mode(ss_cmd);
  add_threads(ss_cmd);
  add_out(ss_cmd);

  CLI::App* sp_cmd = app.add_subcommand(
      "sweep-performance",
      "Certified closed-loop gain over a sampling-period grid");
  add_system(sp_cmd);
  sp_cmd->add_option("--h", o.h_grid, "Period grid start:step:stop")
      ->required();
  sp_refs.delta =
      sp_cmd->add_option("--delta", o.delta, "Relative update slack");
  add_y_mode(sp_cmd);
  add_threads(sp_cmd);
  add_out(sp_cmd);

  CLI::App* sim_cmd = app.add_subcommand(
      "simulate",
      "Run the sampled loop on a generated admissible schedule and report "
      "the empirical gain");
  add_system(sim_cmd);
  sim_refs.h = sim_cmd->add_option("--h", o.h, "Sampling period [s]");
  sim_refs.delta =
      sim_cmd->add_option("--delta", o.delta, "Relative update slack");
  sim_cmd->add_option("--mode", o.mode,
                      "Event generator: synchronous, jittered-delay, "
                      "down-sampling");
  sim_refs.seed = sim_cmd->add_option(
      "--seed", o.seed, "Generator seed (required unless synchronous)");
  sim_cmd->add_option("--horizon", o.horizon, "Simulation horizon [s]");
  sim_cmd->add_option("--pulse", o.pulse,
                      "Disturbance pulse amplitude,width");
  sim_cmd->add_option("--dt", o.dt, "Trace CSV sampling step [s]");
  sim_refs.gamma = sim_cmd->add_option(
      "--gamma", o.gamma,
      "Certified gain to check the empirical gain against (exit 2 on "
      "violation)");
  add_out(sim_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (validate_cmd->parsed()) return run_validate(o, validate_refs);
    if (dp_cmd->parsed()) return run_delay_profile(o, dp_refs);
    if (lemma_cmd->parsed()) return run_lemma_check(o);
    if (cs_cmd->parsed()) return run_certify_stability(o, cs_refs);
    if (cp_cmd->parsed()) return run_certify_performance(o, cp_refs);
    if (ss_cmd->parsed()) return run_sweep_stability(o, ss_refs);
    if (sp_cmd->parsed()) return run_sweep_performance(o, sp_refs);
    if (sim_cmd->parsed()) return run_simulate(o, sim_refs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;  // unreachable: require_subcommand(1)
}

}  // namespace sahiqc::cli

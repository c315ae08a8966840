#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sahiqc/certify.hpp"
#include "sahiqc/events.hpp"
#include "sahiqc/piecewise.hpp"
#include "sahiqc/state_space.hpp"

namespace sahiqc {

/// Parsed system-definition file: plant P, filter F, performance weight W
/// (defaulting to F when omitted) plus optional defaults for the
/// certification commands. Blocks may be given as rational transfer
/// functions (descending-power coefficient arrays) or explicit A/B/C/D.
struct SystemFile {
  StateSpace P, F, W;
  bool w_defaulted = false;  // W was omitted and copied from F
  std::optional<double> h;
  std::optional<double> delta;
  SearchSpec search;
};

/// Parses JSON text into a SystemFile; throws ParseError naming the
/// offending block/field.
SystemFile parse_system(const std::string& text);
SystemFile load_system(const std::string& path);

/// Serializes with explicit state-space blocks; reparsing yields blocks
/// with identical frequency responses (bit-exact matrices).
std::string format_system(const SystemFile& file);
void save_system(const SystemFile& file, const std::string& path);

/// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);
/// Strict full-token parse of a decimal literal.
double parse_double(const std::string& text);

/// Plain-text event list: a "# horizon <value>" header line followed by
/// one event time per line. Round-trips exactly.
void save_events_text(const EventSequence& events, const std::string& path);
EventSequence load_events_text(const std::string& path);

/// Structured event file: times, horizon and (optionally) the bounds the
/// sequence pair was generated or validated against.
struct EventFile {
  EventSequence samples;
  EventSequence updates;
  std::optional<AsyncBounds> bounds;
};
void save_events_json(const EventFile& file, const std::string& path);
EventFile load_events_json(const std::string& path);

/// (time, value) rows of f over a caller-supplied grid.
void export_signal_csv(const PiecewiseSignal& f,
                       const std::vector<double>& grid,
                       const std::string& path);

}  // namespace sahiqc

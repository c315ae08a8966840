#include "sahiqc/system_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "sahiqc/errors.hpp"

namespace sahiqc {

namespace {

using nlohmann::json;  // std::map-backed: keys serialize sorted

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

double require_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + " must be a number");
  return j.get<double>();
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array())
    throw ParseError(where + " must be an array of row arrays");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = 0;
  Eigen::MatrixXd m(rows, 0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array())
      throw ParseError(where + " row " + std::to_string(i) +
                       " must be an array");
    if (i == 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(where + " row " + std::to_string(i) +
                       " has a different length than row 0");
    }
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = require_number(row[static_cast<std::size_t>(k)],
                               where + "(" + std::to_string(i) + "," +
                                   std::to_string(k) + ")");
  }
  return m;
}

std::vector<double> parse_coeffs(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw ParseError(where + " must be a non-empty array of numbers");
  std::vector<double> c(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    c[i] = require_number(j[i], where + "[" + std::to_string(i) + "]");
  return c;
}

void reject_unknown_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ParseError(where + ": unknown field '" + it.key() + "'");
  }
}

StateSpace parse_block(const json& j, const std::string& name) {
  const std::string where = "block '" + name + "'";
  if (!j.is_object()) throw ParseError(where + " must be an object");
  reject_unknown_keys(j, where, {"num", "den", "A", "B", "C", "D"});
  const bool tf = j.contains("num") || j.contains("den");
  const bool ss = j.contains("A") || j.contains("B") || j.contains("C") ||
                  j.contains("D");
  if (tf && ss)
    throw ParseError(where +
                     " mixes transfer-function (num/den) and state-space "
                     "(A/B/C/D) fields");
  try {
    if (tf) {
      if (!j.contains("num") || !j.contains("den"))
        throw ParseError(where + " needs both 'num' and 'den'");
      return StateSpace::from_transfer(parse_coeffs(j["num"], where + ".num"),
                                       parse_coeffs(j["den"], where + ".den"));
    }
    if (ss) {
      for (const char* k : {"A", "B", "C", "D"})
        if (!j.contains(k))
          throw ParseError(where + " is missing matrix '" + k + "'");
      Eigen::MatrixXd A = parse_matrix(j["A"], where + ".A");
      Eigen::MatrixXd B = parse_matrix(j["B"], where + ".B");
      Eigen::MatrixXd C = parse_matrix(j["C"], where + ".C");
      Eigen::MatrixXd D = parse_matrix(j["D"], where + ".D");
      // Zero-state blocks lose their trailing dimension in the nested-array
      // encoding; recover it from D.
      if (A.rows() == 0) {
        B.resize(0, D.cols());
        C.resize(D.rows(), 0);
      }
      return StateSpace(std::move(A), std::move(B), std::move(C),
                        std::move(D));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
  throw ParseError(where +
                   " needs either num/den coefficients or A/B/C/D matrices");
}

SearchSpec parse_search(const json& j) {
  const std::string where = "search";
  if (!j.is_object()) throw ParseError(where + " must be an object");
  reject_unknown_keys(j, where,
                      {"x_free", "y_points", "y_lo", "y_hi", "x_points",
                       "x_lo", "x_hi", "freq_points", "freq_span",
                       "refine_rounds"});
  SearchSpec spec;
  auto take_int = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    const double v = require_number(j[key], where + "." + key);
    if (v != std::floor(v) || v < 0)
      throw ParseError(where + "." + key + " must be a nonnegative integer");
    out = static_cast<int>(v);
  };
  auto take_double = [&](const char* key, double& out) {
    if (j.contains(key)) out = require_number(j[key], where + "." + key);
  };
  if (j.contains("x_free")) {
    if (!j["x_free"].is_boolean())
      throw ParseError(where + ".x_free must be a boolean");
    spec.x_free = j["x_free"].get<bool>();
  }
  take_int("y_points", spec.y_points);
  take_double("y_lo", spec.y_lo);
  take_double("y_hi", spec.y_hi);
  take_int("x_points", spec.x_points);
  take_double("x_lo", spec.x_lo);
  take_double("x_hi", spec.x_hi);
  take_int("freq_points", spec.freq_points);
  take_double("freq_span", spec.freq_span);
  take_int("refine_rounds", spec.refine_rounds);
  return spec;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if (!std::isfinite(m(i, k)))
        throw Error("cannot serialize a non-finite matrix entry");
      row.push_back(m(i, k));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json block_to_json(const StateSpace& sys) {
  json j;
  j["A"] = matrix_to_json(sys.A);
  j["B"] = matrix_to_json(sys.B);
  j["C"] = matrix_to_json(sys.C);
  j["D"] = matrix_to_json(sys.D);
  return j;
}

json events_to_json(const EventSequence& e) {
  json j;
  j["horizon"] = e.horizon();
  json times = json::array();
  for (double t : e.times()) times.push_back(t);
  j["times"] = std::move(times);
  return j;
}

EventSequence events_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + " must be an object");
  reject_unknown_keys(j, where, {"horizon", "times"});
  if (!j.contains("horizon") || !j.contains("times"))
    throw ParseError(where + " needs 'horizon' and 'times'");
  const double horizon = require_number(j["horizon"], where + ".horizon");
  if (!j["times"].is_array())
    throw ParseError(where + ".times must be an array");
  std::vector<double> times(j["times"].size());
  for (std::size_t i = 0; i < times.size(); ++i)
    times[i] = require_number(j["times"][i],
                              where + ".times[" + std::to_string(i) + "]");
  try {
    return EventSequence(std::move(times), horizon);
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError("'" + text + "' is not a valid number");
  return value;
}

SystemFile parse_system(const std::string& text) {
  const json j = parse_json(text, "system file");
  if (!j.is_object()) throw ParseError("system file must be a JSON object");
  reject_unknown_keys(j, "system file",
                      {"P", "F", "W", "h", "delta", "search"});
  if (!j.contains("P")) throw ParseError("system file is missing block 'P'");
  if (!j.contains("F")) throw ParseError("system file is missing block 'F'");

  SystemFile file{parse_block(j["P"], "P"), parse_block(j["F"], "F"),
                  StateSpace::static_gain(Eigen::MatrixXd::Zero(1, 1)),
                  false, std::nullopt, std::nullopt, SearchSpec{}};
  if (j.contains("W")) {
    file.W = parse_block(j["W"], "W");
  } else {
    file.W = file.F;
    file.w_defaulted = true;
  }
  if (j.contains("h")) {
    file.h = require_number(j["h"], "h");
    if (!(*file.h > 0.0)) throw ParseError("h must be positive");
  }
  if (j.contains("delta")) {
    file.delta = require_number(j["delta"], "delta");
    if (!(*file.delta >= 0.0)) throw ParseError("delta must be nonnegative");
  }
  if (j.contains("search")) file.search = parse_search(j["search"]);
  return file;
}

SystemFile load_system(const std::string& path) {
  try {
    return parse_system(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string format_system(const SystemFile& file) {
  json j;
  j["P"] = block_to_json(file.P);
  j["F"] = block_to_json(file.F);
  j["W"] = block_to_json(file.W);
  if (file.h) j["h"] = *file.h;
  if (file.delta) j["delta"] = *file.delta;
  json search;
  search["x_free"] = file.search.x_free;
  search["y_points"] = file.search.y_points;
  search["y_lo"] = file.search.y_lo;
  search["y_hi"] = file.search.y_hi;
  search["x_points"] = file.search.x_points;
  search["x_lo"] = file.search.x_lo;
  search["x_hi"] = file.search.x_hi;
  search["freq_points"] = file.search.freq_points;
  search["freq_span"] = file.search.freq_span;
  search["refine_rounds"] = file.search.refine_rounds;
  j["search"] = std::move(search);
  return j.dump(2) + "\n";
}

void save_system(const SystemFile& file, const std::string& path) {
  write_file(path, format_system(file));
}

void save_events_text(const EventSequence& events, const std::string& path) {
  std::string out = "# horizon=" + format_double(events.horizon()) + "\n";
  for (double t : events.times()) out += format_double(t) + "\n";
  write_file(path, out);
}

EventSequence load_events_text(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  bool have_horizon = false;
  double horizon = 0.0;
  std::vector<double> times;
  const std::string header = "# horizon=";
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') {
      if (!have_horizon && line.compare(start, header.size(), header) == 0) {
        horizon = parse_double(line.substr(start + header.size()));
        have_horizon = true;
      }
      continue;  // other comment lines are ignored
    }
    const auto end = line.find_last_not_of(" \t");
    times.push_back(parse_double(line.substr(start, end - start + 1)));
  }
  if (!have_horizon)
    throw ParseError(path + ": missing '# horizon=<value>' header line");
  try {
    return EventSequence(std::move(times), horizon);
  } catch (const Error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_events_json(const EventFile& file, const std::string& path) {
  json j;
  j["samples"] = events_to_json(file.samples);
  j["updates"] = events_to_json(file.updates);
  if (file.bounds) {
    json b;
    b["tau_prime"] = file.bounds->tau_prime;
    b["tau_star"] = file.bounds->tau_star;
    b["tau_circ"] = file.bounds->tau_circ;
    b["tau_natural"] = file.bounds->tau_natural;
    j["bounds"] = std::move(b);
  }
  write_file(path, j.dump(2) + "\n");
}

EventFile load_events_json(const std::string& path) {
  const json j = parse_json(read_file(path), path);
  if (!j.is_object()) throw ParseError(path + ": must be a JSON object");
  reject_unknown_keys(j, path, {"samples", "updates", "bounds"});
  if (!j.contains("samples") || !j.contains("updates"))
    throw ParseError(path + ": needs 'samples' and 'updates'");
  EventFile file{events_from_json(j["samples"], path + ": samples"),
                 events_from_json(j["updates"], path + ": updates"),
                 std::nullopt};
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    const std::string where = path + ": bounds";
    if (!b.is_object()) throw ParseError(where + " must be an object");
    reject_unknown_keys(b, where,
                        {"tau_prime", "tau_star", "tau_circ", "tau_natural"});
    for (const char* k : {"tau_prime", "tau_star", "tau_circ", "tau_natural"})
      if (!b.contains(k))
        throw ParseError(where + " is missing '" + k + "'");
    try {
      file.bounds.emplace(require_number(b["tau_prime"], where),
                          require_number(b["tau_star"], where),
                          require_number(b["tau_circ"], where),
                          require_number(b["tau_natural"], where));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return file;
}

void export_signal_csv(const PiecewiseSignal& f,
                       const std::vector<double>& grid,
                       const std::string& path) {
  std::string out = "time,value\n";
  for (double t : grid)
    out += format_double(t) + "," + format_double(f(t)) + "\n";
  write_file(path, out);
}

}  // namespace sahiqc

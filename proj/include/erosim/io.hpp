#pragma once

/// \file io.hpp
/// Text outputs (snapshots, front log, study table), their readers, and the
/// JSON run manifest.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "erosim/analysis.hpp"
#include "erosim/errors.hpp"
#include "erosim/grid.hpp"
#include "erosim/physics.hpp"

namespace erosim {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double to_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(where + ": '" + s + "' is not a number");
  }
}

inline std::optional<double> to_optional(const std::string& s, const std::string& where) {
  if (s == "NA") return std::nullopt;
  return to_double(s, where);
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  return in;
}

inline void check(const std::ostream& out, const std::filesystem::path& p) {
  if (!out) throw IoError("write to '" + p.string() + "' failed");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Field snapshots

/// Header line "# dim=D shape=AxB t=T", then one CSV row per node in grid
/// order (x fastest): x[,y],theta,c_a,n[,co2_eq].
inline void write_snapshot(const std::filesystem::path& path, const Grid& g,
                           const SimulationState& s, std::optional<double> K_c = std::nullopt) {
  auto out = detail::open_out(path);
  out << "# dim=" << g.dim << " shape=" << g.n;
  if (g.dim == 2) out << "x" << g.n;
  out << " t=" << detail::fmt("%.17g", s.t) << "\n";
  out << (g.dim == 2 ? "x,y," : "x,") << "theta,c_a,n" << (K_c ? ",co2_eq" : "") << "\n";
  for (std::size_t q = 0; q < g.size(); ++q) {
    const Point p = g.coord(static_cast<int>(q));
    out << detail::fmt("%.17g", p[0]) << ",";
    if (g.dim == 2) out << detail::fmt("%.17g", p[1]) << ",";
    out << detail::fmt("%.17g", s.theta[q]) << "," << detail::fmt("%.17g", s.c_a[q]) << ","
        << detail::fmt("%.17g", s.n[q]);
    if (K_c) out << "," << detail::fmt("%.17g", *K_c > 0.0 ? s.c_a[q] / *K_c : 0.0);
    out << "\n";
  }
  detail::check(out, path);
}

struct Snapshot {
  int dim = 1;
  int shape = 0;  ///< nodes per axis
  double t = 0.0;
  std::vector<Point> coords;
  SimulationState state;
  std::vector<double> co2_eq;  ///< empty unless present in the file
};

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const std::string where = path.string();
  Snapshot snap;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw IoError(where + ": missing snapshot header");
  {
    std::istringstream h(line.substr(2));
    std::string tok;
    bool got_dim = false, got_shape = false, got_t = false;
    while (h >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "dim") {
        snap.dim = static_cast<int>(detail::to_double(val, where));
        got_dim = true;
      } else if (key == "shape") {
        snap.shape = static_cast<int>(detail::to_double(val.substr(0, val.find('x')), where));
        got_shape = true;
      } else if (key == "t") {
        snap.t = detail::to_double(val, where);
        got_t = true;
      }
    }
    if (!got_dim || !got_shape || !got_t || (snap.dim != 1 && snap.dim != 2))
      throw IoError(where + ": malformed snapshot header");
  }
  if (!std::getline(in, line)) throw IoError(where + ": missing column header");
  const auto cols = detail::split(line);
  const std::size_t nc = static_cast<std::size_t>(snap.dim) + 3;
  if (cols.size() != nc && cols.size() != nc + 1) throw IoError(where + ": unexpected columns");
  const bool co2 = cols.size() == nc + 1;
  snap.state.t = snap.t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != cols.size()) throw IoError(where + ": ragged row");
    Point p{detail::to_double(cells[0], where),
            snap.dim == 2 ? detail::to_double(cells[1], where) : 0.0};
    snap.coords.push_back(p);
    const std::size_t o = static_cast<std::size_t>(snap.dim);
    snap.state.theta.push_back(detail::to_double(cells[o], where));
    snap.state.c_a.push_back(detail::to_double(cells[o + 1], where));
    snap.state.n.push_back(detail::to_double(cells[o + 2], where));
    if (co2) snap.co2_eq.push_back(detail::to_double(cells[o + 3], where));
  }
  std::size_t expect = static_cast<std::size_t>(snap.shape);
  if (snap.dim == 2) expect *= static_cast<std::size_t>(snap.shape);
  if (snap.coords.size() != expect) throw IoError(where + ": row count does not match shape");
  return snap;
}

// ---------------------------------------------------------------------------
// Front log

/// Streams front samples as "t,<ray>,<ray>..." rows with 15 significant
/// digits; absent fronts are written as NA.
class FrontLogWriter {
 public:
  FrontLogWriter(const std::filesystem::path& path, const std::vector<FrontRay>& rays)
      : path_(path), out_(detail::open_out(path)) {
    out_ << "t";
    for (const auto& r : rays) out_ << "," << r.name;
    out_ << "\n";
    detail::check(out_, path_);
  }

  void write(const FrontSample& s) {
    out_ << detail::fmt("%.15g", s.t);
    for (const auto& p : s.position) out_ << "," << (p ? detail::fmt("%.15g", *p) : "NA");
    out_ << "\n";
    detail::check(out_, path_);
  }

  void flush() {
    out_.flush();
    detail::check(out_, path_);
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_front_log(const std::filesystem::path& path, const FrontLog& log) {
  FrontLogWriter w(path, log.rays);
  for (const auto& s : log.samples) w.write(s);
  w.flush();
}

/// Reads a front log. Ray names come from the header; pass the run's rays
/// to restore their geometry (needed for eroded depths).
inline FrontLog read_front_log(const std::filesystem::path& path,
                               const std::vector<FrontRay>& rays = {}) {
  auto in = detail::open_in(path);
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) throw IoError(where + ": empty front log");
  const auto head = detail::split(line);
  if (head.empty() || head[0] != "t") throw IoError(where + ": front log must start with 't'");
  FrontLog log;
  for (std::size_t k = 1; k < head.size(); ++k) {
    FrontRay r;
    r.name = head[k];
    for (const auto& known : rays)
      if (known.name == r.name) r = known;
    log.rays.push_back(r);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != head.size()) throw IoError(where + ": ragged row");
    FrontSample s;
    s.t = detail::to_double(cells[0], where);
    for (std::size_t k = 1; k < cells.size(); ++k)
      s.position.push_back(detail::to_optional(cells[k], where));
    log.samples.push_back(std::move(s));
  }
  return log;
}

// ---------------------------------------------------------------------------
// Study table

inline void write_study_table(const std::filesystem::path& path,
                              const std::vector<ConvergenceRow>& rows) {
  auto out = detail::open_out(path);
  auto opt = [](const std::optional<double>& v) {
    return v ? detail::fmt("%.17g", *v) : std::string("NA");
  };
  out << "N,dx,dt,err_theta,order_theta,err_c,order_c\n";
  for (const auto& r : rows)
    out << r.N << "," << detail::fmt("%.17g", r.dx) << "," << detail::fmt("%.17g", r.dt) << ","
        << opt(r.err_theta) << "," << opt(r.order_theta) << "," << opt(r.err_c) << ","
        << opt(r.order_c) << "\n";
  detail::check(out, path);
}

inline std::vector<ConvergenceRow> read_study_table(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line) || line != "N,dx,dt,err_theta,order_theta,err_c,order_c")
    throw IoError(where + ": unexpected study table header");
  std::vector<ConvergenceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = detail::split(line);
    if (c.size() != 7) throw IoError(where + ": ragged row");
    ConvergenceRow r;
    r.N = static_cast<int>(detail::to_double(c[0], where));
    r.dx = detail::to_double(c[1], where);
    r.dt = detail::to_double(c[2], where);
    r.err_theta = detail::to_optional(c[3], where);
    r.order_theta = detail::to_optional(c[4], where);
    r.err_c = detail::to_optional(c[5], where);
    r.order_c = detail::to_optional(c[6], where);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Manifest

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string command;      ///< run, study
  std::string config_hash;  ///< FNV-1a of the canonical configuration
  std::string scenario;
  std::string version = kVersion;
  std::string started;
  std::string finished;
  std::string status;  ///< completed, fully_eroded, config_error, solver_failure, io_error
  int exit_code = 0;
  std::string message;
  std::vector<std::string> files;  ///< relative to the output directory

  nlohmann::json to_json() const {
    return {{"command", command},   {"config_hash", config_hash}, {"scenario", scenario},
            {"version", version},   {"started", started},         {"finished", finished},
            {"status", status},     {"exit_code", exit_code},     {"message", message},
            {"files", files}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.scenario = j.at("scenario").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.exit_code = j.at("exit_code").get<int>();
    m.message = j.at("message").get<std::string>();
    m.files = j.at("files").get<std::vector<std::string>>();
    return m;
  }
};

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  auto out = detail::open_out(path);
  out << m.to_json().dump(2) << "\n";
  detail::check(out, path);
}

inline RunManifest read_manifest(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return RunManifest::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace erosim

#pragma once

/// \file config.hpp
/// YAML run configuration: scenario preset plus overrides, solver, output
/// and study settings. Every rejected value reports its source line.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "erosim/errors.hpp"
#include "erosim/physics.hpp"
#include "erosim/solver.hpp"
#include "erosim/study.hpp"

namespace erosim {

struct OutputOptions {
  std::vector<double> snapshot_times;  ///< [s]; the final state is always written too
  double front_interval = 0.0;         ///< [s]; 0 samples the front every step
  bool co2_eq = false;                 ///< add c_a / K_c to snapshots
};

struct Config {
  Scenario scenario;
  SolverOptions solver;
  OutputOptions output;
  StudyOptions study;
};

inline std::vector<double> default_snapshot_times() {
  return {7.0 * kSecondsPerDay, 180.0 * kSecondsPerDay, kSecondsPerYear};
}

inline Config default_config(ScenarioKind kind) {
  Config c;
  c.scenario = make_scenario(kind);
  c.output.snapshot_times = default_snapshot_times();
  c.output.front_interval = kind == ScenarioKind::catastrophic_1d ? 0.0 : 3600.0;
  return c;
}

/// Parses "3600", "6h", "180 d", "1y" into seconds. Units: s, min, h, d, w, y.
inline std::optional<double> parse_duration(std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) return std::nullopt;
  std::string unit(end);
  unit.erase(0, unit.find_first_not_of(' '));
  double scale;
  if (unit.empty() || unit == "s")
    scale = 1.0;
  else if (unit == "min")
    scale = 60.0;
  else if (unit == "h")
    scale = 3600.0;
  else if (unit == "d")
    scale = kSecondsPerDay;
  else if (unit == "w")
    scale = 7.0 * kSecondsPerDay;
  else if (unit == "y")
    scale = kSecondsPerYear;
  else
    return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v * scale;
}

namespace detail {

inline int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : -1; }

/// A mapping node whose keys are checked against an allowed set.
class Section {
 public:
  Section(const YAML::Node& node, std::string name, std::initializer_list<const char*> keys)
      : node_(node), name_(std::move(name)) {
    if (!node_) return;
    if (!node_.IsMap()) throw ConfigError("'" + name_ + "' must be a mapping", line_of(node_));
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key))
        throw ConfigError("unknown key '" + key + "' in '" + name_ + "'", line_of(kv.first));
    }
  }

  bool present() const { return static_cast<bool>(node_); }
  int line() const { return line_of(node_); }
  YAML::Node get(const char* key) const {
    const YAML::Node& n = node_;
    return n ? n[key] : YAML::Node(YAML::NodeType::Undefined);
  }
  std::string path(const char* key) const { return name_ + "." + key; }

  template <class T>
  bool read(const char* key, T& out) const {
    const YAML::Node v = get(key);
    if (!v) return false;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("'" + path(key) + "' has the wrong type", line_of(v));
    }
    return true;
  }

  bool read_number(const char* key, double& out, double lo, double hi, bool open_lo = false) const {
    const YAML::Node v = get(key);
    double x;
    if (!read(key, x)) return false;
    if (!std::isfinite(x) || x < lo || x > hi || (open_lo && x == lo))
      throw ConfigError("'" + path(key) + "' is out of range", line_of(v));
    out = x;
    return true;
  }

  bool read_int(const char* key, int& out, int lo, int hi) const {
    const YAML::Node v = get(key);
    int x;
    if (!read(key, x)) return false;
    if (x < lo || x > hi) throw ConfigError("'" + path(key) + "' is out of range", line_of(v));
    out = x;
    return true;
  }

  bool read_duration(const char* key, double& out, bool allow_zero) const {
    const YAML::Node v = get(key);
    if (!v) return false;
    out = duration_value(v, path(key), allow_zero);
    return true;
  }

  static double duration_value(const YAML::Node& v, const std::string& what, bool allow_zero) {
    if (!v.IsScalar()) throw ConfigError("'" + what + "' must be a duration", line_of(v));
    const auto d = parse_duration(v.Scalar());
    if (!d) throw ConfigError("'" + what + "' is not a duration", line_of(v));
    if (*d < 0.0 || (!allow_zero && *d == 0.0))
      throw ConfigError("'" + what + "' must be " + (allow_zero ? "non-negative" : "positive"),
                        line_of(v));
    return *d;
  }

 private:
  YAML::Node node_;
  std::string name_;
};

inline double inf() { return std::numeric_limits<double>::infinity(); }

inline void read_point(const Section& s, const char* key, Point& p) {
  const YAML::Node v = s.get(key);
  if (!v) return;
  if (!v.IsSequence() || v.size() < 1 || v.size() > 2)
    throw ConfigError("'" + s.path(key) + "' must be a list of 1 or 2 numbers", line_of(v));
  try {
    p[0] = v[0].as<double>();
    if (v.size() == 2) p[1] = v[1].as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + s.path(key) + "' must hold numbers", line_of(v));
  }
}

inline void read_ambient(const YAML::Node& root, Ambient& a) {
  Section s(root["ambient"], "ambient", {"E", "C", "temperature", "relative_humidity", "schedule"});
  if (!s.present()) return;
  const bool has_E = static_cast<bool>(s.get("E"));
  const bool has_T = static_cast<bool>(s.get("temperature"));
  const bool has_u = static_cast<bool>(s.get("relative_humidity"));
  if (has_T != has_u)
    throw ConfigError("'ambient.temperature' and 'ambient.relative_humidity' go together", s.line());
  if (has_E && has_T)
    throw ConfigError("give either 'ambient.E' or temperature and humidity", line_of(s.get("E")));
  s.read_number("E", a.E, 0.0, 1.0);
  s.read_number("C", a.C, 0.0, inf());
  if (has_T) {
    double T = 0.0, u = 0.0;
    s.read_number("temperature", T, -20.0, 60.0);
    s.read_number("relative_humidity", u, 0.0, 1.0);
    a.E = ambient_humidity(T, u);
  }
  const YAML::Node sched = s.get("schedule");
  if (!sched) return;
  if (!sched.IsSequence()) throw ConfigError("'ambient.schedule' must be a list", line_of(sched));
  a.schedule.clear();
  double last = -1.0;
  for (const auto& item : sched) {
    Section e(item, "ambient.schedule[]", {"t", "E", "C", "temperature", "relative_humidity"});
    Ambient::Sample smp{0.0, a.E, a.C};
    if (!e.read_duration("t", smp.t_start, true))
      throw ConfigError("schedule entry needs 't'", line_of(item));
    if (smp.t_start <= last)
      throw ConfigError("schedule times must increase", line_of(item["t"]));
    last = smp.t_start;
    e.read_number("E", smp.E, 0.0, 1.0);
    e.read_number("C", smp.C, 0.0, inf());
    if (e.get("temperature") || e.get("relative_humidity")) {
      double T = 0.0, u = 0.0;
      if (!e.read_number("temperature", T, -20.0, 60.0) ||
          !e.read_number("relative_humidity", u, 0.0, 1.0))
        throw ConfigError("schedule entry needs both temperature and relative_humidity",
                          line_of(item));
      smp.E = ambient_humidity(T, u);
    }
    a.schedule.push_back(smp);
  }
}

inline void read_model(const YAML::Node& root, ModelParams& p) {
  Section s(root["model"], "model",
            {"mu", "rho_0", "D_c", "K_c", "n_tilde", "K_w", "K_a", "K_n", "n_max",
             "outside_porosity"});
  s.read_number("mu", p.mu, 0.0, inf(), true);
  s.read_number("rho_0", p.rho_0, 0.0, inf(), true);
  s.read_number("D_c", p.D_c, 0.0, inf());
  s.read_number("K_c", p.K_c, 0.0, inf());
  s.read_number("K_w", p.K_w, 0.0, inf());
  s.read_number("K_a", p.K_a, 0.0, inf());
  s.read_number("K_n", p.K_n, 0.0, inf());
  s.read_number("n_tilde", p.n_tilde, 0.0, 1.0, true);
  s.read_number("n_max", p.n_max, 0.0, 1.0, true);
  std::string op;
  if (s.read("outside_porosity", op)) {
    if (op == "one")
      p.outside_porosity = OutsidePorosity::one;
    else if (op == "n_max")
      p.outside_porosity = OutsidePorosity::n_max;
    else
      throw ConfigError("'model.outside_porosity' must be 'one' or 'n_max'",
                        line_of(s.get("outside_porosity")));
  }
  if (!(p.n_tilde < p.n_max && p.n_max < 1.0)) {
    const YAML::Node at = s.get("n_max") ? s.get("n_max") : s.get("n_tilde");
    throw ConfigError("porosities must satisfy 0 < n_tilde < n_max < 1",
                      at ? line_of(at) : (s.present() ? s.line() : 1));
  }
}

inline void read_absorption(const YAML::Node& root, ModelParams& p) {
  Section s(root["absorption"], "absorption", {"law", "symmetric", "asymmetric", "linear"});
  std::string law;
  if (s.read("law", law)) {
    try {
      p.law = law_kind_from_string(law);
    } catch (const std::exception&) {
      throw ConfigError("unknown absorption law '" + law + "'", line_of(s.get("law")));
    }
  }
  Section sym(s.get("symmetric"), "absorption.symmetric", {"s_R", "s_S", "D"});
  sym.read_number("s_R", p.symmetric.s_R, 0.0, 1.0);
  sym.read_number("s_S", p.symmetric.s_S, 0.0, 1.0);
  sym.read_number("D", p.symmetric.D, 0.0, inf(), true);
  if (!(p.symmetric.s_R < p.symmetric.s_S))
    throw ConfigError("symmetric law needs s_R < s_S", sym.present() ? sym.line() : s.line());
  Section asy(s.get("asymmetric"), "absorption.asymmetric",
              {"s_R", "s_S", "alpha", "c", "K_s", "gamma"});
  asy.read_number("s_R", p.asymmetric.s_R, 0.0, 1.0);
  asy.read_number("s_S", p.asymmetric.s_S, 0.0, 1.0);
  asy.read_number("alpha", p.asymmetric.alpha, 0.0, 1.0, true);
  asy.read_number("c", p.asymmetric.c, 0.0, inf(), true);
  asy.read_number("K_s", p.asymmetric.K_s, 0.0, inf(), true);
  asy.read_number("gamma", p.asymmetric.gamma, 0.0, inf(), true);
  if (!(p.asymmetric.s_R < p.asymmetric.s_S))
    throw ConfigError("asymmetric law needs s_R < s_S", asy.present() ? asy.line() : s.line());
  Section lin(s.get("linear"), "absorption.linear", {"D"});
  lin.read_number("D", p.linear.D, 0.0, inf(), true);
}

inline void read_solver(const YAML::Node& root, SolverOptions& o) {
  Section s(root["solver"], "solver",
            {"tolerance", "max_outer", "max_newton", "refactor_ratio", "jacobian_regularization",
             "geometry_refresh", "max_halvings", "restore_after"});
  s.read_number("tolerance", o.tolerance, 0.0, 1.0, true);
  s.read_int("max_outer", o.max_outer, 1, 100000);
  s.read_int("max_newton", o.max_newton, 1, 100000);
  const YAML::Node rr = s.get("refactor_ratio");
  if (rr && !(rr.IsScalar() && rr.Scalar() == "auto")) {
    s.read_number("refactor_ratio", o.refactor_ratio, 0.0, 1.0);
  } else if (rr) {
    o.refactor_ratio = -1.0;
  }
  s.read_number("jacobian_regularization", o.jacobian_regularization, 0.0, inf());
  s.read_number("geometry_refresh", o.geometry_refresh, 0.0, inf());
  s.read_int("max_halvings", o.max_halvings, 0, 60);
  s.read_int("restore_after", o.restore_after, 1, 1 << 30);
}

inline void read_output(const YAML::Node& root, OutputOptions& o) {
  Section s(root["output"], "output", {"snapshot_times", "front_interval", "co2_eq"});
  const YAML::Node st = s.get("snapshot_times");
  if (st) {
    if (!st.IsSequence())
      throw ConfigError("'output.snapshot_times' must be a list", line_of(st));
    o.snapshot_times.clear();
    for (const auto& v : st)
      o.snapshot_times.push_back(Section::duration_value(v, "output.snapshot_times[]", true));
  }
  s.read_duration("front_interval", o.front_interval, true);
  s.read("co2_eq", o.co2_eq);
}

inline void read_study(const YAML::Node& root, StudyOptions& o) {
  Section s(root["study"], "study", {"levels", "horizon", "manufactured", "threads"});
  s.read_int("levels", o.levels, 3, 12);
  s.read_duration("horizon", o.horizon, false);
  s.read("manufactured", o.manufactured);
  s.read_int("threads", o.threads, 0, 1024);
}

}  // namespace detail

/// Builds a configuration from YAML text. The scenario preset named in
/// `scenario.kind` supplies every value not given explicitly.
inline Config parse_config(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : -1);
  }
  if (doc.IsNull()) doc = YAML::Node(YAML::NodeType::Map);
  const YAML::Node& root = doc;
  if (!root.IsMap()) throw ConfigError("configuration must be a mapping", detail::line_of(root));
  {
    std::set<std::string> allowed{"scenario", "grid",   "sample", "time",  "ambient",
                                  "model",    "absorption", "solver", "output", "study"};
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key))
        throw ConfigError("unknown section '" + key + "'", detail::line_of(kv.first));
    }
  }

  detail::Section sc(root["scenario"], "scenario", {"kind", "name"});
  ScenarioKind kind = ScenarioKind::standard_1d;
  std::string kind_name;
  if (sc.read("kind", kind_name)) {
    try {
      kind = scenario_kind_from_string(kind_name);
    } catch (const ConfigError&) {
      throw ConfigError("unknown scenario kind '" + kind_name + "'",
                        detail::line_of(sc.get("kind")));
    }
  }
  Config cfg = default_config(kind);
  Scenario& s = cfg.scenario;
  sc.read("name", s.name);

  detail::Section grid(root["grid"], "grid", {"dim", "N", "domain", "initial_geometry"});
  grid.read_int("dim", s.dim, 1, 2);
  grid.read_int("N", s.N, 4, 1 << 20);
  if (const YAML::Node d = grid.get("domain")) {
    if (!d.IsSequence() || d.size() != 2)
      throw ConfigError("'grid.domain' must be [lo, hi]", detail::line_of(d));
    try {
      s.domain_lo = d[0].as<double>();
      s.domain_hi = d[1].as<double>();
    } catch (const YAML::Exception&) {
      throw ConfigError("'grid.domain' must hold numbers", detail::line_of(d));
    }
    if (!(s.domain_lo < s.domain_hi))
      throw ConfigError("'grid.domain' must have lo < hi", detail::line_of(d));
  }
  std::string geo;
  if (grid.read("initial_geometry", geo)) {
    try {
      s.initial_geometry = initial_geometry_from_string(geo);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), detail::line_of(grid.get("initial_geometry")));
    }
  }

  detail::Section sample(root["sample"], "sample", {"lo", "hi"});
  detail::read_point(sample, "lo", s.sample_lo);
  detail::read_point(sample, "hi", s.sample_hi);
  for (int a = 0; a < s.dim; ++a)
    if (!(s.domain_lo < s.sample_lo[a] && s.sample_lo[a] < s.sample_hi[a] &&
          s.sample_hi[a] < s.domain_hi))
      throw ConfigError("sample box must lie strictly inside the domain",
                        sample.present() ? sample.line() : (grid.present() ? grid.line() : 1));

  detail::Section time(root["time"], "time", {"duration", "dt"});
  time.read_duration("duration", s.duration, true);
  time.read_duration("dt", s.dt, false);

  detail::read_ambient(root, s.ambient);
  detail::read_model(root, s.params);
  detail::read_absorption(root, s.params);
  detail::read_solver(root, cfg.solver);
  detail::read_output(root, cfg.output);
  detail::read_study(root, cfg.study);

  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), 1);
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), 1);
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read configuration '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

/// Complete YAML rendering of a configuration; parse_config(emit_config(c))
/// reproduces c.
inline std::string emit_config(const Config& c) {
  const Scenario& s = c.scenario;
  const ModelParams& p = s.params;
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.kind));
  e << YAML::Key << "name" << YAML::Value << s.name << YAML::EndMap;

  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dim" << YAML::Value << s.dim;
  e << YAML::Key << "N" << YAML::Value << s.N;
  e << YAML::Key << "domain" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.domain_lo
    << s.domain_hi << YAML::EndSeq;
  e << YAML::Key << "initial_geometry" << YAML::Value
    << std::string(to_string(s.initial_geometry)) << YAML::EndMap;

  e << YAML::Key << "sample" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "lo" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.sample_lo[0]
    << s.sample_lo[1] << YAML::EndSeq;
  e << YAML::Key << "hi" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.sample_hi[0]
    << s.sample_hi[1] << YAML::EndSeq << YAML::EndMap;

  e << YAML::Key << "time" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "duration" << YAML::Value << s.duration;
  e << YAML::Key << "dt" << YAML::Value << s.dt << YAML::EndMap;

  e << YAML::Key << "ambient" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "E" << YAML::Value << s.ambient.E;
  e << YAML::Key << "C" << YAML::Value << s.ambient.C;
  if (!s.ambient.schedule.empty()) {
    e << YAML::Key << "schedule" << YAML::Value << YAML::BeginSeq;
    for (const auto& smp : s.ambient.schedule)
      e << YAML::Flow << YAML::BeginMap << YAML::Key << "t" << YAML::Value << smp.t_start
        << YAML::Key << "E" << YAML::Value << smp.E << YAML::Key << "C" << YAML::Value << smp.C
        << YAML::EndMap;
    e << YAML::EndSeq;
  }
  e << YAML::EndMap;

  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mu" << YAML::Value << p.mu;
  e << YAML::Key << "rho_0" << YAML::Value << p.rho_0;
  e << YAML::Key << "D_c" << YAML::Value << p.D_c;
  e << YAML::Key << "K_c" << YAML::Value << p.K_c;
  e << YAML::Key << "n_tilde" << YAML::Value << p.n_tilde;
  e << YAML::Key << "K_w" << YAML::Value << p.K_w;
  e << YAML::Key << "K_a" << YAML::Value << p.K_a;
  e << YAML::Key << "K_n" << YAML::Value << p.K_n;
  e << YAML::Key << "n_max" << YAML::Value << p.n_max;
  e << YAML::Key << "outside_porosity" << YAML::Value
    << (p.outside_porosity == OutsidePorosity::one ? "one" : "n_max") << YAML::EndMap;

  e << YAML::Key << "absorption" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "law" << YAML::Value << std::string(to_string(p.law));
  e << YAML::Key << "symmetric" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "s_R" << YAML::Value << p.symmetric.s_R;
  e << YAML::Key << "s_S" << YAML::Value << p.symmetric.s_S;
  e << YAML::Key << "D" << YAML::Value << p.symmetric.D << YAML::EndMap;
  e << YAML::Key << "asymmetric" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "s_R" << YAML::Value << p.asymmetric.s_R;
  e << YAML::Key << "s_S" << YAML::Value << p.asymmetric.s_S;
  e << YAML::Key << "alpha" << YAML::Value << p.asymmetric.alpha;
  e << YAML::Key << "c" << YAML::Value << p.asymmetric.c;
  e << YAML::Key << "K_s" << YAML::Value << p.asymmetric.K_s;
  e << YAML::Key << "gamma" << YAML::Value << p.asymmetric.gamma << YAML::EndMap;
  e << YAML::Key << "linear" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "D" << YAML::Value << p.linear.D << YAML::EndMap;
  e << YAML::EndMap;

  const SolverOptions& o = c.solver;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tolerance" << YAML::Value << o.tolerance;
  e << YAML::Key << "max_outer" << YAML::Value << o.max_outer;
  e << YAML::Key << "max_newton" << YAML::Value << o.max_newton;
  e << YAML::Key << "refactor_ratio" << YAML::Value;
  if (o.refactor_ratio < 0.0)
    e << "auto";
  else
    e << o.refactor_ratio;
  e << YAML::Key << "jacobian_regularization" << YAML::Value << o.jacobian_regularization;
  e << YAML::Key << "geometry_refresh" << YAML::Value << o.geometry_refresh;
  e << YAML::Key << "max_halvings" << YAML::Value << o.max_halvings;
  e << YAML::Key << "restore_after" << YAML::Value << o.restore_after << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "snapshot_times" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double t : c.output.snapshot_times) e << t;
  e << YAML::EndSeq;
  e << YAML::Key << "front_interval" << YAML::Value << c.output.front_interval;
  e << YAML::Key << "co2_eq" << YAML::Value << c.output.co2_eq << YAML::EndMap;

  e << YAML::Key << "study" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "levels" << YAML::Value << c.study.levels;
  e << YAML::Key << "horizon" << YAML::Value << c.study.horizon;
  e << YAML::Key << "manufactured" << YAML::Value << c.study.manufactured;
  e << YAML::Key << "threads" << YAML::Value << c.study.threads << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace erosim

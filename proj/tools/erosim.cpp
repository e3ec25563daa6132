// erosim: command-line driver for the stone erosion simulator.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "erosim/config.hpp"
#include "erosim/io.hpp"
#include "erosim/simulation.hpp"
#include "erosim/study.hpp"

namespace fs = std::filesystem;
using namespace erosim;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

constexpr const char* kOutputEnv = "EROSIM_OUTPUT_DIR";

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "erosim-out";
}

std::string time_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

/// Collects the manifest as a command proceeds and writes it however the
/// command ends.
class ManifestGuard {
 public:
  ManifestGuard(fs::path dir, std::string command) : dir_(std::move(dir)) {
    m_.command = std::move(command);
    m_.started = utc_timestamp(std::chrono::system_clock::now());
  }

  RunManifest& manifest() { return m_; }
  void add(const fs::path& p) { m_.files.push_back(fs::relative(p, dir_).generic_string()); }

  int finish(int code, std::string status, std::string message = {}) {
    m_.exit_code = code;
    m_.status = std::move(status);
    m_.message = std::move(message);
    m_.finished = utc_timestamp(std::chrono::system_clock::now());
    try {
      fs::create_directories(dir_);
      write_manifest(dir_ / "manifest.json", m_);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return code == kOk ? kIo : code;
    }
    return code;
  }

 private:
  fs::path dir_;
  RunManifest m_;
};

std::vector<double> parse_times(const std::string& list) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(list);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    if (item.empty()) continue;
    const auto d = parse_duration(item);
    if (!d || *d < 0.0) throw ConfigError("bad snapshot time '" + item + "'");
    out.push_back(*d);
  }
  return out;
}

struct Common {
  std::string config;
  std::string out;
  std::string law;
  std::string snapshot_times;
  int threads = -1;
};

Config load(const Common& c) {
  Config cfg = load_config(c.config);
  if (!c.law.empty()) {
    try {
      cfg.scenario.params.law = law_kind_from_string(c.law);
    } catch (const std::exception&) {
      throw ConfigError("unknown absorption law '" + c.law + "'");
    }
  }
  if (!c.snapshot_times.empty()) cfg.output.snapshot_times = parse_times(c.snapshot_times);
  if (c.threads >= 0) cfg.study.threads = c.threads;
  return cfg;
}

int report_config_error(const ConfigError& e, const std::string& path) {
  std::cerr << path << ":" << (e.line() >= 0 ? std::to_string(e.line()) + ": " : " ")
            << "config error: ";
  const std::string what = e.what();
  const std::string prefix = "line " + std::to_string(e.line()) + ": ";
  std::cerr << (e.line() >= 0 && what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what)
            << "\n";
  return kConfig;
}

int cmd_run(const Common& c) {
  const fs::path dir = output_dir(c.out);
  ManifestGuard guard(dir, "run");
  Config cfg;
  try {
    cfg = load(c);
  } catch (const ConfigError& e) {
    report_config_error(e, c.config);
    return guard.finish(kConfig, "config_error", e.what());
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return guard.finish(kIo, "io_error", e.what());
  }
  const Scenario& sc = cfg.scenario;
  const std::string canonical = emit_config(cfg);
  guard.manifest().config_hash = "fnv1a64:" + hex64(fnv1a(canonical));
  guard.manifest().scenario = sc.name;

  try {
    fs::create_directories(dir);
    {
      std::ofstream out(dir / "config.yaml");
      out << canonical;
      if (!out) throw IoError("cannot write '" + (dir / "config.yaml").string() + "'");
      guard.add(dir / "config.yaml");
    }
    FrontLogWriter front(dir / "front.csv", monitor_rays(sc));
    guard.add(dir / "front.csv");
    const std::optional<double> co2 =
        cfg.output.co2_eq ? std::optional<double>(sc.params.K_c) : std::nullopt;

    RunOptions ro;
    ro.front_interval = cfg.output.front_interval;
    ro.keep_log = true;
    for (double t : cfg.output.snapshot_times)
      if (t <= sc.duration + 1e-9) ro.snapshot_times.push_back(t);
    ro.on_front = [&](const FrontSample& s) { front.write(s); };
    ro.on_snapshot = [&](const Solver& solver) {
      const fs::path p = dir / ("snapshot_" + time_tag(solver.state().t) + "s.csv");
      write_snapshot(p, solver.grid(), solver.state(), co2);
      guard.add(p);
    };

    RunResult res;
    try {
      res = simulate(sc, cfg.solver, ro);
    } catch (const SolverError& e) {
      front.flush();
      std::cerr << "solver failure: " << e.what() << "\n";
      return guard.finish(kSolver, "solver_failure", e.what());
    } catch (const GeometryError& e) {
      front.flush();
      std::cerr << "solver failure: " << e.what() << "\n";
      return guard.finish(kSolver, "solver_failure", e.what());
    } catch (const AssemblyError& e) {
      front.flush();
      std::cerr << "solver failure: " << e.what() << "\n";
      return guard.finish(kSolver, "solver_failure", e.what());
    }
    front.flush();
    write_snapshot(dir / "final.csv", sc.grid(), res.final_state, co2);
    guard.add(dir / "final.csv");

    std::printf("scenario %s: %ld steps, t = %.6g s\n", sc.name.c_str(), res.steps,
                res.final_state.t);
    for (std::size_t k = 0; k < res.log.rays.size(); ++k) {
      const auto e = res.log.samples.empty() ? std::nullopt
                                             : res.log.erosion(k, res.log.samples.size() - 1);
      if (e)
        std::printf("  %-6s eroded %.15g cm\n", res.log.rays[k].name.c_str(), *e);
      else
        std::printf("  %-6s no front\n", res.log.rays[k].name.c_str());
    }
    const bool eroded = res.status == RunStatus::fully_eroded;
    return guard.finish(kOk, eroded ? "fully_eroded" : "completed");
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return guard.finish(kIo, "io_error", e.what());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return guard.finish(kIo, "io_error", e.what());
  }
}

int cmd_study(const Common& c, std::optional<int> levels, bool manufactured) {
  const fs::path dir = output_dir(c.out);
  ManifestGuard guard(dir, "study");
  Config cfg;
  try {
    cfg = load(c);
    if (levels) {
      if (*levels < 3) throw ConfigError("a convergence study needs at least 3 levels");
      cfg.study.levels = *levels;
    }
    if (manufactured) cfg.study.manufactured = true;
  } catch (const ConfigError& e) {
    report_config_error(e, c.config);
    return guard.finish(kConfig, "config_error", e.what());
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return guard.finish(kIo, "io_error", e.what());
  }
  const std::string canonical = emit_config(cfg);
  guard.manifest().config_hash = "fnv1a64:" + hex64(fnv1a(canonical));
  guard.manifest().scenario =
      cfg.study.manufactured ? std::string("manufactured_1d") : cfg.scenario.name;

  StudyResult res;
  if (cfg.study.manufactured) {
    ManufacturedProblem mp;
    res = manufactured_study(mp, cfg.scenario.N, cfg.scenario.dt, cfg.solver, cfg.study);
  } else {
    res = convergence_study(cfg.scenario, cfg.solver, cfg.study);
  }
  try {
    fs::create_directories(dir);
    write_study_table(dir / "study.csv", res.rows);
    guard.add(dir / "study.csv");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return guard.finish(kIo, "io_error", e.what());
  }
  auto opt = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("NA");
    std::snprintf(buf, sizeof buf, "%.4g", *v);
    return std::string(buf);
  };
  std::printf("%6s %10s %10s %12s %8s %12s %8s\n", "N", "dx", "dt", "err_theta", "order",
              "err_c", "order");
  for (const auto& r : res.rows)
    std::printf("%6d %10.4g %10.4g %12s %8s %12s %8s\n", r.N, r.dx, r.dt, opt(r.err_theta).c_str(),
                opt(r.order_theta).c_str(), opt(r.err_c).c_str(), opt(r.order_c).c_str());
  if (res.failure) {
    std::cerr << "solver failure: " << *res.failure << "\n";
    return guard.finish(kSolver, "solver_failure", *res.failure);
  }
  return guard.finish(kOk, "completed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Carbonate stone erosion simulator"};
  app.require_subcommand(1);

  Common run_opts, study_opts, check_opts;
  auto add_common = [](CLI::App* sub, Common& c) {
    sub->add_option("config", c.config, "YAML configuration")->required();
    sub->add_option("-o,--output", c.out,
                    std::string("output directory (default: $") + kOutputEnv + " or erosim-out)");
    sub->add_option("--law", c.law, "absorption law override: symmetric, asymmetric, linear");
    sub->add_option("--threads", c.threads, "worker threads (0: all cores)")
        ->check(CLI::NonNegativeNumber);
  };

  auto* run = app.add_subcommand("run", "run a scenario");
  add_common(run, run_opts);
  run->add_option("--snapshot-times", run_opts.snapshot_times,
                  "comma separated snapshot times, e.g. 1w,180d,1y");

  auto* study = app.add_subcommand("study", "grid refinement study");
  add_common(study, study_opts);
  std::optional<int> levels;
  bool manufactured = false;
  study->add_option("--levels", levels, "number of grids (at least 3)");
  study->add_flag("--manufactured", manufactured, "use the manufactured solution");

  auto* validate = app.add_subcommand("validate-config", "check a configuration and exit");
  validate->add_option("config", check_opts.config, "YAML configuration")->required();

  auto* defaults = app.add_subcommand("print-defaults", "print the full default configuration");
  std::string kind = "standard_1d";
  defaults->add_option("--scenario", kind, "standard_1d, standard_2d or catastrophic_1d");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*study) return cmd_study(study_opts, levels, manufactured);
    if (*validate) {
      try {
        const Config cfg = load_config(check_opts.config);
        std::printf("%s: ok (%s, %s law)\n", check_opts.config.c_str(), cfg.scenario.name.c_str(),
                    std::string(to_string(cfg.scenario.params.law)).c_str());
        return kOk;
      } catch (const ConfigError& e) {
        return report_config_error(e, check_opts.config);
      }
    }
    if (*defaults) {
      try {
        std::cout << emit_config(default_config(scenario_kind_from_string(kind)));
        return kOk;
      } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
      }
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kOk;
}

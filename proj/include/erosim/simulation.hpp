#pragma once

/// \file simulation.hpp
/// Fixed-step driver: runs a scenario to its end time, sampling the front
/// and handing snapshots to a callback.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "erosim/analysis.hpp"
#include "erosim/physics.hpp"
#include "erosim/solver.hpp"

namespace erosim {

struct RunOptions {
  /// Simulated seconds between front samples; 0 samples every step.
  double front_interval = 0.0;
  std::vector<double> snapshot_times;  ///< [s]
  std::function<void(const Solver&)> on_snapshot;
  std::function<void(const FrontSample&)> on_front;
  std::function<void(const StepReport&)> on_step;
  bool keep_log = true;  ///< also accumulate the front log in memory
};

enum class RunStatus { completed, fully_eroded };

struct RunResult {
  RunStatus status = RunStatus::completed;
  FrontLog log;
  SimulationState final_state;
  long steps = 0;
  int max_outer = 0;
  double max_residual = 0.0;
  int halvings = 0;
};

inline RunResult simulate(const Scenario& sc, const SolverOptions& opts = {},
                          const RunOptions& run = {}, Forcing forcing = {},
                          std::optional<SimulationState> initial = std::nullopt) {
  sc.validate();
  Solver solver(sc.grid(), sc.params, sc.ambient, initial ? *initial : sc.initial_state(), opts,
                std::move(forcing));
  RunResult res;
  res.log.rays = monitor_rays(sc);

  auto sample = [&](double t) {
    FrontSample s{t, front_positions(solver.grid(), solver.state().n, sc.params.n_max,
                                     res.log.rays)};
    if (run.on_front) run.on_front(s);
    if (run.keep_log) res.log.samples.push_back(std::move(s));
  };

  std::vector<double> snaps = run.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  auto maybe_snapshot = [&](double t) {
    while (next_snap < snaps.size() && snaps[next_snap] <= t + 1e-9 * std::max(1.0, t)) {
      if (run.on_snapshot) run.on_snapshot(solver);
      ++next_snap;
    }
  };

  const long steps = std::lround(sc.duration / sc.dt);
  double next_front = run.front_interval;
  sample(0.0);
  maybe_snapshot(0.0);
  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    try {
      const StepReport rep = solver.step(sc.dt);
      res.max_outer = std::max(res.max_outer, rep.outer_iterations);
      res.max_residual = std::max(res.max_residual, rep.residual);
      res.halvings += rep.halvings;
      if (run.on_step) run.on_step(rep);
    } catch (const FullyEroded&) {
      res.status = RunStatus::fully_eroded;
      res.steps = k;
      sample(t);
      break;
    }
    res.steps = k;
    if (run.front_interval <= 0.0 || t >= next_front - 1e-9 * sc.dt || k == steps) {
      sample(t);
      while (run.front_interval > 0.0 && next_front <= t + 1e-9 * sc.dt)
        next_front += run.front_interval;
    }
    maybe_snapshot(t);
  }
  res.final_state = solver.state();
  return res;
}

}  // namespace erosim

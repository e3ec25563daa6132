#pragma once

/// \file study.hpp
/// Convergence studies: successive refinement of a scenario, and a
/// manufactured solution with known exact fields.

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "erosim/analysis.hpp"
#include "erosim/physics.hpp"
#include "erosim/simulation.hpp"
#include "erosim/solver.hpp"

namespace erosim {

struct StudyOptions {
  int levels = 4;          ///< grids N, 2N, 4N, ...
  double horizon = 3600.0; ///< simulated time at which errors are taken [s]
  bool manufactured = false;
  int threads = 0;         ///< concurrent levels; 0 uses every available core
};

struct StudyResult {
  std::vector<ConvergenceRow> rows;
  std::optional<std::string> failure;  ///< set when a level failed; rows are partial
};

/// Smooth exact solution on a frozen porosity field, 1D, linear absorption.
/// Sources and ambient values are derived from it so that the interior
/// equations and both Robin conditions hold exactly at any boundary point.
class ManufacturedProblem {
 public:
  double tau = 10.0;     ///< decay time of the transient [s]
  double k = 0.9;        ///< wavenumber [1/cm]
  double D = 1e-5;       ///< linear absorption coefficient [cm^2/s]
  double horizon = 20.0; ///< [s]

  ManufacturedProblem() = default;

  Scenario scenario(int N, double dt) const {
    Scenario s = make_scenario(ScenarioKind::standard_1d);
    s.name = "manufactured_1d";
    s.N = N;
    s.dt = dt;
    s.duration = horizon;
    s.params.law = LawKind::linear;
    s.params.linear.D = D;
    return s;
  }

  double porosity(double x, const ModelParams& p) const {
    const double a = kPi * (x - 0.25) / 5.0;
    return p.n_tilde * (1.0 + 0.2 * std::sin(a) * std::sin(a));
  }
  double saturation(double x, double t) const {
    return 0.5 + 0.2 * std::sin(k * x + 0.3) * std::exp(-t / tau);
  }
  double theta(double x, double t, const ModelParams& p) const {
    return porosity(x, p) * saturation(x, t);
  }
  double acid(double x, double t, const ModelParams& p) const {
    return c0(p) * (1.0 + 0.5 * std::cos(k * x) * std::exp(-t / tau));
  }

  SimulationState initial_state(const Scenario& s) const {
    SimulationState st = s.initial_state();
    const Grid g = s.grid();
    for (std::size_t q = 0; q < g.size(); ++q) {
      const double x = g.x(g.i_of(static_cast<int>(q)));
      if (s.in_sample({x, 0.0})) {
        st.n[q] = porosity(x, s.params);
        st.theta[q] = theta(x, 0.0, s.params);
        st.c_a[q] = acid(x, 0.0, s.params);
      } else {
        st.theta[q] = ambient_E(x, 0.0, s.params);
        st.c_a[q] = ambient_C(x, 0.0, s.params);
      }
    }
    return st;
  }

  Forcing forcing(const ModelParams& p) const {
    Forcing f;
    f.freeze_porosity = true;
    f.theta_source = [this, p](Point x, double t) { return fields(x[0], t, p).S_theta; };
    f.acid_source = [this, p](Point x, double t) { return fields(x[0], t, p).S_c; };
    f.ambient_E = [this, p](Point x, double t) { return ambient_E(x[0], t, p); };
    f.ambient_C = [this, p](Point x, double t) { return ambient_C(x[0], t, p); };
    return f;
  }

  double ambient_E(double x, double t, const ModelParams& p) const {
    const auto v = fields(x, t, p);
    return v.theta + normal(x) * v.F / p.K_w;
  }
  double ambient_C(double x, double t, const ModelParams& p) const {
    const auto v = fields(x, t, p);
    return v.c + normal(x) * (v.c * v.F + p.D_c * v.theta * v.c_x) / p.K_a;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static double c0(const ModelParams&) { return 5.5e-7; }
  static double normal(double x) { return x < 2.75 ? -1.0 : 1.0; }

  struct Values {
    double theta, c, c_x, F, S_theta, S_c;
  };

  Values fields(double x, double t, const ModelParams& p) const {
    const double e = std::exp(-t / tau);
    const double a = kPi * (x - 0.25) / 5.0;
    const double nt = p.n_tilde;
    const double n = nt * (1.0 + 0.2 * std::sin(a) * std::sin(a));
    const double n_x = nt * 0.2 * std::sin(2.0 * a) * kPi / 5.0;
    const double r = (n / nt) * (n / nt);
    const double r_x = 2.0 * n * n_x / (nt * nt);
    const double ph = k * x + 0.3;
    const double s = 0.5 + 0.2 * std::sin(ph) * e;
    const double s_x = 0.2 * k * std::cos(ph) * e;
    const double s_xx = -0.2 * k * k * std::sin(ph) * e;
    const double s_t = -0.2 * std::sin(ph) * e / tau;
    const double th = n * s;
    const double th_x = n_x * s + n * s_x;
    const double th_t = n * s_t;
    const double C0 = c0(p);
    const double c = C0 * (1.0 + 0.5 * std::cos(k * x) * e);
    const double c_x = -C0 * 0.5 * k * std::sin(k * x) * e;
    const double c_xx = -C0 * 0.5 * k * k * std::cos(k * x) * e;
    const double c_t = -C0 * 0.5 * std::cos(k * x) * e / tau;
    const double F = D * r * s_x;
    const double F_x = D * (r_x * s_x + r * s_xx);
    Values v;
    v.theta = th;
    v.c = c;
    v.c_x = c_x;
    v.F = F;
    v.S_theta = th_t - F_x;
    v.S_c = th_t * c + th * c_t - (c_x * F + c * F_x) - p.D_c * (th_x * c_x + th * c_xx) +
            p.K_c * p.K_n * p.rho_0 * (1.0 - n) * c;
    return v;
  }
};

namespace detail {

struct LevelRun {
  Grid grid;
  SimulationState state;
  std::vector<char> internal;
  std::optional<std::string> error;
};

template <class F>
void run_levels(int levels, int threads, F&& body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1) {
    for (int l = 0; l < levels; ++l) body(l);
    return;
  }
  std::vector<std::thread> pool;
  for (int start = 0; start < levels; start += threads) {
    pool.clear();
    for (int l = start; l < std::min(levels, start + threads); ++l) pool.emplace_back(body, l);
    for (auto& th : pool) th.join();
  }
}

}  // namespace detail

/// Successive-refinement study: level l runs with N 2^l intervals and
/// dt / 2^l up to the horizon; row l holds the difference between levels l
/// and l+1 on the nodes internal to both.
inline StudyResult convergence_study(const Scenario& base, const SolverOptions& opts,
                                     const StudyOptions& so) {
  if (so.levels < 3) throw ConfigError("a convergence study needs at least 3 levels");
  std::vector<detail::LevelRun> runs(so.levels);
  detail::run_levels(so.levels, so.threads, [&](int l) {
    Scenario s = base;
    s.N = base.N << l;
    s.dt = base.dt / static_cast<double>(1 << l);
    s.duration = so.horizon;
    try {
      Solver solver(s.grid(), s.params, s.ambient, s.initial_state(), opts);
      const long steps = std::lround(s.duration / s.dt);
      for (long k = 0; k < steps; ++k) solver.step(s.dt);
      runs[l].grid = s.grid();
      runs[l].state = solver.state();
      runs[l].internal.assign(s.grid().size(), 0);
      for (int q : solver.classification().internal) runs[l].internal[q] = 1;
    } catch (const std::exception& e) {
      runs[l].error = std::string("level N=") + std::to_string(s.N) + ": " + e.what();
    }
  });

  StudyResult out;
  for (int l = 0; l + 1 < so.levels; ++l) {
    const auto& a = runs[l];
    const auto& b = runs[l + 1];
    if (a.error || b.error) {
      out.failure = a.error ? a.error : b.error;
      break;
    }
    std::vector<char> use(a.grid.size(), 0);
    for (std::size_t q = 0; q < a.grid.size(); ++q) {
      const int i = a.grid.i_of(static_cast<int>(q)), j = a.grid.j_of(static_cast<int>(q));
      use[q] = a.internal[q] && b.internal[b.grid.index(2 * i, 2 * j)];
    }
    ConvergenceRow row;
    row.N = base.N << l;
    row.dx = a.grid.h;
    row.dt = base.dt / static_cast<double>(1 << l);
    row.err_theta = discrete_error(a.grid, a.state.theta, b.grid, b.state.theta, use);
    row.err_c = discrete_error(a.grid, a.state.c_a, b.grid, b.state.c_a, use);
    out.rows.push_back(row);
  }
  fill_orders(out.rows);
  return out;
}

/// Manufactured-solution study: level l error against the exact fields.
inline StudyResult manufactured_study(const ManufacturedProblem& mp, int N0, double dt0,
                                      const SolverOptions& opts, const StudyOptions& so) {
  if (so.levels < 3) throw ConfigError("a convergence study needs at least 3 levels");
  std::vector<ConvergenceRow> rows(so.levels);
  std::vector<std::optional<std::string>> errors(so.levels);
  detail::run_levels(so.levels, so.threads, [&](int l) {
    const Scenario s = mp.scenario(N0 << l, dt0 / static_cast<double>(1 << l));
    try {
      Solver solver(s.grid(), s.params, s.ambient, mp.initial_state(s), opts,
                    mp.forcing(s.params));
      const long steps = std::lround(s.duration / s.dt);
      for (long k = 0; k < steps; ++k) solver.step(s.dt);
      const double T = solver.state().t;
      const auto& nodes = solver.classification().internal;
      rows[l].N = s.N;
      rows[l].dx = s.grid().h;
      rows[l].dt = s.dt;
      rows[l].err_theta = discrete_error(
          s.grid(), solver.state().theta,
          [&](Point x) { return mp.theta(x[0], T, s.params); }, nodes);
      rows[l].err_c = discrete_error(
          s.grid(), solver.state().c_a, [&](Point x) { return mp.acid(x[0], T, s.params); },
          nodes);
    } catch (const std::exception& e) {
      errors[l] = std::string("level N=") + std::to_string(s.N) + ": " + e.what();
    }
  });
  StudyResult out;
  for (int l = 0; l < so.levels; ++l) {
    if (errors[l]) {
      out.failure = errors[l];
      break;
    }
    out.rows.push_back(rows[l]);
  }
  fill_orders(out.rows);
  return out;
}

}  // namespace erosim

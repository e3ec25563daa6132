#pragma once

/// \file physics.hpp
/// Model parameters, ambient environment, scenarios and simulation state.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "erosim/absorption.hpp"
#include "erosim/errors.hpp"
#include "erosim/grid.hpp"

namespace erosim {

/// Porosity imposed at non-internal nodes.
enum class OutsidePorosity { one, n_max };

struct ModelParams {
  // Literature values for marble.
  double mu = 8.9e-3;    ///< water viscosity [g/(cm s)]
  double rho_0 = 2.71;   ///< marble density [g/cm^3]
  double D_c = 1.18e-5;  ///< HCO3- diffusion coefficient [cm^2/s]
  double K_c = 1.7e-3;   ///< reaction constant [cm^3/(g s)]
  // Fitted for marble.
  double n_tilde = 0.0063;  ///< unperturbed porosity
  double K_w = 1e-2;        ///< air-exchange rate [cm/s]
  double K_a = 1e-2;        ///< acid penetration rate [cm/s]
  double K_n = 1e-3;        ///< consumption factor
  double n_max = 0.20;      ///< porosity threshold for material loss

  LawKind law = LawKind::asymmetric;
  SymmetricParams symmetric{};
  AsymmetricParams asymmetric{};
  LinearParams linear{};
  OutsidePorosity outside_porosity = OutsidePorosity::one;

  double outside_n() const noexcept {
    return outside_porosity == OutsidePorosity::one ? 1.0 : n_max;
  }

  /// Residual saturation of the selected law (symmetric value for the linear law).
  double s_R() const noexcept {
    return law == LawKind::asymmetric ? asymmetric.s_R : symmetric.s_R;
  }
  double s_S() const noexcept {
    return law == LawKind::asymmetric ? asymmetric.s_S : symmetric.s_S;
  }

  void validate() const {
    if (!(mu > 0.0)) throw ConfigError("mu must be positive");
    if (!(rho_0 > 0.0)) throw ConfigError("rho_0 must be positive");
    if (!(D_c > 0.0)) throw ConfigError("D_c must be positive");
    // Zero switches a process off; negative rates are rejected.
    if (!(K_c >= 0.0 && K_w >= 0.0 && K_a >= 0.0 && K_n >= 0.0))
      throw ConfigError("K_c, K_w, K_a, K_n must be non-negative");
    if (!(n_tilde > 0.0 && n_tilde < n_max && n_max < 1.0))
      throw ConfigError("porosities must satisfy 0 < n_tilde < n_max < 1");
    make_law();
  }

  AbsorptionLaw make_law() const {
    switch (law) {
      case LawKind::symmetric: return SymmetricLaw(symmetric);
      case LawKind::asymmetric: {
        auto p = asymmetric;
        p.mu = mu;
        return AsymmetricLaw(p);
      }
      case LawKind::linear: return LinearLaw(linear);
    }
    throw ConfigError("unknown absorption law");
  }
};

/// Ambient moisture E and carbonic-acid concentration C, optionally as a
/// piecewise-constant schedule in time.
struct Ambient {
  struct Sample {
    double t_start = 0.0;
    double E = 0.0;
    double C = 0.0;
  };

  double E = 0.001847;  ///< [g/cm^3], read as a water volume fraction
  double C = 5.5e-7;    ///< [g/cm^3]
  std::vector<Sample> schedule;  ///< sorted by t_start; overrides E, C from t_start on

  double E_at(double t) const noexcept { return at(t).E; }
  double C_at(double t) const noexcept { return at(t).C; }

  Sample at(double t) const noexcept {
    Sample s{0.0, E, C};
    for (const auto& q : schedule) {
      if (q.t_start <= t) s = q;
      else break;
    }
    return s;
  }

  void validate() const {
    if (!(E >= 0.0 && C >= 0.0)) throw ConfigError("ambient E and C must be non-negative");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      if (!(schedule[i].E >= 0.0 && schedule[i].C >= 0.0))
        throw ConfigError("ambient schedule values must be non-negative");
      if (i > 0 && !(schedule[i].t_start > schedule[i - 1].t_start))
        throw ConfigError("ambient schedule must be strictly increasing in time");
    }
  }
};

/// Ambient moisture from temperature [°C] and relative humidity (fraction).
inline double ambient_humidity(double T, double u_R) {
  if (!(T >= -20.0 && T <= 60.0)) throw ConfigError("temperature outside [-20, 60] °C");
  if (!(u_R >= 0.0 && u_R <= 1.0)) throw ConfigError("relative humidity outside [0, 1]");
  return u_R * ((5.018 + 0.32321 * T + 8.1847e-3 * T * T + 3.1243e-4 * T * T * T) * 1e-6);
}

struct SimulationState {
  std::vector<double> theta;  ///< moisture volume fraction
  std::vector<double> c_a;    ///< carbonic acid [g/cm^3]
  std::vector<double> n;      ///< porosity
  double t = 0.0;             ///< [s]
};

enum class ScenarioKind { standard_1d, standard_2d, catastrophic_1d };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::standard_1d: return "standard_1d";
    case ScenarioKind::standard_2d: return "standard_2d";
    case ScenarioKind::catastrophic_1d: return "catastrophic_1d";
  }
  return "?";
}

inline ScenarioKind scenario_kind_from_string(std::string_view s) {
  if (s == "standard_1d") return ScenarioKind::standard_1d;
  if (s == "standard_2d") return ScenarioKind::standard_2d;
  if (s == "catastrophic_1d") return ScenarioKind::catastrophic_1d;
  throw ConfigError("unknown scenario kind '" + std::string(s) + "'");
}

/// How the specimen faces enter the initial porosity field. `nodal` marks
/// each node inside or outside, so the initial front sits wherever the level
/// set interpolates between them. `exact` raises the porosity of the first
/// outside nodes so that the zero level set lies on the faces.
enum class InitialGeometry { nodal, exact };

inline std::string_view to_string(InitialGeometry g) {
  return g == InitialGeometry::exact ? "exact" : "nodal";
}

inline InitialGeometry initial_geometry_from_string(std::string_view s) {
  if (s == "nodal") return InitialGeometry::nodal;
  if (s == "exact") return InitialGeometry::exact;
  throw ConfigError("unknown initial geometry '" + std::string(s) + "'");
}

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerYear = 365.0 * kSecondsPerDay;

struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::standard_1d;
  int dim = 1;
  int N = 100;              ///< intervals per axis
  double domain_lo = 0.0;   ///< computational domain [lo, hi]^dim [cm]
  double domain_hi = 5.5;
  Point sample_lo{0.25, 0.75};  ///< specimen box; y ignored in 1D
  Point sample_hi{5.25, 4.75};
  Ambient ambient{};
  double duration = kSecondsPerYear;
  double dt = 1.0;
  ModelParams params{};
  InitialGeometry initial_geometry = InitialGeometry::nodal;

  Grid grid() const { return Grid::covering(dim, domain_lo, domain_hi, N); }

  bool in_sample(Point p) const noexcept {
    constexpr double eps = 1e-12;
    const bool in_x = p[0] >= sample_lo[0] - eps && p[0] <= sample_hi[0] + eps;
    if (dim == 1) return in_x;
    return in_x && p[1] >= sample_lo[1] - eps && p[1] <= sample_hi[1] + eps;
  }

  void validate() const {
    params.validate();
    ambient.validate();
    if (dim != 1 && dim != 2) throw ConfigError("scenario dimension must be 1 or 2");
    if (N < 4) throw ConfigError("grid needs at least 4 intervals");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(duration >= 0.0)) throw ConfigError("duration must be non-negative");
    const int axes = dim;
    for (int a = 0; a < axes; ++a) {
      if (!(sample_lo[a] > domain_lo && sample_hi[a] < domain_hi && sample_lo[a] < sample_hi[a]))
        throw ConfigError("sample geometry must lie strictly inside the computational domain");
    }
  }

  /// Dry pristine specimen: theta = s_R n_tilde, no acid, porosity n_tilde;
  /// ambient values outside.
  SimulationState initial_state() const {
    const Grid g = grid();
    SimulationState s;
    s.theta.resize(g.size());
    s.c_a.resize(g.size());
    s.n.resize(g.size());
    const auto amb = ambient.at(0.0);
    const bool exact = initial_geometry == InitialGeometry::exact;
    const double tol = 1e-9 * g.h;
    auto inside = [&](int k) {
      const Point p = g.coord(k);
      if (!exact) return in_sample(p);
      bool in = p[0] > sample_lo[0] + tol && p[0] < sample_hi[0] - tol;
      if (dim == 2) in = in && p[1] > sample_lo[1] + tol && p[1] < sample_hi[1] - tol;
      return in;
    };
    for (std::size_t q = 0; q < g.size(); ++q) {
      const int k = static_cast<int>(q);
      if (inside(k)) {
        s.theta[q] = params.s_R() * params.n_tilde;
        s.c_a[q] = 0.0;
        s.n[q] = params.n_tilde;
        continue;
      }
      s.theta[q] = amb.E;
      s.c_a[q] = amb.C;
      s.n[q] = params.outside_n();
      if (!exact) continue;
      // phi = n - n_max interpolated linearly towards an inside neighbour
      // vanishes on the face between them.
      const int i = g.i_of(k), j = g.j_of(k);
      double ratio = -1.0;
      for (int a = 0; a < dim; ++a)
        for (int sgn : {-1, 1}) {
          const int ii = i + (a == 0 ? sgn : 0), jj = j + (a == 1 ? sgn : 0);
          if (!g.contains(ii, jj) || !inside(g.index(ii, jj))) continue;
          const double face = sgn > 0 ? sample_lo[a] : sample_hi[a];
          const double dG = std::abs(g.coord(k)[a] - face);
          const double dI = std::abs(g.coord(g.index(ii, jj))[a] - face);
          ratio = std::max(ratio, dG / dI);
        }
      if (ratio >= 0.0) s.n[q] = params.n_max + (params.n_max - params.n_tilde) * ratio;
    }
    return s;
  }
};

struct ScenarioOverrides {
  std::optional<int> N;
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<double> E;
  std::optional<double> C;
  std::optional<LawKind> law;
};

inline Scenario make_scenario(ScenarioKind kind, const ScenarioOverrides& o = {}) {
  Scenario s;
  s.kind = kind;
  s.name = std::string(to_string(kind));
  switch (kind) {
    case ScenarioKind::standard_1d:
      s.dim = 1;
      s.N = 100;
      s.dt = 1.0;
      s.duration = kSecondsPerYear;
      s.params.law = LawKind::asymmetric;
      break;
    case ScenarioKind::standard_2d:
      s.dim = 2;
      s.N = 100;
      s.dt = 0.1;
      s.duration = kSecondsPerYear;
      s.params.law = LawKind::asymmetric;
      break;
    case ScenarioKind::catastrophic_1d:
      s.dim = 1;
      s.N = 100;
      s.dt = 1.0;
      s.duration = kSecondsPerDay;
      s.params.law = LawKind::symmetric;
      s.ambient.E = s.params.n_tilde;
      break;
  }
  if (o.N) s.N = *o.N;
  if (o.dt) s.dt = *o.dt;
  if (o.duration) s.duration = *o.duration;
  if (o.E) s.ambient.E = *o.E;
  if (o.C) s.ambient.C = *o.C;
  if (o.law) s.params.law = *o.law;
  s.validate();
  return s;
}

}  // namespace erosim

#pragma once

/// \file analysis.hpp
/// Front tracking, erosion rates, discrete error norms and convergence tables.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erosim/errors.hpp"
#include "erosim/grid.hpp"
#include "erosim/level_set.hpp"
#include "erosim/physics.hpp"

namespace erosim {

/// Axis-aligned ray from an interior start node towards one face of the
/// specimen. `edge` is the initial specimen face crossed by the ray.
struct FrontRay {
  std::string name;
  int start_i = 0;
  int start_j = 0;
  int di = 0;
  int dj = 0;
  double edge = 0.0;
};

/// Left/right rays in 1D; additionally bottom/top in 2D, all through the
/// node nearest to the specimen centre.
inline std::vector<FrontRay> monitor_rays(const Grid& g, Point lo, Point hi) {
  auto nearest = [&](double v, double origin) {
    return std::clamp(static_cast<int>(std::lround((v - origin) / g.h)), 0, g.n - 1);
  };
  const int ci = nearest(0.5 * (lo[0] + hi[0]), g.origin[0]);
  std::vector<FrontRay> rays;
  if (g.dim == 1) {
    rays.push_back({"left", ci, 0, -1, 0, lo[0]});
    rays.push_back({"right", ci, 0, 1, 0, hi[0]});
    return rays;
  }
  const int cj = nearest(0.5 * (lo[1] + hi[1]), g.origin[1]);
  rays.push_back({"left", ci, cj, -1, 0, lo[0]});
  rays.push_back({"right", ci, cj, 1, 0, hi[0]});
  rays.push_back({"bottom", ci, cj, 0, -1, lo[1]});
  rays.push_back({"top", ci, cj, 0, 1, hi[1]});
  return rays;
}

inline std::vector<FrontRay> monitor_rays(const Scenario& s) {
  return monitor_rays(s.grid(), s.sample_lo, s.sample_hi);
}

/// Sub-grid front position along each ray; absent when the ray has no crossing.
inline std::vector<std::optional<double>> front_positions(const Grid& g,
                                                          std::span<const double> n_field,
                                                          double n_max,
                                                          const std::vector<FrontRay>& rays) {
  std::vector<std::optional<double>> out;
  out.reserve(rays.size());
  for (const auto& r : rays)
    out.push_back(axis_crossing(g, n_field, n_max, r.start_i, r.start_j, r.di, r.dj));
  return out;
}

/// Eroded depth: distance the front has moved inwards from the initial face.
inline double eroded_depth(const FrontRay& r, double position) {
  return (r.di + r.dj) < 0 ? position - r.edge : r.edge - position;
}

struct FrontSample {
  double t = 0.0;  ///< [s]
  std::vector<std::optional<double>> position;  ///< [cm], parallel to FrontLog::rays
};

struct FrontLog {
  std::vector<FrontRay> rays;
  std::vector<FrontSample> samples;

  void record(double t, std::vector<std::optional<double>> position) {
    samples.push_back({t, std::move(position)});
  }

  std::size_t side(const std::string& name) const {
    for (std::size_t k = 0; k < rays.size(); ++k)
      if (rays[k].name == name) return k;
    throw std::out_of_range("no front ray named '" + name + "'");
  }

  /// Eroded depth on a side at sample index s, if the front exists there.
  std::optional<double> erosion(std::size_t side, std::size_t s) const {
    const auto& p = samples.at(s).position.at(side);
    if (!p) return std::nullopt;
    return eroded_depth(rays.at(side), *p);
  }

  /// Eroded depth at the last sample taken at or before t.
  std::optional<double> erosion_at(std::size_t side, double t) const {
    std::optional<double> out;
    for (std::size_t s = 0; s < samples.size() && samples[s].t <= t + 1e-9; ++s)
      out = erosion(side, s);
    return out;
  }

  /// True if no front ever moves outwards (erosion never reverses).
  bool monotone(double tol = 0.0) const {
    for (std::size_t k = 0; k < rays.size(); ++k) {
      std::optional<double> prev;
      for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto e = erosion(k, s);
        if (!e) continue;
        if (prev && *e < *prev - tol) return false;
        prev = e;
      }
    }
    return true;
  }
};

enum class SlopeMethod {
  least_squares,  ///< regression of eroded depth on time over the window
  mean_rate,      ///< eroded depth at the end of the window divided by its time
};

/// Erosion rate in cm/h on one side over [t0, t1] (seconds).
inline double erosion_slope(const FrontLog& log, std::size_t side, double t0, double t1,
                            SlopeMethod method = SlopeMethod::least_squares) {
  std::vector<double> ts, es;
  for (std::size_t s = 0; s < log.samples.size(); ++s) {
    const double t = log.samples[s].t;
    if (t < t0 - 1e-9 || t > t1 + 1e-9) continue;
    const auto e = log.erosion(side, s);
    if (!e) continue;
    ts.push_back(t / 3600.0);
    es.push_back(*e);
  }
  if (ts.size() < 2) throw DomainError("erosion slope needs at least two samples in the window");
  if (method == SlopeMethod::mean_rate) {
    if (!(ts.back() > 0.0)) throw DomainError("mean erosion rate needs a window ending after t = 0");
    return es.back() / ts.back();
  }
  const double n = static_cast<double>(ts.size());
  double mt = 0.0, me = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k];
    me += es[k];
  }
  mt /= n;
  me /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    sxy += (ts[k] - mt) * (es[k] - me);
    sxx += (ts[k] - mt) * (ts[k] - mt);
  }
  if (sxx == 0.0) throw DomainError("erosion slope window has no time spread");
  return sxy / sxx;
}

/// Earliest sample time after which the eroded depth on every side changes by
/// less than rate_tol cm/h between consecutive samples; absent if never.
inline std::optional<double> steady_front_time(const FrontLog& log, double rate_tol) {
  std::optional<double> since;
  for (std::size_t s = 1; s < log.samples.size(); ++s) {
    const double dt_h = (log.samples[s].t - log.samples[s - 1].t) / 3600.0;
    bool calm = dt_h > 0.0;
    for (std::size_t k = 0; k < log.rays.size() && calm; ++k) {
      const auto a = log.erosion(k, s - 1), b = log.erosion(k, s);
      if (!a || !b || std::abs(*b - *a) / dt_h > rate_tol) calm = false;
    }
    if (calm) {
      if (!since) since = log.samples[s - 1].t;
    } else {
      since.reset();
    }
  }
  return since;
}

/// True once every internal node has changed by less than tol between two
/// states (max norm, relative to the given scale).
inline bool fields_steady(const SimulationState& a, const SimulationState& b,
                          std::span<const int> nodes, double theta_scale, double c_scale,
                          double tol) {
  for (int k : nodes) {
    if (std::abs(a.theta[k] - b.theta[k]) > tol * theta_scale) return false;
    if (std::abs(a.c_a[k] - b.c_a[k]) > tol * c_scale) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Error norms

/// True if `fine` halves the spacing of `coarse` over the same box.
inline bool nested(const Grid& coarse, const Grid& fine) {
  return coarse.dim == fine.dim && fine.n - 1 == 2 * (coarse.n - 1) &&
         std::abs(2.0 * fine.h - coarse.h) <= 1e-12 * coarse.h &&
         std::abs(fine.origin[0] - coarse.origin[0]) <= 1e-12 * coarse.h &&
         std::abs(fine.origin[1] - coarse.origin[1]) <= 1e-12 * coarse.h;
}

/// sqrt(h^dim * sum (u_coarse - u_fine)^2) over coarse nodes selected by
/// `use` (all coarse nodes when empty).
inline double discrete_error(const Grid& coarse, std::span<const double> u_coarse, const Grid& fine,
                             std::span<const double> u_fine, std::span<const char> use = {}) {
  if (!nested(coarse, fine)) throw DomainError("grids are not nested by a factor of 2");
  double acc = 0.0;
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    if (!use.empty() && !use[k]) continue;
    const int i = coarse.i_of(static_cast<int>(k)), j = coarse.j_of(static_cast<int>(k));
    const double d = u_coarse[k] - u_fine[fine.index(2 * i, 2 * j)];
    acc += d * d;
  }
  return std::sqrt(coarse.cell_measure() * acc);
}

/// sqrt(h^dim * sum (u - exact)^2) over the selected nodes.
inline double discrete_error(const Grid& g, std::span<const double> u,
                             const std::function<double(Point)>& exact,
                             std::span<const int> nodes) {
  double acc = 0.0;
  for (int k : nodes) {
    const double d = u[k] - exact(g.coord(k));
    acc += d * d;
  }
  return std::sqrt(g.cell_measure() * acc);
}

struct ConvergenceRow {
  int N = 0;
  double dx = 0.0;
  double dt = 0.0;
  std::optional<double> err_theta;
  std::optional<double> order_theta;
  std::optional<double> err_c;
  std::optional<double> order_c;
};

/// Observed order between successive errors; absent when either is zero or
/// missing.
inline std::optional<double> observed_order(std::optional<double> coarse,
                                            std::optional<double> fine) {
  if (!coarse || !fine || !(*coarse > 0.0) || !(*fine > 0.0)) return std::nullopt;
  return std::log2(*coarse / *fine);
}

/// Fills the order columns from the error columns, row by row.
inline void fill_orders(std::vector<ConvergenceRow>& rows) {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k == 0) {
      rows[k].order_theta.reset();
      rows[k].order_c.reset();
      continue;
    }
    rows[k].order_theta = observed_order(rows[k - 1].err_theta, rows[k].err_theta);
    rows[k].order_c = observed_order(rows[k - 1].err_c, rows[k].err_c);
  }
}

}  // namespace erosim

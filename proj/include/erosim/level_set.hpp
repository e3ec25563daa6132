#pragma once

/// \file level_set.hpp
/// Level-set classification of grid nodes and ghost-point boundary geometry.
///
/// The level set is phi = n - n_max, negative inside the stone. Nodes are
/// split into internal (phi < 0), ghost (phi >= 0 with an internal axis
/// neighbour) and outside. Each ghost is projected along the level-set normal
/// onto phi = 0, and boundary conditions are imposed there through quadratic
/// Lagrange interpolation over a 3x3 box (3 points in 1D) that has the ghost
/// in its first slot and extends towards the interior:
///
///     slot:      0        1        2
///     node:      G     G+σh     G+2σh
///     x_B = x_G + σ(1-ξ)h,  ξ = 1 - |x_B - x_G| / h  (per axis)

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "erosim/errors.hpp"
#include "erosim/grid.hpp"

namespace erosim {

struct StencilNode {
  int node = -1;
  NodeKind kind = NodeKind::internal;
};

struct GhostGeometry {
  int ghost = -1;
  Point boundary{0.0, 0.0};  ///< x_B on phi = 0
  Point normal{0.0, 0.0};    ///< outward unit normal at the ghost
  std::array<double, 2> xi{1.0, 1.0};
  std::array<int, 2> sigma{1, 1};  ///< box direction per axis, from the ghost inwards
  /// Box nodes, slot a + 3b for (x slot a, y slot b); arbitrary order when
  /// least_squares is set.
  std::vector<StencilNode> stencil;
  bool least_squares = false;
  /// Internal stencil node nearest to x_B; supplies the boundary porosity.
  int nearest_internal = -1;
};

struct BoundaryWeights {
  std::vector<double> dirichlet;  ///< value at x_B
  std::vector<double> neumann;    ///< outward normal derivative at x_B
};

struct GridClassification {
  std::vector<NodeKind> kind;
  std::vector<int> internal;
  std::vector<int> ghost;
  std::vector<GhostGeometry> geometry;  ///< parallel to ghost
  std::vector<int> ghost_slot;          ///< node -> index into ghost, or -1

  bool fully_eroded() const noexcept { return internal.empty(); }
  bool is_internal(int k) const noexcept { return kind[k] == NodeKind::internal; }
  bool is_active(int k) const noexcept { return kind[k] != NodeKind::outside; }
  std::size_t outside_count() const noexcept {
    return kind.size() - internal.size() - ghost.size();
  }
};

/// phi = n - n_max per node.
inline std::vector<double> level_set(std::span<const double> n_field, double n_max) {
  std::vector<double> phi(n_field.size());
  for (std::size_t k = 0; k < n_field.size(); ++k) phi[k] = n_field[k] - n_max;
  return phi;
}

// ---------------------------------------------------------------------------
// Interpolation weights

/// Quadratic Lagrange weights at offset -ξh from the centre of three nodes.
inline std::array<double, 3> dirichlet_weights(double xi) noexcept {
  return {xi * (xi + 1.0) / 2.0, 1.0 - xi * xi, xi * (xi - 1.0) / 2.0};
}

/// Derivative of the same interpolant, along increasing slot order.
inline std::array<double, 3> neumann_weights(double xi, double h) noexcept {
  return {(-0.5 - xi) / h, 2.0 * xi / h, (0.5 - xi) / h};
}

namespace detail {

inline double interpolate_phi(const Grid& g, std::span<const double> phi, Point p) {
  auto locate = [&](double coord, double origin, int& cell, double& t) {
    double u = (coord - origin) / g.h;
    cell = std::clamp(static_cast<int>(std::floor(u)), 0, g.n - 2);
    t = std::clamp(u - cell, 0.0, 1.0);
  };
  int i = 0;
  double tx = 0.0;
  locate(p[0], g.origin[0], i, tx);
  if (g.dim == 1) return (1.0 - tx) * phi[i] + tx * phi[i + 1];
  int j = 0;
  double ty = 0.0;
  locate(p[1], g.origin[1], j, ty);
  const double f00 = phi[g.index(i, j)];
  const double f10 = phi[g.index(i + 1, j)];
  const double f01 = phi[g.index(i, j + 1)];
  const double f11 = phi[g.index(i + 1, j + 1)];
  return (1.0 - ty) * ((1.0 - tx) * f00 + tx * f10) + ty * ((1.0 - tx) * f01 + tx * f11);
}

inline double axis_derivative(const Grid& g, std::span<const double> phi, int i, int j, int axis) {
  auto at = [&](int ii, int jj) { return phi[g.index(ii, jj)]; };
  const int ip = axis == 0 ? i + 1 : i, jp = axis == 1 ? j + 1 : j;
  const int im = axis == 0 ? i - 1 : i, jm = axis == 1 ? j - 1 : j;
  const bool has_p = g.contains(ip, jp);
  const bool has_m = g.contains(im, jm);
  if (has_p && has_m) return (at(ip, jp) - at(im, jm)) / (2.0 * g.h);
  if (has_p) return (at(ip, jp) - at(i, j)) / g.h;
  return (at(i, j) - at(im, jm)) / g.h;
}

inline bool admissible(const Grid& g, std::span<const NodeKind> kinds, int i, int j) {
  return g.contains(i, j) && kinds[g.index(i, j)] != NodeKind::outside;
}

inline bool box_admissible(const Grid& g, std::span<const NodeKind> kinds, int gi, int gj,
                           std::array<int, 2> sigma) {
  const int ny = g.dim == 1 ? 1 : 3;
  for (int b = 0; b < ny; ++b)
    for (int a = 0; a < 3; ++a)
      if (!admissible(g, kinds, gi + a * sigma[0], gj + b * sigma[1])) return false;
  return true;
}

}  // namespace detail

/// Projects a ghost node onto phi = 0 along the level-set normal and picks
/// its interpolation stencil.
/// A given normal_override replaces the central-difference gradient;
/// phi_max (max |phi|, sets the projection tolerance) is computed if negative.
inline GhostGeometry project_ghost(const Grid& g, std::span<const double> phi,
                                   std::span<const NodeKind> kinds, int ghost,
                                   std::optional<Point> normal_override = std::nullopt,
                                   double phi_max = -1.0) {
  GhostGeometry geo;
  geo.ghost = ghost;
  const int gi = g.i_of(ghost), gj = g.j_of(ghost);
  const Point xg = g.coord(ghost);

  const Point grad =
      normal_override ? *normal_override
                      : Point{detail::axis_derivative(g, phi, gi, gj, 0),
                              g.dim == 2 ? detail::axis_derivative(g, phi, gi, gj, 1) : 0.0};
  const double norm = std::hypot(grad[0], grad[1]);
  if (norm < 1e-14)
    throw GeometryError(GeometryError::Kind::degenerate_normal,
                        "level-set gradient vanishes at ghost node " + std::to_string(ghost));
  geo.normal = {grad[0] / norm, grad[1] / norm};

  if (phi_max < 0.0) {
    phi_max = 0.0;
    for (double v : phi) phi_max = std::max(phi_max, std::abs(v));
  }
  const double tol = 1e-10 * phi_max;

  const Point dir{-geo.normal[0], -geo.normal[1]};
  auto along = [&](double s) { return Point{xg[0] + s * dir[0], xg[1] + s * dir[1]}; };
  auto phi_at = [&](double s) { return detail::interpolate_phi(g, phi, along(s)); };

  double s_hit = 0.0;
  if (phi_at(0.0) > tol) {
    const double step = g.h / 8.0;
    double lo = 0.0, hi = -1.0;
    for (int k = 1; k <= 16; ++k) {
      if (phi_at(k * step) <= 0.0) {
        lo = (k - 1) * step;
        hi = k * step;
        break;
      }
    }
    if (hi < 0.0)
      throw GeometryError(GeometryError::Kind::projection_failure,
                          "no zero of the level set within 2h of ghost node " +
                              std::to_string(ghost));
    // Bisect to round-off, then finish with a secant step inside the bracket.
    double f_lo = phi_at(lo), f_hi = phi_at(hi);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * g.h; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f = phi_at(mid);
      if (f > 0.0) {
        lo = mid;
        f_lo = f;
      } else {
        hi = mid;
        f_hi = f;
      }
    }
    s_hit = f_lo == f_hi ? hi : lo + f_lo * (hi - lo) / (f_lo - f_hi);
    if (std::abs(phi_at(s_hit)) > tol) s_hit = hi;
  }
  geo.boundary = along(s_hit);
  if (g.dim == 1) geo.boundary[1] = 0.0;

  std::array<bool, 2> ambiguous{false, false};
  for (int axis = 0; axis < g.dim; ++axis) {
    const double d = geo.boundary[axis] - xg[axis];
    if (std::abs(d) < 1e-12 * g.h) {
      geo.xi[axis] = 1.0;
      ambiguous[axis] = true;
      geo.sigma[axis] = 1;
    } else {
      geo.xi[axis] = std::clamp(1.0 - std::abs(d) / g.h, 0.0, 1.0);
      geo.sigma[axis] = d > 0.0 ? 1 : -1;
    }
  }
  if (g.dim == 1) {
    geo.xi[1] = 1.0;
    geo.sigma[1] = 1;
    if (ambiguous[0]) {
      // Coincident projection: extend towards the internal neighbour.
      geo.sigma[0] = detail::admissible(g, kinds, gi + 1, 0) &&
                             kinds[g.index(gi + 1)] == NodeKind::internal
                         ? 1
                         : -1;
    }
  }

  // Fix ambiguous directions so that the box is admissible, preferring +1.
  bool found = false;
  {
    std::array<std::vector<int>, 2> options;
    for (int axis = 0; axis < 2; ++axis) {
      if (axis < g.dim && ambiguous[axis] && g.dim == 2)
        options[axis] = {1, -1};
      else
        options[axis] = {geo.sigma[axis]};
    }
    for (int sx : options[0]) {
      for (int sy : options[1]) {
        if (detail::box_admissible(g, kinds, gi, gj, {sx, sy})) {
          geo.sigma = {sx, sy};
          found = true;
          break;
        }
      }
      if (found) break;
    }
  }

  if (found) {
    const int ny = g.dim == 1 ? 1 : 3;
    for (int b = 0; b < ny; ++b)
      for (int a = 0; a < 3; ++a) {
        const int k = g.index(gi + a * geo.sigma[0], gj + b * geo.sigma[1]);
        geo.stencil.push_back({k, kinds[k]});
      }
  } else {
    // Nearest admissible nodes in the (2r+1)^dim neighbourhood, least-squares fit.
    geo.least_squares = true;
    struct Candidate {
      double d2;
      int node;
    };
    std::vector<Candidate> cands;
    const int r = 2;
    for (int dj = (g.dim == 1 ? 0 : -r); dj <= (g.dim == 1 ? 0 : r); ++dj)
      for (int di = -r; di <= r; ++di) {
        if (!detail::admissible(g, kinds, gi + di, gj + dj)) continue;
        const int k = g.index(gi + di, gj + dj);
        const Point p = g.coord(k);
        const double dx = p[0] - geo.boundary[0], dy = p[1] - geo.boundary[1];
        cands.push_back({dx * dx + dy * dy, k});
      }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return a.d2 != b.d2 ? a.d2 < b.d2 : a.node < b.node;
    });
    const std::size_t want = g.dim == 1 ? 3 : 9;
    const std::size_t need = g.dim == 1 ? 3 : 6;
    if (cands.size() < need)
      throw GeometryError(GeometryError::Kind::stencil_unavailable,
                          "cannot build an interpolation stencil for ghost node " +
                              std::to_string(ghost));
    for (std::size_t q = 0; q < std::min(want, cands.size()); ++q)
      geo.stencil.push_back({cands[q].node, kinds[cands[q].node]});
  }

  double best = 0.0;
  for (const auto& s : geo.stencil) {
    if (s.kind != NodeKind::internal) continue;
    const Point p = g.coord(s.node);
    const double d = std::hypot(p[0] - geo.boundary[0], p[1] - geo.boundary[1]);
    if (geo.nearest_internal < 0 || d < best) {
      best = d;
      geo.nearest_internal = s.node;
    }
  }
  if (geo.nearest_internal < 0) {
    for (int axis = 0; axis < g.dim && geo.nearest_internal < 0; ++axis)
      for (int sgn : {1, -1}) {
        const int ii = gi + (axis == 0 ? sgn : 0), jj = gj + (axis == 1 ? sgn : 0);
        if (g.contains(ii, jj) && kinds[g.index(ii, jj)] == NodeKind::internal) {
          geo.nearest_internal = g.index(ii, jj);
          break;
        }
      }
  }
  return geo;
}

/// Boundary interpolation weights for a ghost: value at x_B (Dirichlet) and
/// outward normal derivative at x_B (Neumann), aligned with geo.stencil.
inline BoundaryWeights tensor_weights(const Grid& g, const GhostGeometry& geo) {
  BoundaryWeights w;
  const std::size_t m = geo.stencil.size();
  w.dirichlet.assign(m, 0.0);
  w.neumann.assign(m, 0.0);
  if (!geo.least_squares) {
    const auto ax = dirichlet_weights(geo.xi[0]);
    const auto ox = neumann_weights(geo.xi[0], g.h);
    if (g.dim == 1) {
      if (m != 3)
        throw GeometryError(GeometryError::Kind::stencil_unavailable, "1D stencil needs 3 nodes");
      for (int a = 0; a < 3; ++a) {
        w.dirichlet[a] = ax[a];
        w.neumann[a] = geo.normal[0] * geo.sigma[0] * ox[a];
      }
      return w;
    }
    if (m != 9)
      throw GeometryError(GeometryError::Kind::stencil_unavailable, "2D stencil needs 9 nodes");
    const auto ay = dirichlet_weights(geo.xi[1]);
    const auto oy = neumann_weights(geo.xi[1], g.h);
    for (int b = 0; b < 3; ++b)
      for (int a = 0; a < 3; ++a) {
        w.dirichlet[a + 3 * b] = ax[a] * ay[b];
        w.neumann[a + 3 * b] = geo.normal[0] * geo.sigma[0] * ox[a] * ay[b] +
                               geo.normal[1] * geo.sigma[1] * ax[a] * oy[b];
      }
    return w;
  }

  // Least-squares quadratic fit in coordinates centred at x_B, scaled by h.
  const int nb = g.dim == 1 ? 3 : 6;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(m), nb);
  for (std::size_t q = 0; q < m; ++q) {
    const Point p = g.coord(geo.stencil[q].node);
    const double X = (p[0] - geo.boundary[0]) / g.h;
    const double Y = (p[1] - geo.boundary[1]) / g.h;
    const auto r = static_cast<Eigen::Index>(q);
    if (g.dim == 1) {
      A.row(r) << 1.0, X, X * X;
    } else {
      A.row(r) << 1.0, X, Y, X * X, X * Y, Y * Y;
    }
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  if (cod.rank() < nb)
    throw GeometryError(GeometryError::Kind::stencil_unavailable,
                        "least-squares stencil is rank deficient for ghost node " +
                            std::to_string(geo.ghost));
  const Eigen::MatrixXd pinv = cod.pseudoInverse();  // nb x m
  for (std::size_t q = 0; q < m; ++q) {
    const auto c = static_cast<Eigen::Index>(q);
    w.dirichlet[q] = pinv(0, c);
    w.neumann[q] = geo.normal[0] * pinv(1, c) / g.h;
    if (g.dim == 2) w.neumann[q] += geo.normal[1] * pinv(2, c) / g.h;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Classification

/// Internal/ghost/outside sets only, without boundary geometry.
inline GridClassification classify_nodes(const Grid& g, std::span<const double> n_field,
                                         double n_max) {
  GridClassification c;
  const std::size_t total = g.size();
  c.kind.assign(total, NodeKind::outside);
  c.ghost_slot.assign(total, -1);
  for (std::size_t k = 0; k < total; ++k)
    if (n_field[k] - n_max < 0.0) c.kind[k] = NodeKind::internal;
  for (std::size_t kk = 0; kk < total; ++kk) {
    const int k = static_cast<int>(kk);
    if (c.kind[k] == NodeKind::internal) {
      c.internal.push_back(k);
      continue;
    }
    const int i = g.i_of(k), j = g.j_of(k);
    bool near_internal = false;
    for (int axis = 0; axis < g.dim && !near_internal; ++axis)
      for (int sgn : {-1, 1}) {
        const int ii = i + (axis == 0 ? sgn : 0), jj = j + (axis == 1 ? sgn : 0);
        if (g.contains(ii, jj) && n_field[g.index(ii, jj)] - n_max < 0.0) {
          near_internal = true;
          break;
        }
      }
    if (near_internal) {
      c.kind[k] = NodeKind::ghost;
      c.ghost_slot[k] = static_cast<int>(c.ghost.size());
      c.ghost.push_back(k);
    }
  }
  return c;
}

/// Recomputes the boundary geometry of every ghost from the current porosity.
/// A ghost whose normal degenerates or whose normal ray misses the front is
/// projected along the axis towards its internal neighbours instead.
inline void update_geometry(const Grid& g, std::span<const double> n_field, double n_max,
                            GridClassification& c) {
  const auto phi = level_set(n_field, n_max);
  double phi_max = 0.0;
  for (double v : phi) phi_max = std::max(phi_max, std::abs(v));
  c.geometry.clear();
  c.geometry.reserve(c.ghost.size());
  for (int ghost : c.ghost) {
    try {
      c.geometry.push_back(project_ghost(g, phi, c.kind, ghost, std::nullopt, phi_max));
    } catch (const GeometryError& e) {
      if (e.kind() == GeometryError::Kind::stencil_unavailable) throw;
      // Fall back to the direction away from the internal axis neighbours.
      const int i = g.i_of(ghost), j = g.j_of(ghost);
      Point outward{0.0, 0.0};
      int first_axis = -1, first_sgn = 0;
      for (int axis = 0; axis < g.dim; ++axis)
        for (int sgn : {-1, 1}) {
          const int ii = i + (axis == 0 ? sgn : 0), jj = j + (axis == 1 ? sgn : 0);
          if (g.contains(ii, jj) && c.kind[g.index(ii, jj)] == NodeKind::internal) {
            outward[axis] -= sgn;
            if (first_axis < 0) {
              first_axis = axis;
              first_sgn = sgn;
            }
          }
        }
      if (outward[0] == 0.0 && outward[1] == 0.0 && first_axis >= 0)
        outward[first_axis] = -first_sgn;
      c.geometry.push_back(project_ghost(g, phi, c.kind, ghost, outward, phi_max));
    }
  }
}

/// Full classification: node sets plus boundary geometry for each ghost.
inline GridClassification classify(const Grid& g, std::span<const double> n_field, double n_max) {
  auto c = classify_nodes(g, n_field, n_max);
  update_geometry(g, n_field, n_max, c);
  return c;
}

/// Sub-grid zero crossing of phi along an axis ray that starts at an internal
/// node and walks in direction (di, dj) until the first non-internal node.
inline std::optional<double> axis_crossing(const Grid& g, std::span<const double> n_field,
                                           double n_max, int start_i, int start_j, int di,
                                           int dj) {
  int i = start_i, j = start_j;
  if (!g.contains(i, j) || n_field[g.index(i, j)] - n_max >= 0.0) return std::nullopt;
  while (true) {
    const int ni = i + di, nj = j + dj;
    if (!g.contains(ni, nj)) return std::nullopt;
    const double phi_in = n_field[g.index(i, j)] - n_max;
    const double phi_out = n_field[g.index(ni, nj)] - n_max;
    if (phi_out >= 0.0) {
      const double t = phi_in / (phi_in - phi_out);
      const int axis = di != 0 ? 0 : 1;
      const double from = axis == 0 ? g.x(i) : g.y(j);
      const double step = (axis == 0 ? di : dj) * g.h;
      return from + t * step;
    }
    i = ni;
    j = nj;
  }
}

}  // namespace erosim

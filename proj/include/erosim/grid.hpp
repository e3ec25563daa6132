#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "erosim/errors.hpp"

namespace erosim {

using Point = std::array<double, 2>;

/// Uniform Cartesian grid with equal spacing on every axis.
/// Nodes are stored row-major with x fastest: k = i + j * n.
struct Grid {
  int dim = 1;
  int n = 0;        ///< points per axis
  double h = 0.0;   ///< spacing [cm]
  Point origin{0.0, 0.0};

  Grid() = default;
  Grid(int dim_, int n_, double h_, Point origin_ = {0.0, 0.0})
      : dim(dim_), n(n_), h(h_), origin(origin_) {
    if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
    if (n < 3) throw ConfigError("grid needs at least 3 points per axis");
    if (!(h > 0.0)) throw ConfigError("grid spacing must be positive");
  }

  /// Grid covering [lo, hi]^dim with the given number of intervals per axis.
  static Grid covering(int dim, double lo, double hi, int intervals) {
    return Grid(dim, intervals + 1, (hi - lo) / intervals, {lo, lo});
  }

  std::size_t size() const noexcept {
    return dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
  }
  int index(int i, int j = 0) const noexcept { return i + j * n; }
  int i_of(int k) const noexcept { return k % n; }
  int j_of(int k) const noexcept { return dim == 1 ? 0 : k / n; }
  bool contains(int i, int j = 0) const noexcept {
    return i >= 0 && i < n && (dim == 1 ? j == 0 : (j >= 0 && j < n));
  }
  double x(int i) const noexcept { return origin[0] + i * h; }
  double y(int j) const noexcept { return origin[1] + j * h; }
  Point coord(int k) const noexcept { return {x(i_of(k)), dim == 1 ? 0.0 : y(j_of(k))}; }
  double cell_measure() const noexcept { return dim == 1 ? h : h * h; }
};

enum class NodeKind : unsigned char { internal, ghost, outside };

}  // namespace erosim

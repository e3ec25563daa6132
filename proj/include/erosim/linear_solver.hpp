#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace erosim {

struct Entry {
  int row;
  int col;
  double value;
};

/// Direct solver for the per-step linear systems. Narrow-band matrices (1D
/// problems) use a banded LU with partial pivoting; everything else a sparse
/// LU whose symbolic analysis is reused while the pattern is stable.
class LinearSolver {
 public:
  /// Returns false if the matrix is singular.
  bool factorize(int n, std::span<const Entry> entries) {
    n_ = n;
    int kl = 0, ku = 0;
    for (const auto& e : entries) {
      kl = std::max(kl, e.row - e.col);
      ku = std::max(ku, e.col - e.row);
    }
    if (kl <= kMaxBand && ku <= kMaxBand) return factorize_banded(entries, kl, ku);
    return factorize_sparse(entries);
  }

  /// Solves in place with the last factorisation.
  void solve(std::span<double> rhs) const {
    if (banded_) {
      solve_banded(rhs);
      return;
    }
    Eigen::Map<Eigen::VectorXd> b(rhs.data(), n_);
    Eigen::VectorXd x = lu_.solve(b);
    b = x;
  }

  bool ready() const noexcept { return ready_; }
  void reset() noexcept {
    ready_ = false;
    pattern_nnz_ = -1;
  }

 private:
  static constexpr int kMaxBand = 8;

  // Row-wise band storage: a(r, c) at band_[r * w_ + (c - r + kl_)], with
  // w_ = 2 kl + ku + 1 columns so that pivoting fill fits in the upper band.
  double& at(int r, int c) { return band_[static_cast<std::size_t>(r) * w_ + (c - r + kl_)]; }
  double at(int r, int c) const {
    return band_[static_cast<std::size_t>(r) * w_ + (c - r + kl_)];
  }

  bool factorize_banded(std::span<const Entry> entries, int kl, int ku) {
    banded_ = true;
    kl_ = kl;
    uw_ = kl + ku;  // upper bandwidth after pivoting
    w_ = kl_ + uw_ + 1;
    band_.assign(static_cast<std::size_t>(w_) * n_, 0.0);
    for (const auto& e : entries) at(e.row, e.col) += e.value;
    pivots_.assign(n_, 0);
    ready_ = false;
    for (int k = 0; k < n_; ++k) {
      const int last = std::min(n_ - 1, k + kl_);
      int p = k;
      double best = std::abs(at(k, k));
      for (int r = k + 1; r <= last; ++r)
        if (std::abs(at(r, k)) > best) {
          best = std::abs(at(r, k));
          p = r;
        }
      if (best == 0.0) return false;
      pivots_[k] = p;
      const int cmax = std::min(n_ - 1, k + uw_);
      if (p != k)
        for (int c = k; c <= cmax; ++c) std::swap(at(k, c), at(p, c));
      const double inv = 1.0 / at(k, k);
      for (int r = k + 1; r <= last; ++r) {
        const double l = at(r, k) * inv;
        at(r, k) = l;
        if (l == 0.0) continue;
        for (int c = k + 1; c <= cmax; ++c) at(r, c) -= l * at(k, c);
      }
    }
    ready_ = true;
    return true;
  }

  void solve_banded(std::span<double> b) const {
    for (int k = 0; k < n_; ++k) {
      const int p = pivots_[k];
      if (p != k) std::swap(b[k], b[p]);
      const int last = std::min(n_ - 1, k + kl_);
      for (int r = k + 1; r <= last; ++r) b[r] -= at(r, k) * b[k];
    }
    for (int k = n_ - 1; k >= 0; --k) {
      const int cmax = std::min(n_ - 1, k + uw_);
      double acc = b[k];
      for (int c = k + 1; c <= cmax; ++c) acc -= at(k, c) * b[c];
      b[k] = acc / at(k, k);
    }
  }

  bool factorize_sparse(std::span<const Entry> entries) {
    banded_ = false;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(entries.size());
    for (const auto& e : entries) trip.emplace_back(e.row, e.col, e.value);
    Eigen::SparseMatrix<double> a(n_, n_);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    if (pattern_nnz_ != a.nonZeros() || pattern_rows_ != n_) {
      lu_.analyzePattern(a);
      pattern_nnz_ = a.nonZeros();
      pattern_rows_ = n_;
    }
    lu_.factorize(a);
    ready_ = lu_.info() == Eigen::Success;
    return ready_;
  }

  int n_ = 0;
  bool ready_ = false;
  bool banded_ = true;
  int kl_ = 0, uw_ = 0, w_ = 1;
  std::vector<double> band_;
  std::vector<int> pivots_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::Index pattern_nnz_ = -1;
  int pattern_rows_ = -1;
};

}  // namespace erosim

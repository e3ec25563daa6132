#pragma once

/// \file solver.hpp
/// Implicit-Euler stepping of the moisture / carbonic-acid / porosity system
/// on a level-set ghost-point grid.
///
/// Each step solves the porosity relation per node, the moisture equation by
/// a chord-Newton iteration and the (linear) acid equation by defect
/// correction, sweeping the three fields until the joint scaled residual
/// drops below tolerance. Ghost rows carry the Robin conditions, interpolated
/// at the projection of each ghost onto the front.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "erosim/absorption.hpp"
#include "erosim/errors.hpp"
#include "erosim/grid.hpp"
#include "erosim/level_set.hpp"
#include "erosim/linear_solver.hpp"
#include "erosim/physics.hpp"

namespace erosim {

struct SolverOptions {
  double tolerance = 1e-10;  ///< joint scaled max-norm residual
  int max_outer = 50;
  int max_newton = 50;
  /// A kept factorisation is renewed when one iteration reduces the residual
  /// by less than this factor. Negative: 0 (always renew) in 1D, where
  /// factorising costs about as much as a solve, and 0.1 in 2D.
  double refactor_ratio = -1.0;
  double jacobian_regularization = 1e-14;
  /// Porosity drift that triggers recomputation of the ghost geometry.
  double geometry_refresh = 1e-8;
  int max_halvings = 10;
  int restore_after = 100;
};

/// Optional extra terms, mainly for manufactured-solution tests.
struct Forcing {
  std::function<double(Point, double)> theta_source;  ///< added to d(theta)/dt
  std::function<double(Point, double)> acid_source;   ///< added to d(theta c)/dt
  std::function<double(Point, double)> ambient_E;     ///< replaces Ambient when set
  std::function<double(Point, double)> ambient_C;
  bool freeze_porosity = false;
};

struct StepReport {
  int outer_iterations = 0;
  int newton_iterations = 0;
  int factorizations = 0;
  double residual = 0.0;
  std::vector<int> converted;  ///< nodes that left the internal set
  double wall_seconds = 0.0;
  double dt = 0.0;             ///< total time advanced
  int substeps = 0;
  int halvings = 0;
};

/// Face-averaged discretisation of div(r grad w) at an internal node.
inline double div_form(const Grid& g, std::span<const NodeKind> kinds, std::span<const double> r,
                       std::span<const double> w, int node) {
  if (kinds[node] != NodeKind::internal)
    throw AssemblyError("div_form evaluated at a non-internal node " + std::to_string(node));
  const int i = g.i_of(node), j = g.j_of(node);
  const double inv = 1.0 / (2.0 * g.h * g.h);
  double acc = 0.0;
  for (int axis = 0; axis < g.dim; ++axis) {
    for (int sgn : {-1, 1}) {
      const int ii = i + (axis == 0 ? sgn : 0), jj = j + (axis == 1 ? sgn : 0);
      if (!g.contains(ii, jj))
        throw AssemblyError("stencil of node " + std::to_string(node) + " leaves the grid");
      const int q = g.index(ii, jj);
      if (kinds[q] == NodeKind::outside)
        throw AssemblyError("stencil of node " + std::to_string(node) + " touches an outside node");
      acc += (r[node] + r[q]) * (w[q] - w[node]) * inv;
    }
  }
  return acc;
}

/// Same with every node treated as internal; used on plain arrays in tests.
inline double div_form(const Grid& g, std::span<const double> r, std::span<const double> w,
                       int node) {
  std::vector<NodeKind> kinds(g.size(), NodeKind::internal);
  return div_form(g, kinds, r, w, node);
}

class Solver {
 public:
  Solver(Grid grid, ModelParams params, Ambient ambient, SimulationState initial,
         SolverOptions opts = {}, Forcing forcing = {})
      : grid_(grid),
        params_(std::move(params)),
        law_(params_.make_law()),
        ambient_(std::move(ambient)),
        opts_(opts),
        forcing_(std::move(forcing)),
        state_(std::move(initial)) {
    params_.validate();
    ambient_.validate();
    if (opts_.refactor_ratio < 0.0) opts_.refactor_ratio = grid_.dim == 1 ? 0.0 : 0.1;
    const std::size_t total = grid_.size();
    if (state_.theta.size() != total || state_.c_a.size() != total || state_.n.size() != total)
      throw ConfigError("initial state does not match the grid");
    theta_scale_ = std::max(ambient_.E, params_.s_S() * params_.n_tilde);
    c_scale_ = ambient_.C > 0.0 ? ambient_.C : 1e-6;
    const double d = law_.d_max();
    const double ds = params_.s_S() - params_.s_R();
    ghost_theta_scale_ = (params_.K_w + d * ds / grid_.h) * theta_scale_;
    ghost_c_scale_ =
        (params_.K_a + d * ds / grid_.h + params_.D_c * theta_scale_ / grid_.h) * c_scale_;
    reclassify();
  }

  const Grid& grid() const noexcept { return grid_; }
  const ModelParams& params() const noexcept { return params_; }
  const Ambient& ambient() const noexcept { return ambient_; }
  const AbsorptionLaw& law() const noexcept { return law_; }
  const SimulationState& state() const noexcept { return state_; }
  const GridClassification& classification() const noexcept { return cls_; }
  const std::vector<BoundaryWeights>& boundary_weights() const noexcept { return weights_; }
  double current_dt() const noexcept { return current_dt_; }

  /// Rows per field: one per internal node plus one per ghost.
  std::size_t equation_count() const noexcept { return cls_.internal.size() + cls_.ghost.size(); }
  /// Unknowns per field: values at internal and ghost nodes.
  std::size_t unknown_count() const noexcept { return active_.size(); }

  /// Advances the state by dt, halving the internal step on nonlinear
  /// failure. Throws SolverError after too many halvings and FullyEroded when
  /// the internal set empties (the state is committed first).
  StepReport step(double dt) {
    if (!(dt > 0.0)) throw SolverError("step size must be positive");
    const auto t0 = std::chrono::steady_clock::now();
    StepReport rep;
    if (current_dt_ <= 0.0 || current_dt_ > dt || nominal_dt_ != dt) {
      current_dt_ = dt;
      nominal_dt_ = dt;
      successes_ = 0;
    }
    double remaining = dt;
    int halvings = 0;
    while (remaining > 1e-12 * dt) {
      const double h = std::min(current_dt_, remaining);
      if (attempt(h, rep)) {
        remaining -= h;
        ++rep.substeps;
        if (current_dt_ < nominal_dt_ && ++successes_ >= opts_.restore_after) {
          current_dt_ = std::min(2.0 * current_dt_, nominal_dt_);
          successes_ = 0;
        }
        auto conv = apply_front_motion();
        rep.converted.insert(rep.converted.end(), conv.begin(), conv.end());
        if (cls_.fully_eroded()) {
          rep.wall_seconds = seconds_since(t0);
          throw FullyEroded();
        }
      } else {
        if (++halvings > opts_.max_halvings)
          throw SolverError("nonlinear solve failed after " + std::to_string(opts_.max_halvings) +
                            " step halvings at t = " + std::to_string(state_.t));
        current_dt_ *= 0.5;
        successes_ = 0;
        ++rep.halvings;
        theta_lu_.reset();
        c_lu_.reset();
      }
    }
    rep.dt = dt;
    rep.wall_seconds = seconds_since(t0);
    return rep;
  }

  /// Moves internal nodes with n >= n_max to the outside and rebuilds the
  /// classification. Returns the converted nodes.
  std::vector<int> apply_front_motion() {
    std::vector<int> converted;
    if (forcing_.freeze_porosity) return converted;
    for (int k : cls_.internal)
      if (state_.n[k] >= params_.n_max) converted.push_back(k);
    if (converted.empty()) {
      maybe_refresh_geometry();
      return converted;
    }
    for (int k : converted) {
      state_.theta[k] = ambient_E(grid_.coord(k), state_.t);
      state_.c_a[k] = ambient_C(grid_.coord(k), state_.t);
      state_.n[k] = params_.outside_n();
    }
    reclassify();
    return converted;
  }

  /// Scaled residuals (theta, acid, porosity) of the implicit step from `old`
  /// to the current state with step dt.
  std::array<double, 3> residuals(const SimulationState& old, double dt) {
    old_ = old;
    dt_ = dt;
    t_new_ = state_.t;
    update_coefficients();
    const double rt = theta_residual(res_);
    const double rc = acid_residual(res_);
    const double rn = porosity_residual();
    return {rt, rc, rn};
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  double ambient_E(Point p, double t) const {
    return forcing_.ambient_E ? forcing_.ambient_E(p, t) : ambient_.E_at(t);
  }
  double ambient_C(Point p, double t) const {
    return forcing_.ambient_C ? forcing_.ambient_C(p, t) : ambient_.C_at(t);
  }

  // --------------------------------------------------------------------------
  // Topology and geometry

  void reclassify() {
    cls_ = classify_nodes(grid_, state_.n, params_.n_max);
    active_.clear();
    slot_.assign(grid_.size(), -1);
    for (std::size_t k = 0; k < grid_.size(); ++k)
      if (cls_.kind[k] != NodeKind::outside) {
        slot_[k] = static_cast<int>(active_.size());
        active_.push_back(static_cast<int>(k));
      }
    for (int k : cls_.internal) {
      const int i = grid_.i_of(k), j = grid_.j_of(k);
      for (int axis = 0; axis < grid_.dim; ++axis)
        for (int sgn : {-1, 1}) {
          const int ii = i + (axis == 0 ? sgn : 0), jj = j + (axis == 1 ? sgn : 0);
          if (!grid_.contains(ii, jj) || cls_.kind[grid_.index(ii, jj)] == NodeKind::outside)
            throw AssemblyError("internal node " + std::to_string(k) +
                                " has a stencil outside the active set");
        }
    }
    for (std::size_t k = 0; k < grid_.size(); ++k)
      if (cls_.kind[k] == NodeKind::outside) {
        state_.theta[k] = ambient_E(grid_.coord(static_cast<int>(k)), state_.t);
        state_.c_a[k] = ambient_C(grid_.coord(static_cast<int>(k)), state_.t);
        state_.n[k] = params_.outside_n();
      }
    theta_lu_.reset();
    c_lu_.reset();
    refresh_geometry();
  }

  void refresh_geometry() {
    if (cls_.fully_eroded()) {
      cls_.geometry.clear();
      weights_.clear();
      return;
    }
    update_geometry(grid_, state_.n, params_.n_max, cls_);
    weights_.clear();
    weights_.reserve(cls_.geometry.size());
    for (const auto& geo : cls_.geometry) weights_.push_back(tensor_weights(grid_, geo));
    n_ref_ = state_.n;
  }

  void maybe_refresh_geometry() {
    double drift = 0.0;
    for (int k : cls_.internal) drift = std::max(drift, std::abs(state_.n[k] - n_ref_[k]));
    if (drift > opts_.geometry_refresh) refresh_geometry();
  }

  // --------------------------------------------------------------------------
  // Coefficients

  /// Effective porosity, flux coefficient and B, dB/dtheta at active nodes.
  void update_coefficients(bool with_B = true) {
    const std::size_t total = grid_.size();
    neff_.resize(total);
    r_.resize(total);
    for (int k : cls_.internal) neff_[k] = state_.n[k];
    for (std::size_t g = 0; g < cls_.ghost.size(); ++g)
      neff_[cls_.ghost[g]] = state_.n[cls_.geometry[g].nearest_internal];
    const double inv = 1.0 / params_.n_tilde;
    for (int k : active_) r_[k] = neff_[k] * inv * neff_[k] * inv;
    if (with_B) update_B();
  }

  void update_B() {
    B_.resize(grid_.size());
    dB_.resize(grid_.size());
    law_.visit([&](const auto& law) {
      for (int k : active_) {
        law.eval(state_.theta[k] / neff_[k], B_[k], dB_[k]);
        dB_[k] /= neff_[k];
      }
    });
  }

  template <class F>
  void for_neighbours(int k, F&& f) const {
    const int i = grid_.i_of(k), j = grid_.j_of(k);
    f(grid_.index(i - 1, j));
    f(grid_.index(i + 1, j));
    if (grid_.dim == 2) {
      f(grid_.index(i, j - 1));
      f(grid_.index(i, j + 1));
    }
  }

  double source(const std::function<double(Point, double)>& s, int k) const {
    return s ? s(grid_.coord(k), t_new_) : 0.0;
  }

  // --------------------------------------------------------------------------
  // Moisture

  double theta_residual(std::vector<double>& F) {
    F.resize(active_.size());
    const double inv2h2 = 1.0 / (2.0 * grid_.h * grid_.h);
    double norm = 0.0;
    for (int k : cls_.internal) {
      double lap = 0.0;
      for_neighbours(k, [&](int q) { lap += (r_[k] + r_[q]) * (B_[q] - B_[k]); });
      const double f = state_.theta[k] - old_.theta[k] - dt_ * lap * inv2h2 -
                       dt_ * source(forcing_.theta_source, k);
      F[slot_[k]] = f;
      norm = std::max(norm, std::abs(f) / theta_scale_);
    }
    for (std::size_t g = 0; g < cls_.ghost.size(); ++g) {
      const auto& geo = cls_.geometry[g];
      const auto& w = weights_[g];
      double flux = 0.0, value = 0.0;
      for (std::size_t p = 0; p < geo.stencil.size(); ++p) {
        const int q = geo.stencil[p].node;
        flux += w.neumann[p] * B_[q];
        value += w.dirichlet[p] * state_.theta[q];
      }
      const int k = cls_.ghost[g];
      const double f = r_[k] * flux - params_.K_w * (ambient_E(geo.boundary, t_new_) - value);
      F[slot_[k]] = f;
      norm = std::max(norm, std::abs(f) / ghost_theta_scale_);
    }
    return norm;
  }

  void theta_jacobian(std::vector<Entry>& J) {
    J.clear();
    const double c = dt_ / (2.0 * grid_.h * grid_.h);
    for (int k : cls_.internal) {
      const int row = slot_[k];
      double diag = 1.0 + opts_.jacobian_regularization;
      for_neighbours(k, [&](int q) {
        const double a = c * (r_[k] + r_[q]);
        diag += a * dB_[k];
        J.push_back({row, slot_[q], -a * dB_[q]});
      });
      J.push_back({row, row, diag});
    }
    for (std::size_t g = 0; g < cls_.ghost.size(); ++g) {
      const auto& geo = cls_.geometry[g];
      const auto& w = weights_[g];
      const int k = cls_.ghost[g];
      const int row = slot_[k];
      J.push_back({row, row, opts_.jacobian_regularization});
      for (std::size_t p = 0; p < geo.stencil.size(); ++p) {
        const int q = geo.stencil[p].node;
        J.push_back({row, slot_[q], r_[k] * w.neumann[p] * dB_[q] + params_.K_w * w.dirichlet[p]});
      }
    }
  }

  // --------------------------------------------------------------------------
  // Carbonic acid (linear in c given theta, n)

  double acid_residual(std::vector<double>& F) {
    F.resize(active_.size());
    const double inv2h2 = 1.0 / (2.0 * grid_.h * grid_.h);
    const double sink = params_.K_c * params_.K_n * params_.rho_0;
    const auto& th = state_.theta;
    const auto& ca = state_.c_a;
    double norm = 0.0;
    for (int k : cls_.internal) {
      double adv = 0.0, diff = 0.0;
      for_neighbours(k, [&](int q) {
        adv += (ca[k] * r_[k] + ca[q] * r_[q]) * (B_[q] - B_[k]);
        diff += (th[k] + th[q]) * (ca[q] - ca[k]);
      });
      const double f = th[k] * ca[k] - old_.theta[k] * old_.c_a[k] -
                       dt_ * (adv + params_.D_c * diff) * inv2h2 +
                       dt_ * sink * ca[k] * (1.0 - state_.n[k]) -
                       dt_ * source(forcing_.acid_source, k);
      F[slot_[k]] = f;
      norm = std::max(norm, std::abs(f) / (theta_scale_ * c_scale_));
    }
    for (std::size_t g = 0; g < cls_.ghost.size(); ++g) {
      const auto& geo = cls_.geometry[g];
      const auto& w = weights_[g];
      double fluxB = 0.0, fluxC = 0.0, cB = 0.0, thB = 0.0;
      for (std::size_t p = 0; p < geo.stencil.size(); ++p) {
        const int q = geo.stencil[p].node;
        fluxB += w.neumann[p] * B_[q];
        fluxC += w.neumann[p] * ca[q];
        cB += w.dirichlet[p] * ca[q];
        thB += w.dirichlet[p] * th[q];
      }
      const int k = cls_.ghost[g];
      const double f = r_[k] * cB * fluxB + params_.D_c * thB * fluxC -
                       params_.K_a * (ambient_C(geo.boundary, t_new_) - cB);
      F[slot_[k]] = f;
      norm = std::max(norm, std::abs(f) / ghost_c_scale_);
    }
    return norm;
  }

  void acid_matrix(std::vector<Entry>& J) {
    J.clear();
    const double c = dt_ / (2.0 * grid_.h * grid_.h);
    const double sink = params_.K_c * params_.K_n * params_.rho_0;
    const auto& th = state_.theta;
    for (int k : cls_.internal) {
      const int row = slot_[k];
      double diag = th[k] + dt_ * sink * (1.0 - state_.n[k]) + opts_.jacobian_regularization;
      for_neighbours(k, [&](int q) {
        const double dBq = B_[q] - B_[k];
        const double a = c * params_.D_c * (th[k] + th[q]);
        diag += -c * r_[k] * dBq + a;
        J.push_back({row, slot_[q], -c * r_[q] * dBq - a});
      });
      J.push_back({row, row, diag});
    }
    for (std::size_t g = 0; g < cls_.ghost.size(); ++g) {
      const auto& geo = cls_.geometry[g];
      const auto& w = weights_[g];
      double fluxB = 0.0, thB = 0.0;
      for (std::size_t p = 0; p < geo.stencil.size(); ++p) {
        const int q = geo.stencil[p].node;
        fluxB += w.neumann[p] * B_[q];
        thB += w.dirichlet[p] * th[q];
      }
      const int k = cls_.ghost[g];
      const int row = slot_[k];
      J.push_back({row, row, opts_.jacobian_regularization});
      for (std::size_t p = 0; p < geo.stencil.size(); ++p) {
        const int q = geo.stencil[p].node;
        J.push_back({row, slot_[q],
                     (r_[k] * fluxB + params_.K_a) * w.dirichlet[p] +
                         params_.D_c * thB * w.neumann[p]});
      }
    }
  }

  // --------------------------------------------------------------------------
  // Porosity

  void update_porosity() {
    if (forcing_.freeze_porosity) return;
    const double kc = dt_ * params_.K_c;
    for (int k : cls_.internal) {
      const double a = kc * state_.c_a[k];
      state_.n[k] = (old_.n[k] + a) / (1.0 + a);
    }
  }

  double porosity_residual() const {
    if (forcing_.freeze_porosity) return 0.0;
    double norm = 0.0;
    for (int k : cls_.internal) {
      const double f = state_.n[k] - old_.n[k] -
                       dt_ * params_.K_c * state_.c_a[k] * (1.0 - state_.n[k]);
      norm = std::max(norm, std::abs(f) / params_.n_tilde);
    }
    return norm;
  }

  // --------------------------------------------------------------------------
  // Nonlinear iteration

  /// Chord-Newton with backtracking on one field. The factorisation is kept
  /// across iterations and steps and renewed when contraction stalls.
  template <class Residual, class Matrix>
  bool chord_solve(std::vector<double>& field, Residual residual, Matrix matrix, LinearSolver& lu,
                   double target, StepReport& rep, double& norm) {
    norm = residual(res_);
    bool fresh = false;
    for (int it = 0; it < opts_.max_newton; ++it) {
      if (norm <= target) return true;
      if (!lu.ready()) {
        matrix(entries_);
        ++rep.factorizations;
        if (!lu.factorize(static_cast<int>(active_.size()), entries_)) return false;
        fresh = true;
      }
      ++rep.newton_iterations;
      delta_ = res_;
      lu.solve(delta_);
      backup_.resize(active_.size());
      for (std::size_t r = 0; r < active_.size(); ++r) backup_[r] = field[active_[r]];
      double lambda = 1.0;
      double trial = norm;
      bool accepted = false;
      for (int ls = 0; ls < 10; ++ls) {
        for (std::size_t r = 0; r < active_.size(); ++r)
          field[active_[r]] = backup_[r] - lambda * delta_[r];
        trial = residual(res_);
        if (trial <= target || trial < (1.0 - 1e-4 * lambda) * norm) {
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!accepted) {
        for (std::size_t r = 0; r < active_.size(); ++r) field[active_[r]] = backup_[r];
        if (fresh) return false;
        lu.reset();
        norm = residual(res_);
        continue;
      }
      if (trial > opts_.refactor_ratio * norm) lu.reset();
      fresh = false;
      norm = trial;
    }
    return norm <= target;
  }

  bool attempt(double dt, StepReport& rep) {
    old_ = state_;
    dt_ = dt;
    t_new_ = state_.t + dt;
    if (dt_ != lu_dt_) {
      theta_lu_.reset();
      c_lu_.reset();
      lu_dt_ = dt_;
    }
    state_.t = t_new_;
    for (std::size_t k = 0; k < grid_.size(); ++k)
      if (cls_.kind[k] == NodeKind::outside) {
        state_.theta[k] = ambient_E(grid_.coord(static_cast<int>(k)), t_new_);
        state_.c_a[k] = ambient_C(grid_.coord(static_cast<int>(k)), t_new_);
      }
    const double inner = 0.1 * opts_.tolerance;
    auto theta_res = [this](std::vector<double>& F) {
      update_B();
      return theta_residual(F);
    };
    auto theta_mat = [this](std::vector<Entry>& J) { theta_jacobian(J); };
    auto acid_res = [this](std::vector<double>& F) { return acid_residual(F); };
    auto acid_mat = [this](std::vector<Entry>& J) { acid_matrix(J); };

    for (int outer = 1; outer <= opts_.max_outer; ++outer) {
      ++rep.outer_iterations;
      update_porosity();
      update_coefficients(false);
      double rt = 0.0, rc = 0.0;
      if (!chord_solve(state_.theta, theta_res, theta_mat, theta_lu_, inner, rep, rt)) break;
      if (!chord_solve(state_.c_a, acid_res, acid_mat, c_lu_, inner, rep, rc)) break;
      // theta and c residuals stay current: n has not moved since they were evaluated.
      const double rn = porosity_residual();
      rep.residual = std::max({rt, rc, rn});
      if (rep.residual <= opts_.tolerance) return true;
    }
    state_ = old_;
    theta_lu_.reset();
    c_lu_.reset();
    return false;
  }

  Grid grid_;
  ModelParams params_;
  AbsorptionLaw law_;
  Ambient ambient_;
  SolverOptions opts_;
  Forcing forcing_;
  SimulationState state_;
  GridClassification cls_;
  std::vector<BoundaryWeights> weights_;
  std::vector<double> n_ref_;

  std::vector<int> active_;
  std::vector<int> slot_;

  double theta_scale_ = 1.0, c_scale_ = 1.0;
  double ghost_theta_scale_ = 1.0, ghost_c_scale_ = 1.0;

  double dt_ = 0.0, t_new_ = 0.0, lu_dt_ = -1.0;
  double current_dt_ = 0.0, nominal_dt_ = 0.0;
  int successes_ = 0;

  SimulationState old_;
  std::vector<double> neff_, r_, B_, dB_;
  std::vector<double> res_, delta_, backup_;
  std::vector<Entry> entries_;
  LinearSolver theta_lu_, c_lu_;
};

}  // namespace erosim

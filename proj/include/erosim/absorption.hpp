#pragma once

/// \file absorption.hpp
/// Absorption functions B(s) and B'(s) of the moisture equation.
///
/// B links capillary pressure and permeability through Darcy's law and acts
/// as a flux potential: the moisture flux is (n/ñ)^2 grad B(theta/n). Its
/// derivative B' is a saturation-dependent diffusivity with compact support
/// on [s_R, s_S]. Two formulations are provided: a symmetric parabola fixed
/// by its peak D, and an asymmetric law built from a power permeability and a
/// rational capillary pressure.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <variant>

#include "erosim/errors.hpp"
#include "erosim/numerics.hpp"

namespace erosim {

struct SymmetricParams {
  double s_R = 0.227;  ///< residual saturation
  double s_S = 0.884;  ///< maximal saturation
  double D = 1.09e-5;  ///< peak of B' [cm^2/s]
};

struct AsymmetricParams {
  double s_R = 0.227;
  double s_S = 0.884;
  double alpha = 0.5;   ///< capillary exponent
  double c = 34.19;     ///< capillary coefficient [g/(cm s^2)]
  double K_s = 7.9e-9;  ///< permeability at saturation [cm^2]
  double gamma = 2.0;   ///< permeability exponent
  double mu = 8.9e-3;   ///< fluid viscosity [g/(cm s)]
};

/// B(s) = D s. Not a stone law; used by linear test problems.
struct LinearParams {
  double D = 1.09e-5;
};

inline void validate(const SymmetricParams& p) {
  if (!(p.s_R > 0.0 && p.s_R < p.s_S && p.s_S <= 1.0))
    throw ConfigError("symmetric law requires 0 < s_R < s_S <= 1");
  if (!(p.D > 0.0)) throw ConfigError("symmetric law requires D > 0");
}

inline void validate(const AsymmetricParams& p) {
  if (!(p.s_R > 0.0 && p.s_R < p.s_S && p.s_S <= 1.0))
    throw ConfigError("asymmetric law requires 0 < s_R < s_S <= 1");
  if (!(p.alpha > 0.0 && p.c > 0.0 && p.K_s > 0.0 && p.gamma > 0.0 && p.mu > 0.0))
    throw ConfigError("asymmetric law requires alpha, c, K_s, gamma, mu > 0");
  if (!(p.gamma - p.alpha - 1.0 > 0.0))
    throw ConfigError("asymmetric law requires gamma - alpha - 1 > 0");
}

inline void validate(const LinearParams& p) {
  if (!(p.D > 0.0)) throw ConfigError("linear law requires D > 0");
}

/// Symmetric absorption function: B' is a parabola on [s_R, s_S] peaking at D.
class SymmetricLaw {
 public:
  using Params = SymmetricParams;

  explicit SymmetricLaw(const SymmetricParams& p) : p_(p) {
    validate(p_);
    inv_width2_ = 1.0 / ((p_.s_R - p_.s_S) * (p_.s_R - p_.s_S));
    plateau_ = b(p_.s_S);  // = 2/3 D (s_S - s_R), continuous with the middle branch
  }

  const SymmetricParams& params() const noexcept { return p_; }
  double s_R() const noexcept { return p_.s_R; }
  double s_S() const noexcept { return p_.s_S; }

  double b_prime(double s) const noexcept {
    if (s <= p_.s_R || s >= p_.s_S) return 0.0;
    return std::max(0.0, -4.0 * p_.D * (p_.s_R - s) * (p_.s_S - s) * inv_width2_);
  }

  double b(double s) const noexcept {
    if (s < p_.s_R) return 0.0;
    if (s > p_.s_S) return plateau_;
    const double d = p_.s_R - s;
    return -(2.0 * p_.D * d * d * (p_.s_R - 3.0 * p_.s_S + 2.0 * s)) * inv_width2_ / 3.0;
  }

  void eval(double s, double& value, double& slope) const noexcept {
    value = b(s);
    slope = b_prime(s);
  }

  /// Peak of B', attained at the midpoint of the support.
  double d_max() const noexcept { return p_.D; }
  double argmax() const noexcept { return 0.5 * (p_.s_R + p_.s_S); }

 private:
  SymmetricParams p_;
  double inv_width2_ = 0.0;
  double plateau_ = 0.0;
};

/// Asymmetric absorption function B'_kP = -k(s) P_c'(s) / mu.
class AsymmetricLaw {
 public:
  using Params = AsymmetricParams;

  explicit AsymmetricLaw(const AsymmetricParams& p) : p_(p) {
    validate(p_);
    width_ = p_.s_S - p_.s_R;
    m_ = p_.gamma - p_.alpha;
    prefactor_ = p_.K_s * p_.c / (p_.mu * std::pow(width_, p_.gamma));
    const double a = p_.alpha;
    const double g = p_.gamma;
    denominator_ = -a * a * a + 3.0 * a * a * (g + 1.0) - 3.0 * a * g * (g + 2.0) - 2.0 * a +
                   g * g * g + 3.0 * g * g + 2.0 * g;
    // Antiderivative coefficients in t = s - s_R, see b().
    q2_ = (a - 2.0) * m_ * (m_ + 1.0);
    q1_ = -(2.0 * a - 2.0) * width_ * m_ * (m_ + 2.0);
    q0_ = a * width_ * width_ * (m_ + 1.0) * (m_ + 2.0);
    plateau_ = plateau_value();
    argmax_ = numerics::golden_section_max([this](double s) { return b_prime(s); }, p_.s_R,
                                           p_.s_S, 1e-12);
    d_max_ = b_prime(argmax_);
  }

  const AsymmetricParams& params() const noexcept { return p_; }
  double s_R() const noexcept { return p_.s_R; }
  double s_S() const noexcept { return p_.s_S; }

  /// k(s), clamped to its endpoint values outside [s_R, s_S].
  double permeability(double s) const noexcept {
    if (s <= p_.s_R) return 0.0;
    if (s >= p_.s_S) return p_.K_s;
    return p_.K_s * std::pow((s - p_.s_R) / width_, p_.gamma);
  }

  double capillary_pressure(double s) const {
    if (!(s > p_.s_R)) throw DomainError("capillary pressure is singular for s <= s_R");
    const double d = s - p_.s_S;
    return p_.c * d * d / std::pow(s - p_.s_R, p_.alpha);
  }

  double capillary_pressure_prime(double s) const {
    if (!(s > p_.s_R)) throw DomainError("capillary pressure is singular for s <= s_R");
    const double a = p_.alpha;
    return -p_.c * (s - p_.s_S) * (2.0 * p_.s_R - 2.0 * s - a * p_.s_S + a * s) /
           std::pow(s - p_.s_R, a + 1.0);
  }

  double b_prime(double s) const noexcept {
    if (s <= p_.s_R || s >= p_.s_S) return 0.0;
    const double t = s - p_.s_R;
    const double v = prefactor_ * std::exp((m_ - 1.0) * std::log(t)) * (s - p_.s_S) *
                     (2.0 * p_.s_R + s * (p_.alpha - 2.0) - p_.alpha * p_.s_S);
    return std::max(0.0, v);
  }

  double b(double s) const noexcept {
    if (s <= p_.s_R) return 0.0;
    if (s >= p_.s_S) return plateau_;
    const double t = s - p_.s_R;
    return prefactor_ * std::exp(m_ * std::log(t)) * ((q2_ * t + q1_) * t + q0_) / denominator_;
  }

  /// B and B' with a single power evaluation.
  void eval(double s, double& value, double& slope) const noexcept {
    if (s <= p_.s_R) {
      value = 0.0;
      slope = 0.0;
      return;
    }
    if (s >= p_.s_S) {
      value = plateau_;
      slope = 0.0;
      return;
    }
    const double t = s - p_.s_R;
    const double tp = std::exp((m_ - 1.0) * std::log(t));
    value = prefactor_ * tp * t * ((q2_ * t + q1_) * t + q0_) / denominator_;
    slope = std::max(0.0, prefactor_ * tp * (s - p_.s_S) *
                              (2.0 * p_.s_R + s * (p_.alpha - 2.0) - p_.alpha * p_.s_S));
  }

  /// B at and above s_S.
  double plateau_value() const noexcept {
    return 2.0 * p_.K_s * p_.c * p_.gamma * std::pow(width_, 2.0 - p_.alpha) /
           (p_.mu * denominator_);
  }

  /// Quadrature of B' from s_R to s; independent check of b(). Integrates
  /// in u = sqrt(s - s_R), where the integrand is smooth, to an absolute
  /// tolerance of tol tightened to 1e-13 relative.
  double b_by_quadrature(double s, double tol = 1e-14) const {
    if (s <= p_.s_R) return 0.0;
    const double upper = std::sqrt(std::min(s, p_.s_S) - p_.s_R);
    auto f = [this](double u) { return 2.0 * u * b_prime(p_.s_R + u * u); };
    const double rough = numerics::adaptive_simpson(f, 0.0, upper, tol);
    const double tight = std::min(tol, 1e-13 * std::abs(rough));
    if (!(tight > 0.0)) return rough;
    return numerics::adaptive_simpson(f, 0.0, upper, tight);
  }

  double d_max() const noexcept { return d_max_; }
  double argmax() const noexcept { return argmax_; }

 private:
  AsymmetricParams p_;
  double width_ = 0.0;
  double m_ = 0.0;
  double prefactor_ = 0.0;
  double denominator_ = 0.0;
  double q2_ = 0.0, q1_ = 0.0, q0_ = 0.0;
  double plateau_ = 0.0;
  double argmax_ = 0.0;
  double d_max_ = 0.0;
};

class LinearLaw {
 public:
  using Params = LinearParams;
  explicit LinearLaw(const LinearParams& p) : p_(p) { validate(p_); }
  const LinearParams& params() const noexcept { return p_; }
  double b(double s) const noexcept { return p_.D * s; }
  double b_prime(double) const noexcept { return p_.D; }
  void eval(double s, double& value, double& slope) const noexcept {
    value = b(s);
    slope = p_.D;
  }
  double d_max() const noexcept { return p_.D; }

 private:
  LinearParams p_;
};

enum class LawKind { symmetric, asymmetric, linear };

inline std::string_view to_string(LawKind k) {
  switch (k) {
    case LawKind::symmetric: return "symmetric";
    case LawKind::asymmetric: return "asymmetric";
    case LawKind::linear: return "linear";
  }
  return "?";
}

inline LawKind law_kind_from_string(std::string_view s) {
  if (s == "symmetric") return LawKind::symmetric;
  if (s == "asymmetric") return LawKind::asymmetric;
  if (s == "linear") return LawKind::linear;
  throw ConfigError("unknown absorption law '" + std::string(s) + "'");
}

/// Type-erased absorption law with value semantics.
class AbsorptionLaw {
 public:
  using Variant = std::variant<SymmetricLaw, AsymmetricLaw, LinearLaw>;

  AbsorptionLaw(SymmetricLaw l) : law_(std::move(l)) {}   // NOLINT
  AbsorptionLaw(AsymmetricLaw l) : law_(std::move(l)) {}  // NOLINT
  AbsorptionLaw(LinearLaw l) : law_(std::move(l)) {}      // NOLINT

  LawKind kind() const noexcept { return static_cast<LawKind>(law_.index()); }

  double eval_B(double s) const noexcept {
    return std::visit([s](const auto& l) { return l.b(s); }, law_);
  }
  double eval_Bprime(double s) const noexcept {
    return std::visit([s](const auto& l) { return l.b_prime(s); }, law_);
  }
  double d_max() const noexcept {
    return std::visit([](const auto& l) { return l.d_max(); }, law_);
  }

  /// Calls f with the concrete law; lets hot loops avoid per-call dispatch.
  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), law_);
  }

  const Variant& variant() const noexcept { return law_; }

 private:
  Variant law_;
};

}  // namespace erosim

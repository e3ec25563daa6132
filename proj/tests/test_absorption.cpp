#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "erosim/absorption.hpp"

using namespace erosim;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Reference values below come from 40-digit evaluation of the defining
// expressions (quadrature and differentiation done independently of the
// closed forms in the library).
constexpr double kSymBp05 = 1.05888701236421258939555e-5;
constexpr double kSymPlateau = 4.7742e-6;
constexpr double kSymB06 = 2.86918302061783223560501e-6;
constexpr double kPc05555 = 6.43727646861472872222940;
constexpr double kPcPrime05555 = -48.9899274628213753594323;
constexpr double kPcPrime03 = -443.406206960615290843740;
constexpr double kAsymBp05555 = 1.08713603077609231836942e-5;
constexpr double kAsymArgmax = 0.572975301467806401402082;
constexpr double kAsymMax = 1.09004290873388454954718e-5;
constexpr double kAsymB07 = 3.94086324934066701757429e-6;
constexpr double kAsymPlateau = 4.92543870730375932384433e-6;

SymmetricLaw sym() { return SymmetricLaw(SymmetricParams{}); }
AsymmetricLaw asym() { return AsymmetricLaw(AsymmetricParams{}); }

}  // namespace

TEST(Symmetric, CompactSupportEndpoints) {
  const auto l = sym();
  EXPECT_EQ(l.b_prime(0.227), 0.0);
  EXPECT_EQ(l.b_prime(0.884), 0.0);
  EXPECT_EQ(l.b_prime(0.1), 0.0);
  EXPECT_EQ(l.b_prime(0.95), 0.0);
}

TEST(Symmetric, PeakAtMidpointEqualsD) {
  const auto l = sym();
  EXPECT_NEAR(l.b_prime(0.5555), 1.09e-5, 1e-20);
  EXPECT_DOUBLE_EQ(l.d_max(), 1.09e-5);
  EXPECT_DOUBLE_EQ(l.argmax(), 0.5555);
  for (double s = 0.23; s < 0.884; s += 0.001) EXPECT_LE(l.b_prime(s), 1.09e-5 * (1 + 1e-15));
}

TEST(Symmetric, ValueAtHalf) { EXPECT_LT(rel(sym().b_prime(0.5), kSymBp05), 1e-13); }

TEST(Symmetric, BranchesAndPlateau) {
  const auto l = sym();
  EXPECT_EQ(l.b(0.1), 0.0);
  EXPECT_EQ(l.b(0.227), 0.0);
  EXPECT_LT(rel(l.b(1.0), kSymPlateau), 1e-13);
  EXPECT_LT(rel(l.b(0.884), kSymPlateau), 1e-13);
  EXPECT_LT(rel(l.b(0.6), kSymB06), 1e-12);
}

TEST(Symmetric, RejectsInvalidParameters) {
  EXPECT_THROW(SymmetricLaw(SymmetricParams{0.5, 0.4, 1e-5}), ConfigError);
  EXPECT_THROW(SymmetricLaw(SymmetricParams{0.0, 0.8, 1e-5}), ConfigError);
  EXPECT_THROW(SymmetricLaw(SymmetricParams{0.2, 1.2, 1e-5}), ConfigError);
  EXPECT_THROW(SymmetricLaw(SymmetricParams{0.2, 0.8, 0.0}), ConfigError);
}

TEST(Asymmetric, Permeability) {
  const auto l = asym();
  EXPECT_EQ(l.permeability(0.227), 0.0);
  EXPECT_DOUBLE_EQ(l.permeability(0.884), 7.9e-9);
  EXPECT_LT(rel(l.permeability(0.5555), 1.975e-9), 1e-14);
  EXPECT_EQ(l.permeability(0.1), 0.0);
  EXPECT_DOUBLE_EQ(l.permeability(0.99), 7.9e-9);
}

TEST(Asymmetric, CapillaryPressure) {
  const auto l = asym();
  EXPECT_EQ(l.capillary_pressure(0.884), 0.0);
  EXPECT_LT(rel(l.capillary_pressure(0.5555), kPc05555), 1e-13);
  EXPECT_GT(l.capillary_pressure(0.227 + 1e-12), 1e6);
  EXPECT_THROW(l.capillary_pressure(0.227), DomainError);
  EXPECT_THROW(l.capillary_pressure(0.1), DomainError);
  double prev = l.capillary_pressure(0.23);
  for (double s = 0.231; s <= 0.884; s += 0.001) {
    const double v = l.capillary_pressure(s);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Asymmetric, CapillaryPressurePrime) {
  const auto l = asym();
  EXPECT_LE(l.capillary_pressure_prime(0.884), 0.0);
  EXPECT_LT(rel(l.capillary_pressure_prime(0.5555), kPcPrime05555), 1e-12);
  EXPECT_LT(rel(l.capillary_pressure_prime(0.3), kPcPrime03), 1e-12);
  EXPECT_THROW(l.capillary_pressure_prime(0.227), DomainError);
  for (double s = 0.25; s < 0.88; s += 0.01) {
    EXPECT_LT(l.capillary_pressure_prime(s), 0.0);
    const double step = 1e-6;
    const double fd =
        (l.capillary_pressure(s + step) - l.capillary_pressure(s - step)) / (2.0 * step);
    EXPECT_LT(rel(l.capillary_pressure_prime(s), fd), 1e-5) << "s=" << s;
  }
}

TEST(Asymmetric, DerivativeValueAndMaximum) {
  const auto l = asym();
  EXPECT_EQ(l.b_prime(0.227), 0.0);
  EXPECT_EQ(l.b_prime(0.884), 0.0);
  EXPECT_LT(rel(l.b_prime(0.5555), kAsymBp05555), 1e-12);
  EXPECT_NEAR(l.argmax(), kAsymArgmax, 1e-6);
  EXPECT_LT(rel(l.d_max(), kAsymMax), 1e-10);
  EXPECT_LT(rel(l.d_max(), 1.09e-5), 0.01);
}

TEST(Asymmetric, ClosedFormAntiderivative) {
  const auto l = asym();
  EXPECT_EQ(l.b(0.227), 0.0);
  EXPECT_EQ(l.b(0.1), 0.0);
  EXPECT_LT(rel(l.b(0.7), kAsymB07), 1e-12);
  EXPECT_LT(rel(l.b(1.0), kAsymPlateau), 1e-12);
  EXPECT_LT(rel(l.plateau_value(), kAsymPlateau), 1e-12);
  EXPECT_LT(rel(l.b_by_quadrature(0.884), l.plateau_value()), 1e-8);
}

TEST(Asymmetric, ClosedFormMatchesQuadratureAt100Points) {
  const auto l = asym();
  for (int k = 1; k <= 100; ++k) {
    const double s = 0.227 + (0.884 - 0.227) * k / 101.0;
    EXPECT_LT(rel(l.b(s), l.b_by_quadrature(s)), 1e-8) << "s=" << s;
  }
}

TEST(Asymmetric, DarcyIdentity) {
  const auto l = asym();
  const double mu = l.params().mu;
  for (int k = 1; k <= 100; ++k) {
    const double s = 0.227 + (0.884 - 0.227) * k / 101.0;
    const double lhs = l.b_prime(s) * mu;
    const double rhs = -l.permeability(s) * l.capillary_pressure_prime(s);
    EXPECT_LT(rel(lhs, rhs), 1e-10) << "s=" << s;
  }
}

TEST(Asymmetric, EvalAgreesWithSeparateCalls) {
  const auto l = asym();
  for (double s = 0.0; s <= 1.0; s += 0.0137) {
    double v = 0.0, d = 0.0;
    l.eval(s, v, d);
    EXPECT_LT(std::abs(v - l.b(s)), 1e-15 * std::max(1.0, l.b(s)) + 1e-22);
    EXPECT_LT(std::abs(d - l.b_prime(s)), 1e-14 * l.d_max());
  }
}

TEST(Asymmetric, RejectsInvalidParameters) {
  AsymmetricParams p;
  p.gamma = 1.4;  // gamma - alpha - 1 < 0
  EXPECT_THROW(AsymmetricLaw{p}, ConfigError);
  p = {};
  p.c = -1.0;
  EXPECT_THROW(AsymmetricLaw{p}, ConfigError);
  p = {};
  p.s_R = 0.9;
  EXPECT_THROW(AsymmetricLaw{p}, ConfigError);
}

TEST(AllLaws, ShapeProperties) {
  const AbsorptionLaw laws[] = {sym(), asym()};
  for (const auto& law : laws) {
    double prev = law.eval_B(0.0);
    EXPECT_EQ(prev, 0.0);
    for (int k = 1; k <= 10000; ++k) {
      const double s = k / 10000.0;
      const double bp = law.eval_Bprime(s);
      EXPECT_GE(bp, 0.0);
      if (s <= 0.227 || s >= 0.884) EXPECT_EQ(bp, 0.0);
      const double b = law.eval_B(s);
      EXPECT_GE(b, prev - 1e-22);
      EXPECT_LT(b - prev, 1e-8);  // continuity at this resolution
      prev = b;
    }
  }
}

TEST(AllLaws, RandomisedQuadratureCheck) {
  const auto l = asym();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2271, 0.8839);
  for (int k = 0; k < 200; ++k) {
    const double s = u(rng);
    EXPECT_LT(rel(l.b(s), l.b_by_quadrature(s)), 1e-8);
  }
}

TEST(Linear, Basics) {
  LinearLaw l(LinearParams{2e-5});
  EXPECT_DOUBLE_EQ(l.b(0.5), 1e-5);
  EXPECT_DOUBLE_EQ(l.b_prime(0.9), 2e-5);
  EXPECT_THROW(LinearLaw(LinearParams{0.0}), ConfigError);
}

TEST(LawKind, Names) {
  for (auto k : {LawKind::symmetric, LawKind::asymmetric, LawKind::linear})
    EXPECT_EQ(law_kind_from_string(to_string(k)), k);
  EXPECT_THROW(law_kind_from_string("cubic"), ConfigError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hermite/kernels.hpp"
#include "hermite/problems.hpp"
#include "test_support.hpp"

using namespace hermite;
namespace ht = hermite::testing;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

InitialCondition single(AxisFactor f1, AxisFactor f2 = AxisFactor::constant(1.0),
                        AxisFactor f3 = AxisFactor::constant(1.0), double weight = 1.0) {
  InitialCondition ic;
  ic.terms = {SeparableTerm{weight, {f1, f2, f3}}};
  return ic;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// d^n/dx^n of x^p at x
double monomial_derivative(int p, int n, double x) {
  if (n > p) return 0.0;
  return factorial(p) / factorial(p - n) * std::pow(x, p - n);
}

}  // namespace

TEST(InitField, ConstantFillsOnlyValueDofs) {
  const GridSpec g({3, 4, 5}, {1, 1, 1});
  const auto f = init_field<double>(constant_ic(5.0), g, 2);
  for (int m3 = 0; m3 < 5; ++m3)
    for (int m2 = 0; m2 < 4; ++m2)
      for (int m1 = 0; m1 < 3; ++m1) {
        const auto node = f.node({m1, m2, m3});
        EXPECT_EQ(node[0], 5.0);
        for (std::size_t i = 1; i < node.size(); ++i) EXPECT_EQ(node[i], 0.0);
      }
}

TEST(InitField, FourierFirstDerivativeIsScaled) {
  const GridSpec g({8, 1, 1}, {1, 1, 1});
  const auto f = init_field<double>(single(AxisFactor::fourier_mode(1.0, 1, 0.0)), g, 1);
  const double h = 1.0 / 8;
  for (int m = 0; m < 8; ++m) {
    const double x = m * h;
    EXPECT_NEAR(f.at(m, 0, 0, 0, 0, 0), std::sin(two_pi * x), 1e-15);
    EXPECT_NEAR(f.at(m, 0, 0, 1, 0, 0), h * two_pi * std::cos(two_pi * x), 1e-15);
    EXPECT_EQ(f.at(m, 0, 0, 0, 1, 0), 0.0);
  }
}

TEST(InitField, FourierHigherDerivativesFollowFactorialScaling) {
  // d^n sin(w x + phi) = w^n sin(w x + phi + n pi/2)
  const double length = 2.0, amp = 0.7, phase = 0.3;
  const int k = 3;
  const auto f = AxisFactor::fourier_mode(amp, k, phase);
  const double w = two_pi * k / length;
  const double h = 0.05, x = 0.37;
  const auto g = scaled_derivatives(f, 4, x, h, length);
  for (int n = 0; n <= 4; ++n) {
    const double want =
        std::pow(h, n) / factorial(n) * amp * std::pow(w, n) *
        std::sin(w * x + phase + n * std::numbers::pi / 2);
    EXPECT_NEAR(g[static_cast<std::size_t>(n)], want, 1e-14) << "n=" << n;
  }
}

TEST(InitField, MonomialOnSingleCellMatchesSymbolicDerivatives) {
  const GridSpec g({1, 1, 1}, {0.8, 0.8, 0.8});
  const auto ic = single(AxisFactor::monomial(3), AxisFactor::monomial(3), AxisFactor::monomial(3));
  const auto f = init_field<double>(ic, g, 1);
  // the single node sits at the origin, where every product of x^3 derivatives
  // of order <= 1 vanishes
  for (double v : f.node({0, 0, 0})) EXPECT_EQ(v, 0.0);

  // off-origin check on the exact DOF block
  const std::array<double, 3> x{0.3, -0.4, 0.5}, h{0.8, 0.8, 0.8};
  std::vector<double> block(8);
  exact_dofs(ic, 1, x, h, g.lengths, block);
  std::size_t i = 0;
  for (int n3 = 0; n3 <= 1; ++n3)
    for (int n2 = 0; n2 <= 1; ++n2)
      for (int n1 = 0; n1 <= 1; ++n1) {
        const double want = std::pow(0.8, n1 + n2 + n3) * monomial_derivative(3, n1, x[0]) *
                            monomial_derivative(3, n2, x[1]) * monomial_derivative(3, n3, x[2]);
        EXPECT_NEAR(block[i++], want, 1e-15);
      }
}

TEST(InitField, RejectsMonomialOnMultiCellGrid) {
  const auto ic = single(AxisFactor::monomial(2));
  EXPECT_THROW(init_field<double>(ic, GridSpec::cube(2), 1), std::invalid_argument);
  EXPECT_NO_THROW(init_field<double>(ic, GridSpec::cube(1), 1));
  EXPECT_THROW(AxisFactor::monomial(-1), std::invalid_argument);
}

TEST(InitField, TermsAddLinearly) {
  const GridSpec g = GridSpec::cube(4);
  const auto a = single(AxisFactor::fourier_mode(1.0, 1, 0.2), AxisFactor::fourier_mode(1.0, 2, 0.0));
  const auto b = single(AxisFactor::constant(2.0), AxisFactor::fourier_mode(0.5, 1, 1.0),
                        AxisFactor::fourier_mode(1.0, 1, 0.0), -0.25);
  InitialCondition sum;
  sum.terms = {a.terms[0], b.terms[0]};
  const auto fa = init_field<double>(a, g, 2), fb = init_field<double>(b, g, 2);
  const auto fs = init_field<double>(sum, g, 2);
  for (std::size_t i = 0; i < fs.data().size(); ++i)
    EXPECT_NEAR(fs.data()[i], fa.data()[i] + fb.data()[i], 1e-15);
}

TEST(PlaneWave, MatchesDirectEvaluation) {
  const auto ic = plane_wave(0.8, {1, 2, 3}, 0.4);
  const std::array<double, 3> lengths{1.0, 2.0, 1.5};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const std::array<double, 3> x{u(rng), u(rng), u(rng)};
    const double want =
        0.8 * std::sin(two_pi * (x[0] / 1.0 + 2 * x[1] / 2.0 + 3 * x[2] / 1.5) + 0.4);
    EXPECT_NEAR(ic.evaluate(x, lengths), want, 1e-13);
  }
}

TEST(ExactSolution, AtTimeZeroIsInitialCondition) {
  const auto ic = plane_wave(1.0, {1, 1, 1});
  const auto e = exact_solution(ic, 0.0, {1, 1, 1});
  for (const std::array<double, 3> x : {std::array<double, 3>{0.1, 0.2, 0.3}, {0.9, 0.0, 0.5}})
    EXPECT_EQ(e(x), ic.evaluate(x, {1, 1, 1}));
}

TEST(ExactSolution, FullPeriodShiftIsIdentity) {
  const std::array<double, 3> lengths{2.0, 2.0, 2.0};
  const auto ic = single(AxisFactor::fourier_mode(1.0, 1, 0.1), AxisFactor::fourier_mode(0.5, 1, 0.0),
                         AxisFactor::fourier_mode(1.0, 1, 1.0));
  const auto e = exact_solution(ic, 2.0, lengths);
  for (const std::array<double, 3> x : {std::array<double, 3>{0.1, 0.2, 0.3}, {1.9, 0.7, 1.2}})
    EXPECT_NEAR(e(x), ic.evaluate(x, lengths), 1e-14);
}

TEST(ExactSolution, QuarterShiftOfSine) {
  const auto ic = single(AxisFactor::fourier_mode(1.0, 1, 0.0));
  const auto e = exact_solution(ic, 0.25, {1, 1, 1});
  for (double x1 : {0.0, 0.1, 0.33, 0.75})
    EXPECT_NEAR(e({x1, 0.4, 0.6}), std::sin(two_pi * (x1 + 0.25)), 1e-15);
}

TEST(ExactSolution, SatisfiesAdvectionEquation) {
  // u_t = u_x1 + u_x2 + u_x3 for the shift x + t; central differences
  const std::array<double, 3> lengths{1.0, 1.0, 1.0};
  const auto ic = random_fourier_ic(9, 4, 2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double eps = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const std::array<double, 3> x{u(rng), u(rng), u(rng)};
    const double t = u(rng);
    const double ut = (exact_solution(ic, t + eps, lengths)(x) -
                       exact_solution(ic, t - eps, lengths)(x)) / (2 * eps);
    const auto e = exact_solution(ic, t, lengths);
    double grad = 0.0;
    for (int k = 0; k < 3; ++k) {
      auto xp = x, xm = x;
      xp[static_cast<std::size_t>(k)] += eps;
      xm[static_cast<std::size_t>(k)] -= eps;
      grad += (e(xp) - e(xm)) / (2 * eps);
    }
    EXPECT_NEAR(ut, grad, 1e-7);
  }
}

TEST(ComputeError, ExactFieldHasRoundOffError) {
  const GridSpec g = GridSpec::cube(6);
  const auto ic = plane_wave(1.0, {1, 2, 1});
  const auto f = init_field<double>(ic, g, 1);
  const auto e = compute_error(f, exact_solution(ic, 0.0, g.lengths));
  EXPECT_LE(e.l_inf, 1e-14);
  EXPECT_LE(e.l2, 1e-14);
}

TEST(ComputeError, UniformBias) {
  const GridSpec g({4, 4, 4}, {1.0, 2.0, 0.5});
  const double b = 0.125;
  const auto f = init_field<double>(constant_ic(1.0 + b), g, 1);
  const auto e = compute_error(f, [](const auto&) { return 1.0; });
  EXPECT_DOUBLE_EQ(e.l_inf, b);
  EXPECT_NEAR(e.l2, b * std::sqrt(1.0 * 2.0 * 0.5), 1e-15);
}

TEST(ComputeError, L2BoundedByMaxNormTimesVolume) {
  const GridSpec g({5, 3, 4}, {1.0, 3.0, 2.0});
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = init_field<double>(random_fourier_ic(rng(), 3, 2), g, 0);
    const auto e = compute_error(f, [](const auto&) { return 0.1; });
    EXPECT_GE(e.l_inf, 0.0);
    EXPECT_GE(e.l2, 0.0);
    EXPECT_LE(e.l2, e.l_inf * std::sqrt(6.0) * (1 + 1e-15));
  }
}

namespace {

// x1^a x2^b x3^c about the midpoint of the cell [0,h]^3; in local z = (x -
// center)/h the only coefficient is h^(a+b+c) at (a, b, c).
template <int N>
void check_monomial_loop(int a, int b, int c, double h) {
  const double mid = h / 2;
  const auto ic = single(AxisFactor::monomial(a, mid), AxisFactor::monomial(b, mid),
                         AxisFactor::monomial(c, mid));
  const auto ops = KernelOps<double, N>::build({h, h, h});
  const auto u = exact_cell_dofs<double, N>(ic, {0.0, 0.0, 0.0}, {h, h, h});
  const auto coeffs = reconstruct_cell(ops, u);
  const double scale = std::pow(h, a + b + c);
  for (int j3 = 0; j3 <= 2 * N + 1; ++j3)
    for (int j2 = 0; j2 <= 2 * N + 1; ++j2)
      for (int j1 = 0; j1 <= 2 * N + 1; ++j1) {
        const double want = (j1 == a && j2 == b && j3 == c) ? scale : 0.0;
        EXPECT_NEAR(coeffs(j3, j2, j1), want, 1e-11 * scale)
            << "N=" << N << " (" << a << "," << b << "," << c << ")";
      }
}

}  // namespace

TEST(InitField, MonomialDofsReconstructToExactCoefficients) {
  for (double h : {1.0, 0.25}) {
    for (int a = 0; a <= 3; ++a)
      for (int c = 0; c <= 3; c += 3) check_monomial_loop<1>(a, 3 - a, c, h);
    check_monomial_loop<2>(5, 0, 2, h);
    check_monomial_loop<3>(7, 4, 1, h);
  }
}

TEST(RandomFourierIc, DeterministicForSeed) {
  EXPECT_EQ(random_fourier_ic(42, 5, 3), random_fourier_ic(42, 5, 3));
  EXPECT_FALSE(random_fourier_ic(42, 5, 3) == random_fourier_ic(43, 5, 3));
  const auto ic = random_fourier_ic(7, 6, 2);
  EXPECT_TRUE(ic.periodic());
  ASSERT_EQ(ic.terms.size(), 6u);
  double total = 0.0;
  for (const auto& t : ic.terms) {
    total += std::fabs(t.weight);
    for (const auto& f : t.factors) {
      EXPECT_GE(f.wavenumber, 0);
      EXPECT_LE(f.wavenumber, 2);
    }
  }
  EXPECT_LE(total, 1.0);
  EXPECT_THROW(random_fourier_ic(1, 0, 2), std::invalid_argument);
}

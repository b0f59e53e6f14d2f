#pragma once

/// Analytic initial data for u_t = u_x1 + u_x2 + u_x3, exact solutions and
/// error norms. Initial conditions are sums of separable products
/// f1(x1) f2(x2) f3(x3), so every mixed derivative is a product of 1D
/// derivatives.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "hermite/cell_tensor.hpp"
#include "hermite/field.hpp"

namespace hermite {

struct AxisFactor {
  enum class Kind { fourier, constant, monomial };

  Kind kind = Kind::constant;
  double amplitude = 1.0;  // fourier: a sin(2 pi k x / L + phase)
  int wavenumber = 0;
  double phase = 0.0;
  double value = 1.0;      // constant
  int degree = 0;          // monomial: (x - center)^degree
  double center = 0.0;

  static AxisFactor fourier_mode(double amplitude, int wavenumber, double phase) {
    AxisFactor f;
    f.kind = Kind::fourier;
    f.amplitude = amplitude;
    f.wavenumber = wavenumber;
    f.phase = phase;
    return f;
  }
  static AxisFactor constant(double c) {
    AxisFactor f;
    f.kind = Kind::constant;
    f.value = c;
    return f;
  }
  static AxisFactor monomial(int degree, double center = 0.0) {
    if (degree < 0) throw std::invalid_argument("monomial degree must be non-negative");
    AxisFactor f;
    f.kind = Kind::monomial;
    f.degree = degree;
    f.center = center;
    return f;
  }

  bool periodic() const { return kind != Kind::monomial; }

  /// n-th derivative at x on an axis of period `length`.
  double derivative(int n, double x, double length) const {
    switch (kind) {
      case Kind::constant:
        return n == 0 ? value : 0.0;
      case Kind::monomial: {
        if (n > degree) return 0.0;
        double c = 1.0;
        for (int i = 0; i < n; ++i) c *= degree - i;
        return c * std::pow(x - center, degree - n);
      }
      case Kind::fourier: {
        const double omega = 2.0 * std::numbers::pi * wavenumber / length;
        const double xr = x - length * std::floor(x / length);
        const double theta = omega * xr + phase;
        const double scale = amplitude * std::pow(omega, n);
        switch (n % 4) {
          case 0: return scale * std::sin(theta);
          case 1: return scale * std::cos(theta);
          case 2: return -scale * std::sin(theta);
          default: return -scale * std::cos(theta);
        }
      }
    }
    return 0.0;
  }

  friend bool operator==(const AxisFactor&, const AxisFactor&) = default;
};

struct SeparableTerm {
  double weight = 1.0;
  std::array<AxisFactor, 3> factors{};

  friend bool operator==(const SeparableTerm&, const SeparableTerm&) = default;
};

struct InitialCondition {
  std::vector<SeparableTerm> terms;

  bool periodic() const {
    return std::all_of(terms.begin(), terms.end(), [](const SeparableTerm& t) {
      return t.factors[0].periodic() && t.factors[1].periodic() && t.factors[2].periodic();
    });
  }

  double evaluate(const std::array<double, 3>& x, const std::array<double, 3>& lengths) const {
    double u = 0.0;
    for (const auto& t : terms)
      u += t.weight * t.factors[0].derivative(0, x[0], lengths[0]) *
           t.factors[1].derivative(0, x[1], lengths[1]) *
           t.factors[2].derivative(0, x[2], lengths[2]);
    return u;
  }

  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

inline InitialCondition constant_ic(double c) {
  return {{SeparableTerm{1.0, {AxisFactor::constant(c), AxisFactor::constant(1.0),
                               AxisFactor::constant(1.0)}}}};
}

/// a sin(2 pi (k1 x1/L1 + k2 x2/L2 + k3 x3/L3) + phase), expanded into four
/// separable products with the angle-addition identity.
inline InitialCondition plane_wave(double amplitude, std::array<int, 3> k, double phase = 0.0) {
  constexpr double quarter = std::numbers::pi / 2.0;
  auto s = [](int kk, double ph) { return AxisFactor::fourier_mode(1.0, kk, ph); };
  auto c = [](int kk, double ph) { return AxisFactor::fourier_mode(1.0, kk, ph + quarter); };
  InitialCondition ic;
  ic.terms = {
      {amplitude, {s(k[0], phase), c(k[1], 0.0), c(k[2], 0.0)}},
      {amplitude, {c(k[0], phase), s(k[1], 0.0), c(k[2], 0.0)}},
      {amplitude, {c(k[0], phase), c(k[1], 0.0), s(k[2], 0.0)}},
      {-amplitude, {s(k[0], phase), s(k[1], 0.0), s(k[2], 0.0)}},
  };
  return ic;
}

/// Sum of `modes` separable Fourier products with random wavenumbers in
/// [0, max_wavenumber], phases and weights, normalised to amplitude <= 1.
inline InitialCondition random_fourier_ic(std::uint64_t seed, int modes, int max_wavenumber) {
  if (modes < 1) throw std::invalid_argument("random IC needs at least one mode");
  if (max_wavenumber < 0) throw std::invalid_argument("max_wavenumber must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> wave(0, max_wavenumber);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  InitialCondition ic;
  for (int m = 0; m < modes; ++m) {
    SeparableTerm t;
    t.weight = unit(rng) / modes;
    for (auto& f : t.factors)
      f = AxisFactor::fourier_mode(1.0, wave(rng), std::numbers::pi * unit(rng));
    ic.terms.push_back(t);
  }
  return ic;
}

/// Scaled derivatives (h^n / n!) f^(n)(x), n = 0..order_n.
inline std::vector<double> scaled_derivatives(const AxisFactor& f, int order_n, double x,
                                              double h, double length) {
  std::vector<double> g(static_cast<std::size_t>(order_n) + 1);
  double scale = 1.0;
  for (int n = 0; n <= order_n; ++n) {
    if (n > 0) scale *= h / n;
    g[static_cast<std::size_t>(n)] = scale * f.derivative(n, x, length);
  }
  return g;
}

/// Exact DOF block [n3][n2][n1] of `ic` at point x.
inline void exact_dofs(const InitialCondition& ic, int order_n, const std::array<double, 3>& x,
                       const std::array<double, 3>& h, const std::array<double, 3>& lengths,
                       std::span<double> out) {
  const int p = order_n + 1;
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& t : ic.terms) {
    const auto g1 = scaled_derivatives(t.factors[0], order_n, x[0], h[0], lengths[0]);
    const auto g2 = scaled_derivatives(t.factors[1], order_n, x[1], h[1], lengths[1]);
    const auto g3 = scaled_derivatives(t.factors[2], order_n, x[2], h[2], lengths[2]);
    std::size_t i = 0;
    for (int n3 = 0; n3 < p; ++n3)
      for (int n2 = 0; n2 < p; ++n2)
        for (int n1 = 0; n1 < p; ++n1)
          out[i++] += t.weight * g3[static_cast<std::size_t>(n3)] *
                      g2[static_cast<std::size_t>(n2)] * g1[static_cast<std::size_t>(n1)];
  }
}

/// Field whose every DOF is the exact scaled derivative of the IC at its node.
template <typename Real>
DofField<Real> init_field(const InitialCondition& ic, const GridSpec& grid, int order_n,
                          Parity parity = Parity::primary) {
  const bool multi_cell = grid.cells[0] > 1 || grid.cells[1] > 1 || grid.cells[2] > 1;
  if (multi_cell && !ic.periodic())
    throw std::invalid_argument("non-periodic initial condition on a multi-cell grid");
  DofField<Real> field(grid, order_n, parity);
  const auto h = grid.spacings();
  std::vector<double> block(field.node_block());
  for (int m3 = 0; m3 < grid.cells[2]; ++m3)
    for (int m2 = 0; m2 < grid.cells[1]; ++m2)
      for (int m1 = 0; m1 < grid.cells[0]; ++m1) {
        const std::array<double, 3> x{grid.coordinate(0, m1, parity),
                                      grid.coordinate(1, m2, parity),
                                      grid.coordinate(2, m3, parity)};
        exact_dofs(ic, order_n, x, h, grid.lengths, block);
        auto dst = field.node({m1, m2, m3});
        std::transform(block.begin(), block.end(), dst.begin(),
                       [](double v) { return static_cast<Real>(v); });
      }
  return field;
}

/// Exact 8-vertex DOF tensor of one cell with low corner `lower` and
/// spacings h, in the layout produced by gather_cell. Works for
/// non-periodic (monomial) data; `lengths` only matters for Fourier factors.
template <typename Real, int N>
CellTensor<Real, N> exact_cell_dofs(const InitialCondition& ic, const std::array<double, 3>& lower,
                                    const std::array<double, 3>& h,
                                    const std::array<double, 3>& lengths = {1.0, 1.0, 1.0}) {
  CellTensor<Real, N> u_loc;
  std::vector<double> block(static_cast<std::size_t>((N + 1) * (N + 1) * (N + 1)));
  std::vector<Real> typed(block.size());
  for (int a3 = 0; a3 < 2; ++a3)
    for (int a2 = 0; a2 < 2; ++a2)
      for (int a1 = 0; a1 < 2; ++a1) {
        exact_dofs(ic, N, {lower[0] + a1 * h[0], lower[1] + a2 * h[1], lower[2] + a3 * h[2]}, h,
                   lengths, block);
        std::transform(block.begin(), block.end(), typed.begin(),
                       [](double v) { return static_cast<Real>(v); });
        place_vertex<Real, N>(typed, a1, a2, a3, u_loc);
      }
  return u_loc;
}

using Evaluator = std::function<double(const std::array<double, 3>&)>;

/// x -> u0(x1 + t, x2 + t, x3 + t); Fourier arguments are wrapped into the
/// period before evaluation.
inline Evaluator exact_solution(const InitialCondition& ic, double t,
                                const std::array<double, 3>& lengths) {
  return [ic, t, lengths](const std::array<double, 3>& x) {
    return ic.evaluate({x[0] + t, x[1] + t, x[2] + t}, lengths);
  };
}

struct ErrorNorms {
  double l_inf = 0.0;
  double l2 = 0.0;
};

/// Norms of the node-value error; l2 uses the cell volume as quadrature weight.
template <typename Real>
ErrorNorms compute_error(const DofField<Real>& field, const Evaluator& exact) {
  const auto& grid = field.grid();
  ErrorNorms e;
  double sum = 0.0;
  for (int m3 = 0; m3 < grid.cells[2]; ++m3)
    for (int m2 = 0; m2 < grid.cells[1]; ++m2)
      for (int m1 = 0; m1 < grid.cells[0]; ++m1) {
        const std::array<double, 3> x{grid.coordinate(0, m1, field.parity()),
                                      grid.coordinate(1, m2, field.parity()),
                                      grid.coordinate(2, m3, field.parity())};
        const double diff = static_cast<double>(field.at(m1, m2, m3)) - exact(x);
        e.l_inf = std::max(e.l_inf, std::fabs(diff));
        sum += diff * diff;
      }
  e.l2 = std::sqrt(sum * grid.cell_volume());
  return e;
}

}  // namespace hermite

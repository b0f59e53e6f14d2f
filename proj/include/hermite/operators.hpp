#pragma once

/// One-dimensional Hermite operators.
///
/// A cell is described in the scaled coordinate z = (x - x_mid) / h, so its
/// vertices sit at z = -1/2 and z = +1/2. The endpoint DOF vector of a cell
/// line is the concatenation
///
///   [ p_0(left) .. p_N(left), p_0(right) .. p_N(right) ]
///
/// where p_k = (h^k / k!) d^k u / dx^k. The interpolation operator maps this
/// vector to the monomial coefficients b_0 .. b_{2N+1} of the unique degree
/// 2N+1 interpolant u(z) = sum_j b_j z^j. The derivative operator maps
/// monomial coefficients of u to those of du/dx.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace hermite {

inline constexpr int kMaxOrder = 4;

constexpr int cell_side(int order_n) { return 2 * order_n + 2; }

/// acc + a * b. On targets with hardware FMA the sum is formed with a single
/// rounding for float and double; other scalar types multiply, then add.
template <typename Real>
inline Real mul_add(Real a, Real b, Real acc) {
#if defined(__FMA__)
  if constexpr (std::is_same_v<Real, double> || std::is_same_v<Real, float>)
    return std::fma(a, b, acc);
  else
#endif
    return acc + a * b;
}

/// Binomial coefficient for small non-negative arguments.
constexpr double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

inline void check_order(int order_n) {
  if (order_n < 0 || order_n > kMaxOrder)
    throw std::invalid_argument("order_n must be in [0, " +
                                std::to_string(kMaxOrder) + "], got " +
                                std::to_string(order_n));
}

/// Dense (2N+2)x(2N+2) Hermite interpolation matrix, row-major.
class InterpOperator {
 public:
  InterpOperator(int order_n, std::vector<double> matrix)
      : order_n_(order_n), matrix_(std::move(matrix)) {}

  int order_n() const { return order_n_; }
  int side() const { return cell_side(order_n_); }
  double operator()(int row, int col) const {
    return matrix_[static_cast<std::size_t>(row * side() + col)];
  }
  std::span<const double> matrix() const { return matrix_; }

 private:
  int order_n_;
  std::vector<double> matrix_;
};

/// Shift-and-scale derivative matrix: D(i, i+1) = (i+1)/h, zero elsewhere.
class DerivOperator {
 public:
  DerivOperator(int order_n, double spacing)
      : order_n_(order_n), spacing_(spacing) {}

  int order_n() const { return order_n_; }
  int side() const { return cell_side(order_n_); }
  double spacing() const { return spacing_; }

  /// Superdiagonal entry of row i; zero for the last row.
  double factor(int row) const {
    return row + 1 < side() ? (row + 1) / spacing_ : 0.0;
  }
  double operator()(int row, int col) const {
    return col == row + 1 ? factor(row) : 0.0;
  }

 private:
  int order_n_;
  double spacing_;
};

/// Endpoint DOF matrix V with V[(e,k)][j] = C(j,k) z_e^(j-k), z_e = -/+ 1/2.
inline std::vector<double> endpoint_dof_matrix(int order_n) {
  const int side = cell_side(order_n);
  std::vector<double> v(static_cast<std::size_t>(side * side), 0.0);
  for (int e = 0; e < 2; ++e) {
    const double z = e == 0 ? -0.5 : 0.5;
    for (int k = 0; k <= order_n; ++k) {
      const int row = e * (order_n + 1) + k;
      for (int j = k; j < side; ++j)
        v[static_cast<std::size_t>(row * side + j)] =
            binomial(j, k) * std::pow(z, j - k);
    }
  }
  return v;
}

namespace detail {

// Exact rational with overflow-checked 64-bit parts; the elimination below
// stays far from the limits for N <= kMaxOrder.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw std::logic_error("rational with zero denominator");
    if (d < 0) n = -n, d = -d;
    const std::int64_t g = std::gcd(n, d);
    return {n / g, d / g};
  }
  static std::int64_t mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("rational overflow");
    return r;
  }
  static std::int64_t add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("rational overflow");
    return r;
  }
  friend Rational operator-(Rational a, Rational b) {
    return make(add(mul(a.num, b.den), mul(-b.num, a.den)), mul(a.den, b.den));
  }
  friend Rational operator*(Rational a, Rational b) {
    return make(mul(a.num, b.num), mul(a.den, b.den));
  }
  friend Rational operator/(Rational a, Rational b) {
    return make(mul(a.num, b.den), mul(a.den, b.num));
  }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace detail

/// Builds H = V^-1 by Gauss-Jordan elimination in exact rational
/// arithmetic. V has dyadic entries and so does its inverse, so every entry
/// of H is exactly representable.
inline InterpOperator build_interp_operator(int order_n) {
  using detail::Rational;
  check_order(order_n);
  const int n = cell_side(order_n);

  // augmented [V | I]
  std::vector<Rational> a(static_cast<std::size_t>(n * 2 * n));
  auto at = [&](int r, int c) -> Rational& {
    return a[static_cast<std::size_t>(r * 2 * n + c)];
  };
  for (int e = 0; e < 2; ++e)
    for (int k = 0; k <= order_n; ++k) {
      const int row = e * (order_n + 1) + k;
      for (int j = k; j < n; ++j) {
        const auto c = static_cast<std::int64_t>(binomial(j, k));
        const bool negative = e == 0 && (j - k) % 2 == 1;
        at(row, j) = Rational::make(negative ? -c : c, std::int64_t{1} << (j - k));
      }
      at(row, n + row) = Rational{1, 1};
    }

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    while (pivot < n && at(pivot, col).num == 0) ++pivot;
    if (pivot == n) throw std::logic_error("endpoint DOF matrix is singular");
    if (pivot != col)
      for (int c = 0; c < 2 * n; ++c) std::swap(at(pivot, c), at(col, c));
    const Rational p = at(col, col);
    for (int c = 0; c < 2 * n; ++c) at(col, c) = at(col, c) / p;
    for (int r = 0; r < n; ++r) {
      if (r == col || at(r, col).num == 0) continue;
      const Rational f = at(r, col);
      for (int c = 0; c < 2 * n; ++c) at(r, c) = at(r, c) - f * at(col, c);
    }
  }

  std::vector<double> h(static_cast<std::size_t>(n * n));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      h[static_cast<std::size_t>(r * n + c)] = at(r, n + c).to_double();
  return InterpOperator(order_n, std::move(h));
}

inline DerivOperator build_deriv_operator(int order_n, double spacing) {
  check_order(order_n);
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw std::invalid_argument("derivative operator spacing must be positive");
  return DerivOperator(order_n, spacing);
}

/// Applies a 1D operator to every line of a rank-3 tensor of side S stored
/// as [t3][t2][t1] (t1 fastest). Axis 1 contracts over t1, axis 3 over t3.
/// Each output entry sums its terms in ascending contraction index with
/// mul_add.
template <typename Real, typename Op>
void apply_along_axis(const Op& op, std::span<const Real> in,
                      std::span<Real> out, int axis) {
  const int s = op.side();
  const auto volume = static_cast<std::size_t>(s * s * s);
  if (in.size() != volume || out.size() != volume)
    throw std::invalid_argument("tensor side does not match operator side");
  if (axis < 1 || axis > 3) throw std::invalid_argument("axis must be 1, 2 or 3");
  if (in.data() == out.data())
    throw std::invalid_argument("apply_along_axis cannot run in place");

  const int stride = axis == 1 ? 1 : axis == 2 ? s : s * s;
  for (int t3 = 0; t3 < s; ++t3)
    for (int t2 = 0; t2 < s; ++t2)
      for (int t1 = 0; t1 < s; ++t1) {
        const int idx = (t3 * s + t2) * s + t1;
        const int pos = axis == 1 ? t1 : axis == 2 ? t2 : t3;
        const int base = idx - pos * stride;
        Real c = Real(0);
        for (int k = 0; k < s; ++k)
          c = mul_add(Real(op(pos, k)), in[static_cast<std::size_t>(base + k * stride)], c);
        out[static_cast<std::size_t>(idx)] = c;
      }
}

/// Sparse form for the derivative operator (shift one slot down and scale).
template <typename Real>
void apply_along_axis(const DerivOperator& op, std::span<const Real> in,
                      std::span<Real> out, int axis) {
  const int s = op.side();
  const auto volume = static_cast<std::size_t>(s * s * s);
  if (in.size() != volume || out.size() != volume)
    throw std::invalid_argument("tensor side does not match operator side");
  if (axis < 1 || axis > 3) throw std::invalid_argument("axis must be 1, 2 or 3");
  if (in.data() == out.data())
    throw std::invalid_argument("apply_along_axis cannot run in place");

  const int stride = axis == 1 ? 1 : axis == 2 ? s : s * s;
  for (int t3 = 0; t3 < s; ++t3)
    for (int t2 = 0; t2 < s; ++t2)
      for (int t1 = 0; t1 < s; ++t1) {
        const int idx = (t3 * s + t2) * s + t1;
        const int pos = axis == 1 ? t1 : axis == 2 ? t2 : t3;
        out[static_cast<std::size_t>(idx)] =
            pos + 1 < s ? Real(op.factor(pos)) * in[static_cast<std::size_t>(idx + stride)]
                        : Real(0);
      }
}

}  // namespace hermite

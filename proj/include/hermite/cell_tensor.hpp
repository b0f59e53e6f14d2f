#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <type_traits>
#include <utility>

#include "hermite/operators.hpp"

namespace hermite {

/// Rank-3 cell-local tensor of side 2N+2, indexed [j3][j2][j1] with j1 fastest.
/// Holds either gathered vertex DOFs or monomial coefficients of a cell
/// polynomial (CellCoeffs).
template <typename Real, int N>
struct CellTensor {
  static_assert(N >= 0 && N <= kMaxOrder);
  static constexpr int order_n = N;
  static constexpr int side = cell_side(N);
  static constexpr int volume = side * side * side;

  std::array<Real, volume> data{};

  static constexpr int index(int j3, int j2, int j1) {
    return (j3 * side + j2) * side + j1;
  }

  Real& operator()(int j3, int j2, int j1) { return data[index(j3, j2, j1)]; }
  const Real& operator()(int j3, int j2, int j1) const {
    return data[index(j3, j2, j1)];
  }
  Real& operator[](std::size_t i) { return data[i]; }
  const Real& operator[](std::size_t i) const { return data[i]; }

  /// Canonical basis tensor e_(j3,j2,j1).
  static CellTensor unit(int j3, int j2, int j1) {
    CellTensor t;
    t(j3, j2, j1) = Real(1);
    return t;
  }

  friend bool operator==(const CellTensor&, const CellTensor&) = default;
};

template <typename Real, int N>
using CellCoeffs = CellTensor<Real, N>;

/// Calls f(std::integral_constant<int, N>{}) for a runtime order.
template <typename F>
decltype(auto) dispatch_order(int order_n, F&& f) {
  switch (order_n) {
    case 0: return std::forward<F>(f)(std::integral_constant<int, 0>{});
    case 1: return std::forward<F>(f)(std::integral_constant<int, 1>{});
    case 2: return std::forward<F>(f)(std::integral_constant<int, 2>{});
    case 3: return std::forward<F>(f)(std::integral_constant<int, 3>{});
    case 4: return std::forward<F>(f)(std::integral_constant<int, 4>{});
    default: break;
  }
  check_order(order_n);
  throw std::logic_error("unreachable");
}

}  // namespace hermite

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hermite/cell_tensor.hpp"

namespace hermite {

enum class Parity { primary, dual };
enum class Precision { single, double_ };

constexpr Parity opposite(Parity p) {
  return p == Parity::primary ? Parity::dual : Parity::primary;
}

inline std::string_view to_string(Parity p) {
  return p == Parity::primary ? "primary" : "dual";
}
inline std::string_view to_string(Precision p) {
  return p == Precision::single ? "single" : "double";
}
inline Parity parse_parity(std::string_view s) {
  if (s == "primary") return Parity::primary;
  if (s == "dual") return Parity::dual;
  throw std::invalid_argument("unknown parity '" + std::string(s) + "'");
}
inline Precision parse_precision(std::string_view s) {
  if (s == "single") return Precision::single;
  if (s == "double") return Precision::double_;
  throw std::invalid_argument("unknown precision '" + std::string(s) + "'");
}

template <typename Real>
constexpr Precision precision_of() {
  return sizeof(Real) == sizeof(float) ? Precision::single : Precision::double_;
}

using Index3 = std::array<std::int64_t, 3>;

/// Periodic tensor-product grid. Axis k has M_k cells of width h_k = L_k / M_k.
/// Primary nodes sit at m*h_k, dual nodes at (m + 1/2)*h_k.
struct GridSpec {
  std::array<int, 3> cells{1, 1, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};

  GridSpec() = default;
  GridSpec(std::array<int, 3> cells_per_axis, std::array<double, 3> domain_lengths)
      : cells(cells_per_axis), lengths(domain_lengths) {
    for (int k = 0; k < 3; ++k) {
      if (cells[k] < 1)
        throw std::invalid_argument("cells_per_axis must be positive");
      if (!(lengths[k] > 0.0) || !std::isfinite(lengths[k]))
        throw std::invalid_argument("domain_lengths must be positive");
    }
  }
  static GridSpec cube(int m, double length = 1.0) {
    return GridSpec({m, m, m}, {length, length, length});
  }

  double spacing(int axis) const { return lengths[axis] / cells[axis]; }
  std::array<double, 3> spacings() const {
    return {spacing(0), spacing(1), spacing(2)};
  }
  std::size_t node_count() const {
    return static_cast<std::size_t>(cells[0]) * cells[1] * cells[2];
  }
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }

  int wrap(int axis, std::int64_t m) const {
    const std::int64_t n = cells[axis];
    return static_cast<int>(((m % n) + n) % n);
  }
  double coordinate(int axis, std::int64_t m, Parity parity) const {
    const double offset = parity == Parity::dual ? 0.5 : 0.0;
    return (static_cast<double>(wrap(axis, m)) + offset) * spacing(axis);
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Scaled-derivative DOFs over a periodic grid in the layout
/// [m3][m2][m1][n3][n2][n1], n_k in 0..N. Entry [m][n] approximates
/// (h^|n| / n!) D^n u at node m.
template <typename Real>
class DofField {
 public:
  DofField(GridSpec grid, int order_n, Parity parity = Parity::primary)
      : grid_(grid), order_n_(order_n), parity_(parity) {
    check_order(order_n);
    data_.assign(grid_.node_count() * node_block(), Real(0));
  }

  const GridSpec& grid() const { return grid_; }
  int order_n() const { return order_n_; }
  Parity parity() const { return parity_; }
  void set_parity(Parity p) { parity_ = p; }
  static constexpr Precision precision() { return precision_of<Real>(); }

  /// (N+1)^3 DOFs per node.
  std::size_t node_block() const {
    const auto n1 = static_cast<std::size_t>(order_n_ + 1);
    return n1 * n1 * n1;
  }

  std::size_t offset(int m1, int m2, int m3, int n1 = 0, int n2 = 0, int n3 = 0) const {
    const std::size_t p = static_cast<std::size_t>(order_n_ + 1);
    std::size_t off = (static_cast<std::size_t>(m3) * grid_.cells[1] + m2) * grid_.cells[0] + m1;
    off = off * p + static_cast<std::size_t>(n3);
    off = off * p + static_cast<std::size_t>(n2);
    return off * p + static_cast<std::size_t>(n1);
  }

  Real& at(int m1, int m2, int m3, int n1 = 0, int n2 = 0, int n3 = 0) {
    return data_[offset(m1, m2, m3, n1, n2, n3)];
  }
  const Real& at(int m1, int m2, int m3, int n1 = 0, int n2 = 0, int n3 = 0) const {
    return data_[offset(m1, m2, m3, n1, n2, n3)];
  }

  /// DOF block of a node; indices wrap periodically.
  std::span<Real> node(Index3 m) {
    return {data_.data() + offset(grid_.wrap(0, m[0]), grid_.wrap(1, m[1]),
                                  grid_.wrap(2, m[2])),
            node_block()};
  }
  std::span<const Real> node(Index3 m) const {
    return {data_.data() + offset(grid_.wrap(0, m[0]), grid_.wrap(1, m[1]),
                                  grid_.wrap(2, m[2])),
            node_block()};
  }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }

  /// Returns the first node holding a NaN or Inf, if any.
  bool find_non_finite(Index3& where) const {
    const std::size_t block = node_block();
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(data_[i]))) {
        std::size_t n = i / block;
        where[0] = static_cast<std::int64_t>(n % grid_.cells[0]);
        n /= grid_.cells[0];
        where[1] = static_cast<std::int64_t>(n % grid_.cells[1]);
        where[2] = static_cast<std::int64_t>(n / grid_.cells[1]);
        return true;
      }
    }
    return false;
  }

 private:
  GridSpec grid_;
  int order_n_;
  Parity parity_;
  std::vector<Real> data_;
};

/// Copies one vertex DOF block into the concatenated cell layout. Corner a_k
/// selects the low (0) or high (1) vertex along axis k.
template <typename Real, int N>
inline void place_vertex(std::span<const Real> block, int a1, int a2, int a3,
                         CellTensor<Real, N>& u_loc) {
  constexpr int p = N + 1;
  std::size_t src = 0;
  for (int n3 = 0; n3 < p; ++n3)
    for (int n2 = 0; n2 < p; ++n2)
      for (int n1 = 0; n1 < p; ++n1)
        u_loc(a3 * p + n3, a2 * p + n2, a1 * p + n1) = block[src++];
}

/// Gathers the 8 vertex DOF blocks of cell (c1,c2,c3), i.e. the cell spanning
/// nodes c_k..c_k+1 of the field's own grid, in the layout consumed by H:
/// per axis, indices 0..N hold the low vertex and N+1..2N+1 the high vertex.
template <int N, typename Real>
CellTensor<Real, N> gather_cell(const DofField<Real>& field, Index3 cell) {
  if (field.order_n() != N)
    throw std::invalid_argument("gather_cell: field order does not match N");
  CellTensor<Real, N> u_loc;
  for (int a3 = 0; a3 < 2; ++a3)
    for (int a2 = 0; a2 < 2; ++a2)
      for (int a1 = 0; a1 < 2; ++a1)
        place_vertex<Real, N>(
            field.node({cell[0] + a1, cell[1] + a2, cell[2] + a3}), a1, a2, a3, u_loc);
  return u_loc;
}

/// Writes the low-order coefficients (j_k <= N) of a cell polynomial as the
/// DOFs of `node`; higher coefficients are discarded.
template <int N, typename Real>
void scatter_dofs(const CellCoeffs<Real, N>& coeffs, DofField<Real>& field, Index3 node) {
  if (field.order_n() != N)
    throw std::invalid_argument("scatter_dofs: field order does not match N");
  auto dst = field.node(node);
  std::size_t i = 0;
  for (int n3 = 0; n3 <= N; ++n3)
    for (int n2 = 0; n2 <= N; ++n2)
      for (int n1 = 0; n1 <= N; ++n1) dst[i++] = coeffs(n3, n2, n1);
}

}  // namespace hermite

#pragma once

/// Cell-local Hermite kernels: dimension-by-dimension reconstruction of the
/// tensor interpolant and Hermite-Taylor evolution of its coefficients.
///
/// Every kernel works on CellTensor values only, so the pipeline can run them
/// back to back per cell (fused) or as two grid-wide passes.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hermite/cell_tensor.hpp"
#include "hermite/operators.hpp"

namespace hermite {

/// Number of Taylor stages that makes the local evolution exact in 3D.
constexpr int full_stage_count(int order_n) { return 3 * (2 * order_n + 1); }

struct TaylorParams {
  int stages_q = 0;
  double dt = 0.0;  // full time step

  double half_dt() const { return 0.5 * dt; }

  void validate() const {
    if (stages_q < 1) throw std::invalid_argument("stages_q must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  }
};

/// Operators converted to the working precision, fixed per (N, h1, h2, h3).
template <typename Real, int N>
struct KernelOps {
  static constexpr int side = cell_side(N);

  std::array<Real, side * side> interp{};            // H[row][col]
  std::array<Real, side * side> interp_t{};          // H^T, for unit-stride sweeps
  std::array<std::array<Real, side>, 3> deriv{};     // superdiagonal of D per axis
  // deriv[a][j_a] expanded over the whole cell, one table per axis
  std::array<std::array<Real, side * side * side>, 3> deriv_table{};
  std::array<double, 3> spacings{};

  KernelOps(const InterpOperator& h, const std::array<DerivOperator, 3>& d) {
    if (h.order_n() != N)
      throw std::invalid_argument("interpolation operator order does not match N");
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        interp[r * side + c] = Real(h(r, c));
        interp_t[c * side + r] = Real(h(r, c));
      }
    for (int a = 0; a < 3; ++a) {
      if (d[a].order_n() != N)
        throw std::invalid_argument("derivative operator order does not match N");
      spacings[a] = d[a].spacing();
      for (int i = 0; i < side; ++i) deriv[a][i] = Real(d[a].factor(i));
    }
    for (int j3 = 0; j3 < side; ++j3)
      for (int j2 = 0; j2 < side; ++j2)
        for (int j1 = 0; j1 < side; ++j1) {
          const int idx = (j3 * side + j2) * side + j1;
          deriv_table[0][idx] = deriv[0][j1];
          deriv_table[1][idx] = deriv[1][j2];
          deriv_table[2][idx] = deriv[2][j3];
        }
  }

  static KernelOps build(std::array<double, 3> h) {
    return KernelOps(build_interp_operator(N),
                     {build_deriv_operator(N, h[0]), build_deriv_operator(N, h[1]),
                      build_deriv_operator(N, h[2])});
  }
};

namespace detail {

// One reconstruction sweep. Each output entry is 0 + sum_k H[i][k] in[k]
// accumulated with mul_add in ascending k, the same sequence
// apply_along_axis performs.
template <int Axis, typename Real, int N>
void interp_sweep(const KernelOps<Real, N>& ops, const CellTensor<Real, N>& in,
                  CellTensor<Real, N>& out) {
  constexpr int s = cell_side(N);
  if constexpr (Axis == 1) {
    for (int line = 0; line < s * s; ++line) {
      const int base = line * s;
      std::array<Real, s> acc{};
      for (int x = 0; x < s; ++x) acc[x] = Real(0);
      for (int k = 0; k < s; ++k) {
        const Real u = in[base + k];
        for (int x = 0; x < s; ++x) acc[x] = mul_add(ops.interp_t[k * s + x], u, acc[x]);
      }
      for (int x = 0; x < s; ++x) out[base + x] = acc[x];
    }
  } else if constexpr (Axis == 2) {
    for (int t3 = 0; t3 < s; ++t3)
      for (int y = 0; y < s; ++y) {
        std::array<Real, s> acc{};
        for (int x = 0; x < s; ++x) acc[x] = Real(0);
        for (int k = 0; k < s; ++k) {
          const Real h = ops.interp[y * s + k];
          const int src = (t3 * s + k) * s;
          for (int x = 0; x < s; ++x) acc[x] = mul_add(h, in[src + x], acc[x]);
        }
        const int dst = (t3 * s + y) * s;
        for (int x = 0; x < s; ++x) out[dst + x] = acc[x];
      }
  } else {
    static_assert(Axis == 3);
    for (int z = 0; z < s; ++z) {
      std::array<Real, s * s> acc{};
      for (int p = 0; p < s * s; ++p) acc[p] = Real(0);
      for (int k = 0; k < s; ++k) {
        const Real h = ops.interp[z * s + k];
        const int src = k * s * s;
        for (int p = 0; p < s * s; ++p) acc[p] = mul_add(h, in[src + p], acc[p]);
      }
      for (int p = 0; p < s * s; ++p) out[z * s * s + p] = acc[p];
    }
  }
}

}  // namespace detail

/// Coefficients of the degree-(2N+1) tensor interpolant of a gathered cell.
/// Sweeps run in the order x1, x2, x3.
template <typename Real, int N>
CellCoeffs<Real, N> reconstruct_cell(const KernelOps<Real, N>& ops,
                                     const CellTensor<Real, N>& u_loc) {
  CellTensor<Real, N> a;
  CellTensor<Real, N> b;
  detail::interp_sweep<1>(ops, u_loc, a);
  detail::interp_sweep<2>(ops, a, b);
  detail::interp_sweep<3>(ops, b, a);
  return a;
}

namespace detail {

// Cell tensor followed by s*s zeros, so that the neighbour reads idx+1,
// idx+s and idx+s*s stay in bounds for every entry.
template <typename Real, int N>
using PaddedCell = std::array<Real, cell_side(N) * cell_side(N) * (cell_side(N) + 1)>;

// out = D_x1 w + D_x2 w + D_x3 w over a padded w. Rows past the end of a
// line read a neighbouring (or padding) entry with a zero factor.
template <typename Real, int N>
inline void derivative_sum(const KernelOps<Real, N>& ops, const PaddedCell<Real, N>& w,
                           std::array<Real, CellTensor<Real, N>::volume>& out) {
  constexpr int s = cell_side(N);
  constexpr int vol = s * s * s;
  const auto& f1 = ops.deriv_table[0];
  const auto& f2 = ops.deriv_table[1];
  const auto& f3 = ops.deriv_table[2];
  for (int i = 0; i < vol; ++i) {
    Real acc = Real(0);
    acc += f1[i] * w[i + 1];
    acc += f2[i] * w[i + s];
    acc += f3[i] * w[i + s * s];
    out[i] = acc;
  }
}

}  // namespace detail

/// D_x1 w + D_x2 w + D_x3 w. Each axis contributes one multiply-add per
/// entry; the last row of D carries a zero factor so the loop has no branch
/// on the coefficient values.
template <typename Real, int N>
void advect_time_derivative(const KernelOps<Real, N>& ops, const CellTensor<Real, N>& w,
                            CellTensor<Real, N>& out) {
  detail::PaddedCell<Real, N> padded{};
  std::copy(w.data.begin(), w.data.end(), padded.begin());
  detail::derivative_sum(ops, padded, out.data);
}

template <typename Real, int N>
CellTensor<Real, N> advect_time_derivative(const KernelOps<Real, N>& ops,
                                           const CellTensor<Real, N>& w) {
  CellTensor<Real, N> out;
  advect_time_derivative(ops, w, out);
  return out;
}

/// Advances a cell polynomial by `step` with the nested Taylor form
///   w <- b + (step / k) L w,  k = q .. 1,
/// which evaluates sum_{s<=q} step^s / s! L^s b. With q >= 3(2N+1) the result
/// is the exact translate of the local polynomial since L is nilpotent.
template <typename Real, int N>
CellCoeffs<Real, N> taylor_evolve_horner(const CellCoeffs<Real, N>& coeffs,
                                         const KernelOps<Real, N>& ops,
                                         const TaylorParams& params, double step) {
  if (params.stages_q < 1) throw std::invalid_argument("stages_q must be >= 1");
  constexpr int vol = CellTensor<Real, N>::volume;
  detail::PaddedCell<Real, N> w{};
  std::copy(coeffs.data.begin(), coeffs.data.end(), w.begin());
  std::array<Real, vol> lw;
  for (int k = params.stages_q; k >= 1; --k) {
    const Real scale = Real(step) / Real(k);
    detail::derivative_sum(ops, w, lw);
    for (int i = 0; i < vol; ++i) w[i] = coeffs[i] + scale * lw[i];
  }
  CellCoeffs<Real, N> out;
  std::copy(w.begin(), w.begin() + vol, out.data.begin());
  return out;
}

/// Space-time coefficients b_{j,s}, s = 0..q, from the Cauchy-Kowalewski
/// recursion for u_t = u_x1 + u_x2 + u_x3 with time scaled by the full step:
///   b_{j,s+1} = sum_a (j_a + 1)/(s + 1) * dt/h_a * b_{j+e_a,s}.
/// Built directly from the grid spacings, independent of KernelOps::deriv.
template <typename Real, int N>
std::vector<CellTensor<Real, N>> space_time_coefficients(const CellCoeffs<Real, N>& coeffs,
                                                         std::array<double, 3> spacings,
                                                         const TaylorParams& params) {
  params.validate();
  constexpr int s = cell_side(N);
  std::vector<CellTensor<Real, N>> b(static_cast<std::size_t>(params.stages_q) + 1);
  b[0] = coeffs;
  for (int st = 0; st < params.stages_q; ++st) {
    const auto& cur = b[static_cast<std::size_t>(st)];
    auto& next = b[static_cast<std::size_t>(st) + 1];
    for (int j3 = 0; j3 < s; ++j3)
      for (int j2 = 0; j2 < s; ++j2)
        for (int j1 = 0; j1 < s; ++j1) {
          Real v = Real(0);
          if (j1 + 1 < s)
            v += Real((j1 + 1) * params.dt / (spacings[0] * (st + 1))) * cur(j3, j2, j1 + 1);
          if (j2 + 1 < s)
            v += Real((j2 + 1) * params.dt / (spacings[1] * (st + 1))) * cur(j3, j2 + 1, j1);
          if (j3 + 1 < s)
            v += Real((j3 + 1) * params.dt / (spacings[2] * (st + 1))) * cur(j3 + 1, j2, j1);
          next(j3, j2, j1) = v;
        }
  }
  return b;
}

/// Evaluates the space-time polynomial at normalized time tau = (t - t_n)/dt.
template <typename Real, int N>
CellCoeffs<Real, N> taylor_evolve_recursion(const CellCoeffs<Real, N>& coeffs,
                                            const KernelOps<Real, N>& ops,
                                            const TaylorParams& params, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in (0, 1]");
  const auto b = space_time_coefficients(coeffs, ops.spacings, params);
  CellCoeffs<Real, N> out = b[0];
  Real tau_pow = Real(1);
  for (std::size_t st = 1; st < b.size(); ++st) {
    tau_pow *= Real(tau);
    for (int i = 0; i < CellTensor<Real, N>::volume; ++i) out[i] += b[st][i] * tau_pow;
  }
  return out;
}

/// Max |coefficient| of dt * (d/dt - sum_a d/dx_a) applied to the space-time
/// polynomial, obtained by differentiating each monomial term separately.
/// Zero up to rounding when the coefficients satisfy the advection equation.
template <typename Real, int N>
double verify_space_time_identity(const CellCoeffs<Real, N>& coeffs,
                                  const KernelOps<Real, N>& ops,
                                  const TaylorParams& params) {
  constexpr int s = cell_side(N);
  const auto b = space_time_coefficients(coeffs, ops.spacings, params);
  const int q = params.stages_q;
  const double dt = params.dt;

  // time derivative: tau^(st+1) -> (st+1)/dt tau^st
  // space derivative: z_a^(j+1) -> (j+1)/h_a z_a^j
  double worst = 0.0;
  for (int st = 0; st <= q; ++st)
    for (int j3 = 0; j3 < s; ++j3)
      for (int j2 = 0; j2 < s; ++j2)
        for (int j1 = 0; j1 < s; ++j1) {
          Real dtime = Real(0);
          if (st + 1 <= q)
            dtime = Real(st + 1) * b[static_cast<std::size_t>(st) + 1](j3, j2, j1);
          const auto& cur = b[static_cast<std::size_t>(st)];
          Real dspace = Real(0);
          if (j1 + 1 < s) dspace += Real((j1 + 1) * dt / ops.spacings[0]) * cur(j3, j2, j1 + 1);
          if (j2 + 1 < s) dspace += Real((j2 + 1) * dt / ops.spacings[1]) * cur(j3, j2 + 1, j1);
          if (j3 + 1 < s) dspace += Real((j3 + 1) * dt / ops.spacings[2]) * cur(j3 + 1, j2, j1);
          worst = std::max(worst, std::fabs(static_cast<double>(dtime - dspace)));
        }
  return worst;
}

}  // namespace hermite

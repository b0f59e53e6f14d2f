#pragma once

/// Time stepping over the periodic grid.
///
/// A half step evolves every cell of the source grid to its midpoint, which
/// is a node of the opposite (staggered) grid: gather the 8 vertex blocks,
/// reconstruct the tensor interpolant, advance it by dt/2 with the Taylor
/// kernel, and keep the low-order coefficients as the new DOFs. A full step
/// is primary -> dual -> primary.
///
/// Two execution modes produce the same numbers:
///  - two_pass: reconstruct every cell into a grid-wide coefficient field,
///    then evolve every cell from it;
///  - fused: reconstruct and evolve each cell back to back, no coefficient
///    field.
/// Work is split into tiles of consecutive cells along x1. Within a tile the
/// vertex blocks shared by neighbouring cells are read from the field once.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hermite/alloc_stats.hpp"
#include "hermite/field.hpp"
#include "hermite/kernels.hpp"
#include "hermite/parallel.hpp"

namespace hermite {

enum class Mode { two_pass, fused };

inline std::string_view to_string(Mode m) { return m == Mode::fused ? "fused" : "two_pass"; }
inline Mode parse_mode(std::string_view s) {
  if (s == "fused") return Mode::fused;
  if (s == "two_pass") return Mode::two_pass;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

/// Cells-per-tile defaults taken from the best-performing GPU block sizes
/// (reconstruction kernel for two_pass, monolithic kernel for fused). They
/// are a starting point, not tuned for CPUs.
constexpr int default_tile_x1(Mode mode, int order_n) {
  constexpr int two_pass[] = {16, 16, 10, 4, 2};
  constexpr int fused[] = {12, 12, 10, 2, 2};
  const int n = order_n < 0 ? 0 : order_n > 4 ? 4 : order_n;
  return mode == Mode::fused ? fused[n] : two_pass[n];
}

struct StepConfig {
  Mode mode = Mode::fused;
  int tile_x1 = 0;    // 0 selects default_tile_x1 clamped to M1
  double cfl = 0.9;
  int stages_q = 0;   // 0 selects 3(2N+1)
  Precision precision = Precision::double_;
  int threads = 1;
  bool deterministic = false;
};

/// dt = cfl * min_k h_k for unit advection speed along every axis. At cfl = 1
/// a wave moves exactly h/2 in the half step, from a cell face to its center.
inline double select_dt(const GridSpec& grid, double cfl) {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
  const auto h = grid.spacings();
  return cfl * std::min({h[0], h[1], h[2]});
}

struct StepPlan {
  int steps = 0;
  double dt = 0.0;
};

/// Smallest step count reaching final_time exactly with dt <= select_dt.
inline StepPlan plan_steps(const GridSpec& grid, double cfl, double final_time) {
  if (!(final_time > 0.0)) throw std::invalid_argument("final_time must be positive");
  const double dt_max = select_dt(grid, cfl);
  const int steps = static_cast<int>(std::ceil(final_time / dt_max * (1.0 - 1e-12)));
  return {std::max(steps, 1), final_time / std::max(steps, 1)};
}

struct Tile {
  int x1_begin = 0;
  int count = 0;
  int m2 = 0;
  int m3 = 0;
};

/// Tiles of tile_x1 consecutive cells along x1 (last tile of a line may be
/// shorter), ordered line by line with x1 fastest.
inline std::vector<Tile> tile_schedule(const GridSpec& grid, int tile_x1) {
  if (tile_x1 < 1 || tile_x1 > grid.cells[0])
    throw std::invalid_argument("tile_x1 must lie in [1, M1]");
  std::vector<Tile> tiles;
  const int per_line = (grid.cells[0] + tile_x1 - 1) / tile_x1;
  tiles.reserve(static_cast<std::size_t>(per_line) * grid.cells[1] * grid.cells[2]);
  for (int m3 = 0; m3 < grid.cells[2]; ++m3)
    for (int m2 = 0; m2 < grid.cells[1]; ++m2)
      for (int b = 0; b < grid.cells[0]; b += tile_x1)
        tiles.push_back({b, std::min(tile_x1, grid.cells[0] - b), m2, m3});
  return tiles;
}

/// Vertex DOF values read from the source field by one half step: a tile of
/// T cells touches 4(T+1) vertices.
inline std::size_t gathered_values(const GridSpec& grid, int tile_x1, int order_n) {
  if (tile_x1 < 1 || tile_x1 > grid.cells[0])
    throw std::invalid_argument("tile_x1 must lie in [1, M1]");
  const std::size_t per_line = static_cast<std::size_t>((grid.cells[0] + tile_x1 - 1) / tile_x1);
  const std::size_t block = static_cast<std::size_t>((order_n + 1) * (order_n + 1) * (order_n + 1));
  return 4 * (static_cast<std::size_t>(grid.cells[0]) + per_line) * grid.cells[1] *
         grid.cells[2] * block;
}

/// Per-cell gather traffic of a tile of T cells in isolation:
/// 4(T+1)/T vertex blocks of (N+1)^3 words.
inline double gather_bytes_per_cell(int tile_x1, int order_n, std::size_t word_size) {
  if (tile_x1 < 1) throw std::invalid_argument("tile_x1 must be positive");
  const double block = std::pow(order_n + 1, 3);
  return 4.0 * (tile_x1 + 1) / tile_x1 * block * static_cast<double>(word_size);
}

class NonFiniteError : public std::runtime_error {
 public:
  explicit NonFiniteError(Index3 node)
      : std::runtime_error("non-finite DOF at node (" + std::to_string(node[0]) + ", " +
                           std::to_string(node[1]) + ", " + std::to_string(node[2]) + ")"),
        node_(node) {}
  Index3 node() const { return node_; }

 private:
  Index3 node_;
};

/// Wall-clock seconds of the passes in the most recent half step.
struct PassTimings {
  double reconstruction = 0.0;
  double evolution = 0.0;
  double monolithic = 0.0;
};

namespace detail {

template <typename Real>
class PipelineBase {
 public:
  virtual ~PipelineBase() = default;
  virtual void half_step(const DofField<Real>& src, DofField<Real>& dst) = 0;
  virtual std::size_t coeff_field_bytes() const = 0;
  virtual bool has_coeff_field() const = 0;
  virtual const PassTimings& timings() const = 0;
};

template <typename Real, int N>
class PipelineImpl final : public PipelineBase<Real> {
  using Cell = CellTensor<Real, N>;
  static constexpr int block = (N + 1) * (N + 1) * (N + 1);
  using Clock = std::chrono::steady_clock;

 public:
  PipelineImpl(const GridSpec& grid, const StepConfig& cfg, const TaylorParams& params)
      : grid_(grid),
        cfg_(cfg),
        params_(params),
        ops_(KernelOps<Real, N>::build(grid.spacings())),
        tiles_(tile_schedule(grid, cfg.tile_x1)) {}

  const PassTimings& timings() const override { return timings_; }

  std::size_t coeff_field_bytes() const override {
    return grid_.node_count() * sizeof(Cell);
  }
  bool has_coeff_field() const override { return !coeffs_.empty(); }

  void half_step(const DofField<Real>& src, DofField<Real>& dst) override {
    ensure_scratch();
    const Index3 shift = src.parity() == Parity::dual ? Index3{1, 1, 1} : Index3{0, 0, 0};
    const double delta = params_.half_dt();
    timings_ = {};

    if (cfg_.mode == Mode::fused) {
      const auto t0 = Clock::now();
      parallel_for(tiles_.size(), cfg_.threads, cfg_.deterministic,
                   [&](std::size_t t, int worker) {
                     const Tile& tile = tiles_[t];
                     auto& buf = scratch_[static_cast<std::size_t>(worker)];
                     gather_tile(src, tile, buf);
                     for (int i = 0; i < tile.count; ++i) {
                       const Cell coeffs = reconstruct_cell(ops_, cell_from_tile(buf, i));
                       const Cell evolved = taylor_evolve_horner(coeffs, ops_, params_, delta);
                       scatter_dofs<N>(evolved, dst, node_of(tile, i, shift));
                     }
                   });
      timings_.monolithic = seconds_since(t0);
    } else {
      if (coeffs_.empty()) coeffs_.resize(grid_.node_count());
      const auto t0 = Clock::now();
      parallel_for(tiles_.size(), cfg_.threads, cfg_.deterministic,
                   [&](std::size_t t, int worker) {
                     const Tile& tile = tiles_[t];
                     auto& buf = scratch_[static_cast<std::size_t>(worker)];
                     gather_tile(src, tile, buf);
                     for (int i = 0; i < tile.count; ++i)
                       coeffs_[cell_index(tile, i)] = reconstruct_cell(ops_, cell_from_tile(buf, i));
                   });
      const auto t1 = Clock::now();
      timings_.reconstruction = std::chrono::duration<double>(t1 - t0).count();
      parallel_for(tiles_.size(), cfg_.threads, cfg_.deterministic,
                   [&](std::size_t t, int) {
                     const Tile& tile = tiles_[t];
                     for (int i = 0; i < tile.count; ++i) {
                       const Cell evolved =
                           taylor_evolve_horner(coeffs_[cell_index(tile, i)], ops_, params_, delta);
                       scatter_dofs<N>(evolved, dst, node_of(tile, i, shift));
                     }
                   });
      timings_.evolution = seconds_since(t1);
    }
  }

 private:
  static double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  }

  void ensure_scratch() {
    const std::size_t workers = static_cast<std::size_t>(std::max(cfg_.threads, 1));
    if (scratch_.size() == workers) return;
    scratch_.clear();
    scratch_.resize(workers);
    for (auto& s : scratch_)
      s.resize(static_cast<std::size_t>(cfg_.tile_x1 + 1) * 4 * block);
  }

  std::size_t cell_index(const Tile& tile, int i) const {
    return (static_cast<std::size_t>(tile.m3) * grid_.cells[1] + tile.m2) * grid_.cells[0] +
           static_cast<std::size_t>(tile.x1_begin + i);
  }

  static Index3 node_of(const Tile& tile, int i, Index3 shift) {
    return {tile.x1_begin + i + shift[0], tile.m2 + shift[1], tile.m3 + shift[2]};
  }

  // buffer layout [v1 = 0..T][a3][a2][block]
  void gather_tile(const DofField<Real>& src, const Tile& tile, TrackedVector<Real>& buf) const {
    std::size_t pos = 0;
    for (int v = 0; v <= tile.count; ++v)
      for (int a3 = 0; a3 < 2; ++a3)
        for (int a2 = 0; a2 < 2; ++a2) {
          const auto node = src.node({tile.x1_begin + v, tile.m2 + a2, tile.m3 + a3});
          std::copy(node.begin(), node.end(), buf.begin() + static_cast<std::ptrdiff_t>(pos));
          pos += block;
        }
  }

  static Cell cell_from_tile(const TrackedVector<Real>& buf, int i) {
    Cell u_loc;
    for (int a3 = 0; a3 < 2; ++a3)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int a1 = 0; a1 < 2; ++a1) {
          const std::size_t at = static_cast<std::size_t>(((i + a1) * 2 + a3) * 2 + a2) * block;
          place_vertex<Real, N>(std::span<const Real>(buf.data() + at, block), a1, a2, a3, u_loc);
        }
    return u_loc;
  }

  GridSpec grid_;
  StepConfig cfg_;
  TaylorParams params_;
  KernelOps<Real, N> ops_;
  std::vector<Tile> tiles_;
  PassTimings timings_;
  std::vector<TrackedVector<Real>> scratch_;
  TrackedVector<Cell> coeffs_;  // two_pass only
};

}  // namespace detail

/// Drives half and full steps for one grid, order and configuration.
template <typename Real>
class Pipeline {
 public:
  Pipeline(const GridSpec& grid, int order_n, StepConfig cfg, double dt)
      : grid_(grid), order_n_(order_n), cfg_(resolve(cfg, grid, order_n)) {
    if (cfg_.precision != precision_of<Real>())
      throw std::invalid_argument("pipeline precision does not match its scalar type");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
    params_ = {cfg_.stages_q, dt};
    impl_ = dispatch_order(order_n, [&](auto n) -> std::unique_ptr<detail::PipelineBase<Real>> {
      return std::make_unique<detail::PipelineImpl<Real, decltype(n)::value>>(grid_, cfg_, params_);
    });
  }

  /// Fills defaults and validates; the result is what the pipeline runs with.
  static StepConfig resolve(StepConfig cfg, const GridSpec& grid, int order_n) {
    check_order(order_n);
    if (cfg.tile_x1 == 0) cfg.tile_x1 = std::min(default_tile_x1(cfg.mode, order_n), grid.cells[0]);
    if (cfg.tile_x1 < 1 || cfg.tile_x1 > grid.cells[0])
      throw std::invalid_argument("tile_x1 must lie in [1, M1]");
    if (cfg.stages_q == 0) cfg.stages_q = full_stage_count(order_n);
    if (cfg.stages_q < 1) throw std::invalid_argument("stages_q must be >= 1");
    if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
    if (cfg.threads < 1) cfg.threads = default_thread_count();
    return cfg;
  }

  const StepConfig& config() const { return cfg_; }
  const TaylorParams& taylor() const { return params_; }
  double dt() const { return params_.dt; }
  int order_n() const { return order_n_; }
  const GridSpec& grid() const { return grid_; }
  const PassTimings& last_timings() const { return impl_->timings(); }

  /// Bytes the two-pass coefficient field occupies (allocated or not).
  std::size_t coeff_field_bytes() const { return impl_->coeff_field_bytes(); }
  bool has_coeff_field() const { return impl_->has_coeff_field(); }

  /// Evolves src (time t) to dst (time t + dt/2) on the opposite grid.
  void half_step(const DofField<Real>& src, DofField<Real>& dst) {
    if (&src == &dst) throw std::invalid_argument("half_step: src and dst must be distinct");
    if (src.parity() == dst.parity())
      throw std::invalid_argument("half_step: src and dst must have opposite parity");
    if (!(src.grid() == grid_) || !(dst.grid() == grid_))
      throw std::invalid_argument("half_step: field grid does not match the pipeline grid");
    if (src.order_n() != order_n_ || dst.order_n() != order_n_)
      throw std::invalid_argument("half_step: field order does not match the pipeline order");
    impl_->half_step(src, dst);
    Index3 bad{};
    if (dst.find_non_finite(bad)) throw NonFiniteError(bad);
  }

  /// Advances a primary-grid state by dt using `scratch` as the dual grid.
  void full_step(DofField<Real>& state, DofField<Real>& scratch) {
    if (state.parity() != Parity::primary)
      throw std::invalid_argument("full_step: state must live on the primary grid");
    half_step(state, scratch);
    half_step(scratch, state);
  }

 private:
  GridSpec grid_;
  int order_n_;
  StepConfig cfg_;
  TaylorParams params_;
  std::unique_ptr<detail::PipelineBase<Real>> impl_;
};

}  // namespace hermite

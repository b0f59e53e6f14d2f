#pragma once

/// Roofline accounting for the Hermite kernels.
///
/// Counts are analytic, per half step:
///   reconstruction  6 (2N+2)^4 flops per cell (three dense sweeps, one
///                   multiply and one add per term)
///   evolution       q * 8 (2N+2)^3 flops per cell (per stage: three
///                   derivative multiply-adds and one axpy per entry)
///   monolithic      the sum of both
/// Bytes are modeled global traffic: tile gathers of vertex blocks, DOF
/// writes, and in two-pass mode the coefficient field written by the
/// reconstruction pass and read back by the evolution pass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hermite/pipeline.hpp"
#include "hermite/problems.hpp"

namespace hermite {

struct DevicePeaks {
  double bandwidth_gbs = 224.0;
  double gflops = 4612.0;
  std::string source = "nominal: GTX 980 theoretical peaks";

  void validate() const {
    if (!(bandwidth_gbs > 0.0) || !(gflops > 0.0))
      throw std::invalid_argument("device peaks must be positive");
  }
};

enum class KernelId { reconstruction, evolution, monolithic };

inline std::string_view to_string(KernelId k) {
  switch (k) {
    case KernelId::reconstruction: return "reconstruction";
    case KernelId::evolution: return "evolution";
    case KernelId::monolithic: return "monolithic";
  }
  return "?";
}

struct ModelCounts {
  double flops = 0.0;
  double bytes = 0.0;
  friend bool operator==(const ModelCounts&, const ModelCounts&) = default;
};

constexpr double reconstruction_flops_per_cell(int order_n) {
  const double s = cell_side(order_n);
  return 6.0 * s * s * s * s;
}

constexpr double evolution_flops_per_cell(int order_n, int stages_q) {
  const double s = cell_side(order_n);
  return stages_q * 8.0 * s * s * s;
}

/// Counts for `cells` cells whose half step reads `gathered` vertex values.
inline ModelCounts model_counts(KernelId kernel, int order_n, std::size_t cells,
                                std::size_t gathered, int stages_q, std::size_t word_size) {
  const double s = cell_side(order_n);
  const double coeff_words = s * s * s;
  const double dof_words = std::pow(order_n + 1, 3);
  const double n = static_cast<double>(cells);
  const double w = static_cast<double>(word_size);
  const double gather_bytes = static_cast<double>(gathered) * w;
  switch (kernel) {
    case KernelId::reconstruction:
      return {n * reconstruction_flops_per_cell(order_n), gather_bytes + n * coeff_words * w};
    case KernelId::evolution:
      return {n * evolution_flops_per_cell(order_n, stages_q), n * (coeff_words + dof_words) * w};
    case KernelId::monolithic:
      return {n * (reconstruction_flops_per_cell(order_n) +
                   evolution_flops_per_cell(order_n, stages_q)),
              gather_bytes + n * dof_words * w};
  }
  throw std::invalid_argument("unknown kernel id");
}

/// Counts for one half step over `grid` under a resolved StepConfig.
inline ModelCounts model_counts(KernelId kernel, int order_n, const GridSpec& grid,
                                const StepConfig& cfg) {
  const std::size_t word = cfg.precision == Precision::single ? sizeof(float) : sizeof(double);
  const int q = cfg.stages_q > 0 ? cfg.stages_q : full_stage_count(order_n);
  const int tile = cfg.tile_x1 > 0 ? cfg.tile_x1 : std::min(default_tile_x1(cfg.mode, order_n), grid.cells[0]);
  return model_counts(kernel, order_n, grid.node_count(), gathered_values(grid, tile, order_n), q,
                      word);
}

/// min(intensity * peak bandwidth, peak flop rate), in GFLOP/s.
inline double roofline_ceiling(double intensity, const DevicePeaks& peaks) {
  if (!(intensity >= 0.0)) throw std::invalid_argument("intensity must be non-negative");
  return std::min(intensity * peaks.bandwidth_gbs, peaks.gflops);
}

struct KernelProfile {
  KernelId kernel = KernelId::monolithic;
  int order_n = 0;
  Mode mode = Mode::fused;
  int tile_x1 = 0;
  double flops = 0.0;
  double bytes = 0.0;
  double seconds = 0.0;
  double gflops = 0.0;
  double gbps = 0.0;
  double intensity = 0.0;
  double ceiling = 0.0;
  double efficiency = 0.0;

  /// Achieved rate above the modeled ceiling; reported, never asserted.
  bool exceeds_ceiling() const { return efficiency > 1.0; }
};

inline KernelProfile make_profile(KernelId kernel, int order_n, Mode mode, int tile_x1,
                                  ModelCounts counts, double seconds, const DevicePeaks& peaks) {
  KernelProfile p;
  p.kernel = kernel;
  p.order_n = order_n;
  p.mode = mode;
  p.tile_x1 = tile_x1;
  p.flops = counts.flops;
  p.bytes = counts.bytes;
  p.seconds = seconds;
  p.intensity = counts.bytes > 0.0 ? counts.flops / counts.bytes : 0.0;
  p.ceiling = roofline_ceiling(p.intensity, peaks);
  if (seconds > 0.0) {
    p.gflops = counts.flops / seconds * 1e-9;
    p.gbps = counts.bytes / seconds * 1e-9;
  }
  p.efficiency = p.ceiling > 0.0 ? p.gflops / p.ceiling : 0.0;
  return p;
}

struct PerfReport {
  DevicePeaks device;
  std::vector<KernelProfile> runs;
  std::vector<std::string> warnings;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

inline constexpr double kTimerResolutionFloor = 1e-3;

/// Times `repetitions` half steps (median) of the configured mode and pairs
/// the measurements with the modeled counts. Two-pass runs yield a
/// reconstruction and an evolution profile, fused runs a monolithic one.
template <typename Real>
std::vector<KernelProfile> profile_run(const StepConfig& cfg_in, const GridSpec& grid, int order_n,
                                       int repetitions, const DevicePeaks& peaks,
                                       const InitialCondition& ic,
                                       std::vector<std::string>* warnings = nullptr) {
  if (repetitions < 3) throw std::invalid_argument("profile_run needs at least 3 repetitions");
  peaks.validate();
  StepConfig cfg = cfg_in;
  cfg.precision = precision_of<Real>();
  Pipeline<Real> pipe(grid, order_n, cfg, select_dt(grid, cfg.cfl));
  const StepConfig& rc = pipe.config();

  const DofField<Real> src = init_field<Real>(ic, grid, order_n, Parity::primary);
  DofField<Real> dst(grid, order_n, Parity::dual);
  std::vector<double> recon, evol, mono;
  for (int r = 0; r < repetitions; ++r) {
    pipe.half_step(src, dst);
    const auto& t = pipe.last_timings();
    recon.push_back(t.reconstruction);
    evol.push_back(t.evolution);
    mono.push_back(t.monolithic);
  }

  std::vector<KernelProfile> out;
  auto add = [&](KernelId k, double seconds) {
    out.push_back(make_profile(k, order_n, rc.mode, rc.tile_x1, model_counts(k, order_n, grid, rc),
                               seconds, peaks));
    if (warnings && seconds < kTimerResolutionFloor) {
      std::ostringstream msg;
      msg << to_string(k) << " kernel (N=" << order_n << ", " << to_string(rc.mode)
          << ") ran in " << seconds << " s, below timer resolution; use a larger grid";
      warnings->push_back(msg.str());
    }
  };
  if (rc.mode == Mode::two_pass) {
    add(KernelId::reconstruction, median(recon));
    add(KernelId::evolution, median(evol));
  } else {
    add(KernelId::monolithic, median(mono));
  }
  return out;
}

inline nlohmann::json to_json(const PerfReport& report) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& p : report.runs)
    runs.push_back({{"kernel", std::string(to_string(p.kernel))},
                    {"N", p.order_n},
                    {"mode", std::string(to_string(p.mode))},
                    {"tile_x1", p.tile_x1},
                    {"flops", p.flops},
                    {"bytes", p.bytes},
                    {"seconds", p.seconds},
                    {"gflops", p.gflops},
                    {"gbps", p.gbps},
                    {"intensity", p.intensity},
                    {"ceiling", p.ceiling},
                    {"efficiency", p.efficiency},
                    {"exceeds_ceiling", p.exceeds_ceiling()}});
  return {{"device",
           {{"bw", report.device.bandwidth_gbs},
            {"flops", report.device.gflops},
            {"source", report.device.source}}},
          {"runs", runs},
          {"warnings", report.warnings}};
}

inline void write_csv(std::ostream& os, const PerfReport& report) {
  os << "kernel,N,mode,tile_x1,flops,bytes,seconds,gflops,gbps,intensity,ceiling,efficiency\n";
  os << std::setprecision(10);
  for (const auto& p : report.runs)
    os << to_string(p.kernel) << ',' << p.order_n << ',' << to_string(p.mode) << ',' << p.tile_x1
       << ',' << p.flops << ',' << p.bytes << ',' << p.seconds << ',' << p.gflops << ','
       << p.gbps << ',' << p.intensity << ',' << p.ceiling << ',' << p.efficiency << '\n';
}

}  // namespace hermite

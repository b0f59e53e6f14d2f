#pragma once

/// Subcommands behind the `hermite` executable. Each returns a process exit
/// status: 0 success, 2 configuration error, 3 numerical instability.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hermite/perf.hpp"
#include "hermite/pipeline.hpp"
#include "hermite/problems.hpp"
#include "hermite/run_config.hpp"
#include "hermite/snapshot.hpp"

namespace hermite {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitUnstable = 3 };

/// A run produced non-finite DOFs during full step `step()`.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(int step, const std::string& what)
      : std::runtime_error("numerical instability at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Command line values that replace entries of the config file.
struct Overrides {
  std::optional<std::string> mode;
  std::optional<int> tile_x1;
  std::optional<int> threads;
  std::optional<bool> deterministic;
  std::optional<std::string> precision;
  std::optional<std::string> out_dir;
};

inline nlohmann::json load_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
}

inline void apply_overrides(nlohmann::json& j, const Overrides& o) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  if (o.mode) j["mode"] = *o.mode;
  if (o.tile_x1) j["tile_x1"] = *o.tile_x1;
  if (o.threads) j["threads"] = *o.threads;
  if (o.deterministic) j["deterministic"] = *o.deterministic;
  if (o.precision) j["precision"] = *o.precision;
  if (o.out_dir) j["out_dir"] = *o.out_dir;
}

namespace detail {

inline std::ofstream open_output(const RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  const auto path = std::filesystem::path(c.out_dir) / name;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

inline StepPlan run_plan(const RunConfig& c, const GridSpec& grid) {
  if (c.final_time) return plan_steps(grid, c.cfl, *c.final_time);
  return {*c.steps, select_dt(grid, c.cfl)};
}

struct Outcome {
  int steps = 0;
  double dt = 0.0;
  double time = 0.0;
  ErrorNorms error;
  double seconds = 0.0;
  std::vector<double> recon, evol, mono;  // per half step
  std::optional<int> failed_step;
  std::string failure;
};

/// Runs the full-step loop. `on_step(step, time, field)` is called after
/// the initial state and after every step.
template <typename Real, typename OnStep, typename OnFinish>
Outcome simulate(const RunConfig& c, const GridSpec& grid, OnStep&& on_step, OnFinish&& on_finish) {
  const InitialCondition ic = build_ic(c);
  const StepPlan plan = run_plan(c, grid);
  Pipeline<Real> pipe(grid, c.order_n, c.step_config(), plan.dt);
  DofField<Real> state = init_field<Real>(ic, grid, c.order_n, Parity::primary);
  DofField<Real> scratch(grid, c.order_n, Parity::dual);

  Outcome out;
  out.dt = plan.dt;
  on_step(0, 0.0, state);
  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 1; s <= plan.steps; ++s) {
    try {
      for (int half = 0; half < 2; ++half) {
        if (half == 0) pipe.half_step(state, scratch);
        else pipe.half_step(scratch, state);
        const auto& t = pipe.last_timings();
        out.recon.push_back(t.reconstruction);
        out.evol.push_back(t.evolution);
        out.mono.push_back(t.monolithic);
      }
    } catch (const NonFiniteError& e) {
      out.failed_step = s;
      out.failure = e.what();
      break;
    }
    out.steps = s;
    on_step(s, s * plan.dt, state);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.time = out.steps * plan.dt;
  if (!out.failed_step) {
    out.error = compute_error(state, exact_solution(ic, out.time, grid.lengths));
    on_finish(state);
  }
  return out;
}

template <typename Real>
Outcome simulate(const RunConfig& c, const GridSpec& grid) {
  return simulate<Real>(c, grid, [](int, double, const DofField<Real>&) {},
                        [](const DofField<Real>&) {});
}

template <typename Fn>
auto with_precision(Precision p, Fn&& fn) {
  if (p == Precision::single) return fn(float{});
  return fn(double{});
}

inline std::vector<KernelProfile> outcome_profiles(const RunConfig& c, const GridSpec& grid,
                                                   const Outcome& o) {
  const StepConfig cfg = Pipeline<double>::resolve(c.step_config(), grid, c.order_n);
  std::vector<KernelProfile> runs;
  auto add = [&](KernelId k, const std::vector<double>& t) {
    runs.push_back(make_profile(k, c.order_n, cfg.mode, cfg.tile_x1,
                                model_counts(k, c.order_n, grid, cfg), median(t), c.device));
  };
  if (cfg.mode == Mode::two_pass) {
    add(KernelId::reconstruction, o.recon);
    add(KernelId::evolution, o.evol);
  } else {
    add(KernelId::monolithic, o.mono);
  }
  return runs;
}

inline void add_resolution_warnings(PerfReport& report) {
  for (const auto& p : report.runs)
    if (p.seconds < kTimerResolutionFloor) {
      std::ostringstream msg;
      msg << to_string(p.kernel) << " kernel (N=" << p.order_n << ", " << to_string(p.mode)
          << ") ran in " << p.seconds << " s, below timer resolution; use a larger grid";
      report.warnings.push_back(msg.str());
    }
}

inline void write_perf(const RunConfig& c, const PerfReport& report) {
  auto js = open_output(c, "perf.json");
  js << to_json(report).dump(2) << '\n';
  auto csv = open_output(c, "perf.csv");
  write_csv(csv, report);
}

inline int unstable(std::ostream& err, int step, const std::string& what) {
  err << "error: " << InstabilityError(step, what).what() << '\n';
  return kExitUnstable;
}

}  // namespace detail

/// Full-step loop with snapshot, error history and perf report in out_dir.
inline int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const RunConfig c = resolve(cfg);
  const GridSpec grid = c.grid();
  const InitialCondition ic = build_ic(c);
  auto csv = detail::open_output(c, "errors.csv");
  csv << "step,time,l_inf,l2\n";
  const int every = c.error_every;
  const StepPlan plan = detail::run_plan(c, grid);

  const auto outcome = detail::with_precision(c.precision, [&](auto tag) {
    using Real = decltype(tag);
    auto on_step = [&](int s, double t, const DofField<Real>& f) {
      const bool last = s == plan.steps;
      if (s == 0 || last || (every > 0 && s % every == 0)) {
        const ErrorNorms e = compute_error(f, exact_solution(ic, t, grid.lengths));
        csv << s << ',' << t << ',' << e.l_inf << ',' << e.l2 << '\n';
      }
    };
    auto on_finish = [&](const DofField<Real>& f) {
      std::filesystem::create_directories(c.out_dir);
      write_snapshot(std::filesystem::path(c.out_dir) / "snapshot", f, plan.steps * plan.dt);
    };
    return detail::simulate<Real>(c, grid, on_step, on_finish);
  });
  if (outcome.failed_step) return detail::unstable(err, *outcome.failed_step, outcome.failure);

  PerfReport report{c.device, detail::outcome_profiles(c, grid, outcome), {}};
  if (outcome.steps > 0) detail::add_resolution_warnings(report);
  detail::write_perf(c, report);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';

  out << std::setprecision(6) << "N=" << c.order_n << " cells=" << grid.cells[0] << 'x'
      << grid.cells[1] << 'x' << grid.cells[2] << " mode=" << to_string(c.mode)
      << " steps=" << outcome.steps << " dt=" << outcome.dt << " t=" << outcome.time
      << " l_inf=" << outcome.error.l_inf << " l2=" << outcome.error.l2
      << " seconds=" << outcome.seconds << '\n';
  return kExitOk;
}

struct ConvergenceRow {
  int cells = 0;
  ErrorNorms error;
  std::optional<double> order;
};

/// Runs every level to final_time; order is log2 of successive L-inf ratios
/// scaled by the refinement factor.
inline std::vector<ConvergenceRow> convergence_study(const RunConfig& cfg, const std::vector<int>& levels) {
  if (levels.size() < 2) throw ConfigError("--levels", "needs at least two grid sizes");
  if (!cfg.final_time) throw ConfigError("final_time", "convergence studies need a fixed final time");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1) throw ConfigError("--levels", "grid sizes must be >= 1");
    if (i > 0 && levels[i] <= levels[i - 1])
      throw ConfigError("--levels", "grid sizes must be strictly increasing");
  }
  std::vector<ConvergenceRow> rows;
  for (int m : levels) {
    RunConfig c = cfg;
    c.cells = {m, m, m};
    c.tile_x1 = cfg.tile_x1 > m ? m : cfg.tile_x1;
    c = resolve(c);
    const auto o = detail::with_precision(c.precision, [&](auto tag) {
      return detail::simulate<decltype(tag)>(c, c.grid());
    });
    if (o.failed_step) throw InstabilityError(*o.failed_step, o.failure);
    ConvergenceRow row{m, o.error, std::nullopt};
    if (!rows.empty()) {
      const auto& prev = rows.back();
      row.order = std::log(prev.error.l_inf / row.error.l_inf) /
                  std::log(static_cast<double>(m) / prev.cells);
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "M,l_inf,l2,order\n" << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.cells << ',' << r.error.l_inf << ',' << r.error.l2 << ',';
    if (r.order) os << *r.order;
    os << '\n';
  }
}

inline int converge_command(const RunConfig& cfg, const std::vector<int>& levels, std::ostream& out,
                            std::ostream& err) {
  validate(cfg);
  std::vector<ConvergenceRow> rows;
  try {
    rows = convergence_study(cfg, levels);
  } catch (const InstabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnstable;
  }
  auto csv = detail::open_output(cfg, "convergence.csv");
  write_convergence_csv(csv, rows);
  write_convergence_csv(out, rows);
  return kExitOk;
}

/// Same grid and step count in both modes: a time-to-solution row per mode
/// (bench.csv) plus kernel profiles of one half step each (perf.json/csv).
inline int bench_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  auto csv = detail::open_output(cfg, "bench.csv");
  csv << "mode,N,cells,steps,seconds,l_inf\n";
  PerfReport report{cfg.device, {}, {}};
  out << "mode,N,cells,steps,seconds,l_inf\n" << std::setprecision(6);
  for (Mode m : {Mode::two_pass, Mode::fused}) {
    RunConfig c = cfg;
    c.mode = m;
    c.tile_x1 = 0;
    c = resolve(c);
    const GridSpec grid = c.grid();
    const auto o = detail::with_precision(c.precision, [&](auto tag) {
      return detail::simulate<decltype(tag)>(c, grid);
    });
    if (o.failed_step) return detail::unstable(err, *o.failed_step, o.failure);
    const std::string cells = std::to_string(grid.cells[0]) + 'x' + std::to_string(grid.cells[1]) +
                              'x' + std::to_string(grid.cells[2]);
    csv << to_string(m) << ',' << c.order_n << ',' << cells << ',' << o.steps << ',' << o.seconds
        << ',' << o.error.l_inf << '\n';
    out << to_string(m) << ',' << c.order_n << ',' << cells << ',' << o.steps << ',' << o.seconds
        << ',' << o.error.l_inf << '\n';
    const auto runs = detail::with_precision(c.precision, [&](auto tag) {
      return profile_run<decltype(tag)>(c.step_config(), grid, c.order_n, c.repetitions, c.device,
                                        build_ic(c), &report.warnings);
    });
    report.runs.insert(report.runs.end(), runs.begin(), runs.end());
  }
  detail::write_perf(cfg, report);
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  return kExitOk;
}

struct AutotuneRow {
  int tile_x1 = 0;
  bool skipped = false;
  double median_seconds = 0.0;
  double bytes_modeled = 0.0;  // per half step, all kernels of the mode
  bool winner = false;
};

/// Modeled global bytes of one half step at the given tile width.
inline double modeled_half_step_bytes(const RunConfig& c, int tile_x1) {
  RunConfig r = c;
  r.tile_x1 = tile_x1;
  const StepConfig cfg = Pipeline<double>::resolve(r.step_config(), r.grid(), r.order_n);
  if (cfg.mode == Mode::fused)
    return model_counts(KernelId::monolithic, c.order_n, r.grid(), cfg).bytes;
  return model_counts(KernelId::reconstruction, c.order_n, r.grid(), cfg).bytes +
         model_counts(KernelId::evolution, c.order_n, r.grid(), cfg).bytes;
}

/// Median-of-repetitions wall time of the configured run per candidate;
/// candidates wider than M1 are skipped. Ties go to the smaller tile.
inline std::vector<AutotuneRow> autotune(const RunConfig& cfg, const std::vector<int>& candidates) {
  if (candidates.size() < 2) throw ConfigError("--tiles", "needs at least two candidates");
  for (int t : candidates)
    if (t < 1) throw ConfigError("--tiles", "candidates must be >= 1");
  std::vector<AutotuneRow> rows;
  std::optional<std::size_t> best;
  for (int t : candidates) {
    AutotuneRow row;
    row.tile_x1 = t;
    if (t > cfg.cells[0]) {
      row.skipped = true;
      rows.push_back(row);
      continue;
    }
    RunConfig c = cfg;
    c.tile_x1 = t;
    c = resolve(c);
    std::vector<double> times;
    for (int r = 0; r < c.repetitions; ++r) {
      const auto o = detail::with_precision(c.precision, [&](auto tag) {
        return detail::simulate<decltype(tag)>(c, c.grid());
      });
      if (o.failed_step) throw InstabilityError(*o.failed_step, o.failure);
      times.push_back(o.seconds);
    }
    row.median_seconds = median(times);
    row.bytes_modeled = modeled_half_step_bytes(c, t);
    rows.push_back(row);
    const std::size_t i = rows.size() - 1;
    if (!best || row.median_seconds < rows[*best].median_seconds ||
        (row.median_seconds == rows[*best].median_seconds && t < rows[*best].tile_x1))
      best = i;
  }
  if (best) rows[*best].winner = true;
  return rows;
}

inline void write_autotune_csv(std::ostream& os, const std::vector<AutotuneRow>& rows) {
  os << "tile_x1,status,median_seconds,bytes_modeled,winner\n" << std::setprecision(10);
  for (const auto& r : rows) {
    if (r.skipped) {
      os << r.tile_x1 << ",skipped: exceeds M1,,,\n";
      continue;
    }
    os << r.tile_x1 << ",ok," << r.median_seconds << ',' << r.bytes_modeled << ','
       << (r.winner ? "winner" : "") << '\n';
  }
}

inline int autotune_command(const RunConfig& cfg, const std::vector<int>& candidates,
                            std::ostream& out, std::ostream& err) {
  validate(cfg);
  std::vector<AutotuneRow> rows;
  try {
    rows = autotune(cfg, candidates);
  } catch (const InstabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUnstable;
  }
  auto csv = detail::open_output(cfg, "autotune.csv");
  write_autotune_csv(csv, rows);
  write_autotune_csv(out, rows);
  const auto it = std::find_if(rows.begin(), rows.end(), [](const AutotuneRow& r) { return r.winner; });
  if (it == rows.end()) {
    err << "error: every tile candidate exceeds M1 = " << cfg.cells[0] << '\n';
    return kExitConfig;
  }
  out << "best tile_x1 = " << it->tile_x1 << '\n';
  return kExitOk;
}

}  // namespace hermite

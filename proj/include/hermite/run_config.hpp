#pragma once

/// JSON run configuration for the command line front end.
///
/// Example:
///   {
///     "order_n": 2,
///     "cells": [16, 16, 16],
///     "final_time": 0.25,
///     "mode": "fused",
///     "ic": [{"type": "plane_wave", "amplitude": 1.0, "wavenumber": [1, 1, 1]}]
///   }

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hermite/perf.hpp"
#include "hermite/pipeline.hpp"
#include "hermite/problems.hpp"

namespace hermite {

/// Invalid configuration; key() names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// One entry of the "ic" list. Which fields matter depends on `type`:
/// plane_wave (amplitude, wavenumber, phase), constant (value),
/// separable (weight, factors), random_modes (modes, max_wavenumber; uses seed).
struct IcTerm {
  std::string type = "plane_wave";
  double amplitude = 1.0;
  std::array<int, 3> wavenumber{1, 1, 1};
  double phase = 0.0;
  double value = 0.0;
  double weight = 1.0;
  std::array<AxisFactor, 3> factors{};
  int modes = 0;
  int max_wavenumber = 0;

  friend bool operator==(const IcTerm&, const IcTerm&) = default;
};

struct RunConfig {
  int order_n = 1;
  std::array<int, 3> cells{8, 8, 8};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  double cfl = 0.9;
  int stages_q = 0;
  std::optional<int> steps;
  std::optional<double> final_time;
  Mode mode = Mode::fused;
  int tile_x1 = 0;
  Precision precision = Precision::double_;
  int threads = 0;
  bool deterministic = false;
  std::vector<IcTerm> ic{IcTerm{}};
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int error_every = 0;
  int repetitions = 3;
  DevicePeaks device{};

  GridSpec grid() const { return GridSpec(cells, lengths); }

  StepConfig step_config() const {
    StepConfig c;
    c.mode = mode;
    c.tile_x1 = tile_x1;
    c.cfl = cfl;
    c.stages_q = stages_q;
    c.precision = precision;
    c.threads = threads;
    c.deterministic = deterministic;
    return c;
  }

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.order_n == b.order_n && a.cells == b.cells && a.lengths == b.lengths &&
           a.cfl == b.cfl && a.stages_q == b.stages_q && a.steps == b.steps &&
           a.final_time == b.final_time && a.mode == b.mode && a.tile_x1 == b.tile_x1 &&
           a.precision == b.precision && a.threads == b.threads &&
           a.deterministic == b.deterministic && a.ic == b.ic && a.seed == b.seed &&
           a.out_dir == b.out_dir && a.error_every == b.error_every &&
           a.repetitions == b.repetitions && a.device.bandwidth_gbs == b.device.bandwidth_gbs &&
           a.device.gflops == b.device.gflops && a.device.source == b.device.source;
  }
};

namespace detail {

template <typename T>
T get_key(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, std::string("expected ") + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                           const std::string& prefix) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw ConfigError(prefix + item.key(), "unknown key");
}

inline AxisFactor factor_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  reject_unknown(j, {"kind", "amplitude", "wavenumber", "phase", "value", "degree", "center"},
                 path + ".");
  const auto kind = j.contains("kind") ? get_key<std::string>(j, "kind", path + ".kind") : "";
  if (kind == "fourier")
    return AxisFactor::fourier_mode(j.value("amplitude", 1.0), j.value("wavenumber", 0),
                                    j.value("phase", 0.0));
  if (kind == "constant") return AxisFactor::constant(j.value("value", 1.0));
  if (kind == "monomial") {
    const int degree = j.value("degree", 0);
    if (degree < 0) throw ConfigError(path + ".degree", "must be non-negative");
    return AxisFactor::monomial(degree, j.value("center", 0.0));
  }
  throw ConfigError(path + ".kind", "expected fourier, constant or monomial");
}

inline nlohmann::json factor_to_json(const AxisFactor& f) {
  switch (f.kind) {
    case AxisFactor::Kind::fourier:
      return {{"kind", "fourier"}, {"amplitude", f.amplitude}, {"wavenumber", f.wavenumber},
              {"phase", f.phase}};
    case AxisFactor::Kind::constant:
      return {{"kind", "constant"}, {"value", f.value}};
    case AxisFactor::Kind::monomial:
      return {{"kind", "monomial"}, {"degree", f.degree}, {"center", f.center}};
  }
  return {};
}

inline IcTerm ic_term_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  IcTerm t;
  t.type = j.contains("type") ? get_key<std::string>(j, "type", path + ".type") : "";
  if (t.type == "plane_wave") {
    reject_unknown(j, {"type", "amplitude", "wavenumber", "phase"}, path + ".");
    if (j.contains("amplitude")) t.amplitude = get_key<double>(j, "amplitude", path + ".amplitude");
    if (j.contains("wavenumber"))
      t.wavenumber = get_key<std::array<int, 3>>(j, "wavenumber", path + ".wavenumber");
    if (j.contains("phase")) t.phase = get_key<double>(j, "phase", path + ".phase");
  } else if (t.type == "constant") {
    reject_unknown(j, {"type", "value"}, path + ".");
    t.value = get_key<double>(j, "value", path + ".value");
  } else if (t.type == "separable") {
    reject_unknown(j, {"type", "weight", "factors"}, path + ".");
    if (j.contains("weight")) t.weight = get_key<double>(j, "weight", path + ".weight");
    const auto& f = j.contains("factors") ? j.at("factors") : nlohmann::json();
    if (!f.is_array() || f.size() != 3)
      throw ConfigError(path + ".factors", "expected an array of 3 axis factors");
    for (int a = 0; a < 3; ++a)
      t.factors[static_cast<std::size_t>(a)] =
          factor_from_json(f[static_cast<std::size_t>(a)], path + ".factors[" + std::to_string(a) + "]");
  } else if (t.type == "random_modes") {
    reject_unknown(j, {"type", "modes", "max_wavenumber"}, path + ".");
    t.modes = get_key<int>(j, "modes", path + ".modes");
    t.max_wavenumber = j.contains("max_wavenumber")
                           ? get_key<int>(j, "max_wavenumber", path + ".max_wavenumber")
                           : 2;
    if (t.modes < 1) throw ConfigError(path + ".modes", "must be >= 1");
    if (t.max_wavenumber < 0) throw ConfigError(path + ".max_wavenumber", "must be >= 0");
  } else {
    throw ConfigError(path + ".type",
                      "expected plane_wave, constant, separable or random_modes");
  }
  return t;
}

inline nlohmann::json ic_term_to_json(const IcTerm& t) {
  if (t.type == "plane_wave")
    return {{"type", t.type}, {"amplitude", t.amplitude}, {"wavenumber", t.wavenumber},
            {"phase", t.phase}};
  if (t.type == "constant") return {{"type", t.type}, {"value", t.value}};
  if (t.type == "separable")
    return {{"type", t.type},
            {"weight", t.weight},
            {"factors",
             {factor_to_json(t.factors[0]), factor_to_json(t.factors[1]),
              factor_to_json(t.factors[2])}}};
  return {{"type", t.type}, {"modes", t.modes}, {"max_wavenumber", t.max_wavenumber}};
}

}  // namespace detail

/// Checks cross-field constraints. Runs before anything is allocated.
inline void validate(const RunConfig& c) {
  if (c.order_n < 0 || c.order_n > kMaxOrder)
    throw ConfigError("order_n", "must lie in [0, " + std::to_string(kMaxOrder) + "]");
  for (int k = 0; k < 3; ++k) {
    if (c.cells[k] < 1) throw ConfigError("cells", "every entry must be >= 1");
    if (!(c.lengths[k] > 0.0)) throw ConfigError("lengths", "every entry must be positive");
  }
  if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw ConfigError("cfl", "must lie in (0, 1]");
  if (c.stages_q < 0) throw ConfigError("stages_q", "must be >= 1 (or 0 for 3(2N+1))");
  if (!c.steps && !c.final_time) throw ConfigError("steps", "one of steps or final_time is required");
  if (c.steps && c.final_time) throw ConfigError("steps", "give either steps or final_time, not both");
  if (c.steps && *c.steps < 0) throw ConfigError("steps", "must be >= 0");
  if (c.final_time && !(*c.final_time > 0.0)) throw ConfigError("final_time", "must be positive");
  if (c.tile_x1 < 0 || c.tile_x1 > c.cells[0]) throw ConfigError("tile_x1", "must lie in [1, M1]");
  if (c.threads < 0) throw ConfigError("threads", "must be >= 0");
  if (c.ic.empty()) throw ConfigError("ic", "needs at least one term");
  if (c.error_every < 0) throw ConfigError("error_every", "must be >= 0");
  if (c.repetitions < 3) throw ConfigError("repetitions", "must be >= 3");
  if (!(c.device.bandwidth_gbs > 0.0)) throw ConfigError("device.bw", "must be positive");
  if (!(c.device.gflops > 0.0)) throw ConfigError("device.flops", "must be positive");
  const bool multi_cell = c.cells[0] > 1 || c.cells[1] > 1 || c.cells[2] > 1;
  for (std::size_t i = 0; i < c.ic.size(); ++i)
    if (c.ic[i].type == "separable" && multi_cell)
      for (const auto& f : c.ic[i].factors)
        if (!f.periodic())
          throw ConfigError("ic[" + std::to_string(i) + "]",
                            "monomial factors are only valid on a single-cell grid");
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  detail::reject_unknown(j,
                         {"order_n", "cells", "lengths", "cfl", "stages_q", "steps", "final_time",
                          "mode", "tile_x1", "precision", "threads", "deterministic", "ic", "seed",
                          "out_dir", "error_every", "repetitions", "device"},
                         "");
  using detail::get_key;
  RunConfig c;
  if (!j.contains("order_n")) throw ConfigError("order_n", "missing required key");
  c.order_n = get_key<int>(j, "order_n", "order_n");
  if (!j.contains("cells")) throw ConfigError("cells", "missing required key");
  if (j.at("cells").is_number_integer()) {
    const int m = get_key<int>(j, "cells", "cells");
    c.cells = {m, m, m};
  } else {
    c.cells = get_key<std::array<int, 3>>(j, "cells", "cells");
  }
  if (j.contains("lengths")) c.lengths = get_key<std::array<double, 3>>(j, "lengths", "lengths");
  if (j.contains("cfl")) c.cfl = get_key<double>(j, "cfl", "cfl");
  if (j.contains("stages_q")) c.stages_q = get_key<int>(j, "stages_q", "stages_q");
  if (j.contains("steps")) c.steps = get_key<int>(j, "steps", "steps");
  if (j.contains("final_time")) c.final_time = get_key<double>(j, "final_time", "final_time");
  try {
    if (j.contains("mode")) c.mode = parse_mode(get_key<std::string>(j, "mode", "mode"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("mode", e.what());
  }
  if (j.contains("tile_x1")) c.tile_x1 = get_key<int>(j, "tile_x1", "tile_x1");
  try {
    if (j.contains("precision"))
      c.precision = parse_precision(get_key<std::string>(j, "precision", "precision"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("precision", e.what());
  }
  if (j.contains("threads")) c.threads = get_key<int>(j, "threads", "threads");
  if (j.contains("deterministic")) c.deterministic = get_key<bool>(j, "deterministic", "deterministic");
  if (j.contains("ic")) {
    const auto& ic = j.at("ic");
    if (!ic.is_array()) throw ConfigError("ic", "expected an array of terms");
    c.ic.clear();
    for (std::size_t i = 0; i < ic.size(); ++i)
      c.ic.push_back(detail::ic_term_from_json(ic[i], "ic[" + std::to_string(i) + "]"));
  }
  if (j.contains("seed")) c.seed = get_key<std::uint64_t>(j, "seed", "seed");
  if (j.contains("out_dir")) c.out_dir = get_key<std::string>(j, "out_dir", "out_dir");
  if (j.contains("error_every")) c.error_every = get_key<int>(j, "error_every", "error_every");
  if (j.contains("repetitions")) c.repetitions = get_key<int>(j, "repetitions", "repetitions");
  if (j.contains("device")) {
    const auto& d = j.at("device");
    if (!d.is_object()) throw ConfigError("device", "expected an object");
    detail::reject_unknown(d, {"bw", "flops", "source"}, "device.");
    if (d.contains("bw")) c.device.bandwidth_gbs = get_key<double>(d, "bw", "device.bw");
    if (d.contains("flops")) c.device.gflops = get_key<double>(d, "flops", "device.flops");
    if (d.contains("source")) c.device.source = get_key<std::string>(d, "source", "device.source");
  }
  validate(c);
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json ic = nlohmann::json::array();
  for (const auto& t : c.ic) ic.push_back(detail::ic_term_to_json(t));
  nlohmann::json j = {{"order_n", c.order_n},
                      {"cells", c.cells},
                      {"lengths", c.lengths},
                      {"cfl", c.cfl},
                      {"stages_q", c.stages_q},
                      {"mode", std::string(to_string(c.mode))},
                      {"tile_x1", c.tile_x1},
                      {"precision", std::string(to_string(c.precision))},
                      {"threads", c.threads},
                      {"deterministic", c.deterministic},
                      {"ic", ic},
                      {"seed", c.seed},
                      {"out_dir", c.out_dir},
                      {"error_every", c.error_every},
                      {"repetitions", c.repetitions},
                      {"device",
                       {{"bw", c.device.bandwidth_gbs},
                        {"flops", c.device.gflops},
                        {"source", c.device.source}}}};
  if (c.steps) j["steps"] = *c.steps;
  if (c.final_time) j["final_time"] = *c.final_time;
  return j;
}

/// Fills every default the run would otherwise pick implicitly.
inline RunConfig resolve(RunConfig c) {
  validate(c);
  if (c.stages_q == 0) c.stages_q = full_stage_count(c.order_n);
  if (c.tile_x1 == 0) c.tile_x1 = std::min(default_tile_x1(c.mode, c.order_n), c.cells[0]);
  if (c.threads == 0) c.threads = default_thread_count();
  return c;
}

inline InitialCondition build_ic(const RunConfig& c) {
  InitialCondition ic;
  std::uint64_t stream = 0;
  for (const auto& t : c.ic) {
    InitialCondition part;
    if (t.type == "plane_wave") {
      part = plane_wave(t.amplitude, t.wavenumber, t.phase);
    } else if (t.type == "constant") {
      part = constant_ic(t.value);
    } else if (t.type == "separable") {
      part.terms = {SeparableTerm{t.weight, t.factors}};
    } else {
      part = random_fourier_ic(c.seed + stream++, t.modes, t.max_wavenumber);
    }
    ic.terms.insert(ic.terms.end(), part.terms.begin(), part.terms.end());
  }
  return ic;
}

}  // namespace hermite

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hermite/app.hpp"

using namespace hermite;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hermite_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

json base_config(const fs::path& out) {
  return {{"order_n", 1},
          {"cells", {6, 6, 6}},
          {"steps", 4},
          {"threads", 1},
          {"ic", {{{"type", "plane_wave"}}}},
          {"out_dir", out.string()}};
}

std::string config_error_key(const json& j) {
  try {
    parse_run_config(j);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

// Runs the CLI binary; returns its exit status, stdout+stderr in `output`.
int run_binary(const std::string& args, const fs::path& dir, std::string* output = nullptr) {
  const auto log = dir / "cli.log";
  const std::string cmd = std::string(HERMITE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = slurp(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_json(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST(RunConfigParse, ErrorsNameTheOffendingKey) {
  const auto dir = scratch_dir("keys");
  json j = base_config(dir);
  j.erase("order_n");
  EXPECT_EQ(config_error_key(j), "order_n");

  j = base_config(dir);
  j.erase("cells");
  EXPECT_EQ(config_error_key(j), "cells");

  j = base_config(dir);
  j["order_n"] = 7;
  EXPECT_EQ(config_error_key(j), "order_n");

  j = base_config(dir);
  j["cfl"] = 1.5;
  EXPECT_EQ(config_error_key(j), "cfl");

  j = base_config(dir);
  j["final_time"] = 0.5;
  EXPECT_EQ(config_error_key(j), "steps");

  j = base_config(dir);
  j["tile_x1"] = 7;
  EXPECT_EQ(config_error_key(j), "tile_x1");

  j = base_config(dir);
  j["mode"] = "sideways";
  EXPECT_EQ(config_error_key(j), "mode");

  j = base_config(dir);
  j["precision"] = "quad";
  EXPECT_EQ(config_error_key(j), "precision");

  j = base_config(dir);
  j["cfl"] = "fast";
  EXPECT_EQ(config_error_key(j), "cfl");

  j = base_config(dir);
  j["colour"] = "blue";
  EXPECT_EQ(config_error_key(j), "colour");

  j = base_config(dir);
  j["ic"] = json::array({{{"type", "gaussian"}}});
  EXPECT_EQ(config_error_key(j), "ic[0].type");

  j = base_config(dir);
  j["ic"] = json::array({{{"type", "separable"},
                          {"factors", {{{"kind", "monomial"}, {"degree", 2}},
                                       {{"kind", "constant"}},
                                       {{"kind", "constant"}}}}}});
  EXPECT_EQ(config_error_key(j), "ic[0]");

  j = base_config(dir);
  j["repetitions"] = 2;
  EXPECT_EQ(config_error_key(j), "repetitions");

  j = base_config(dir);
  j["device"] = {{"bw", 0.0}};
  EXPECT_EQ(config_error_key(j), "device.bw");

  EXPECT_EQ(config_error_key(base_config(dir)), "<accepted>");
}

TEST(RunConfigParse, RoundTripsThroughJson) {
  const auto dir = scratch_dir("roundtrip");
  json j = base_config(dir);
  j["ic"] = json::array({{{"type", "plane_wave"}, {"amplitude", 0.5}, {"wavenumber", {1, 2, 0}}},
                         {{"type", "constant"}, {"value", 2.0}},
                         {{"type", "random_modes"}, {"modes", 3}},
                         {{"type", "separable"},
                          {"weight", -0.5},
                          {"factors", {{{"kind", "fourier"}, {"amplitude", 2.0}, {"wavenumber", 3}},
                                       {{"kind", "constant"}, {"value", 4.0}},
                                       {{"kind", "fourier"}, {"phase", 0.1}}}}}});
  j["mode"] = "two_pass";
  j["precision"] = "single";
  j["device"] = {{"bw", 100.0}, {"flops", 1000.0}, {"source", "laptop"}};
  const RunConfig c = parse_run_config(j);
  EXPECT_EQ(parse_run_config(to_json(c)), c);
  const RunConfig r = resolve(c);
  EXPECT_EQ(parse_run_config(to_json(r)), r);
  EXPECT_EQ(r.stages_q, 9);
  EXPECT_EQ(r.tile_x1, 6);
  EXPECT_GE(r.threads, 1);

  json ft = base_config(dir);
  ft.erase("steps");
  ft["final_time"] = 0.25;
  ft["cells"] = 4;
  const RunConfig f = parse_run_config(ft);
  EXPECT_EQ(f.cells, (std::array<int, 3>{4, 4, 4}));
  EXPECT_EQ(parse_run_config(to_json(f)), f);
}

TEST(RunConfigParse, OverridesReplaceFileValues) {
  json j = base_config(scratch_dir("override"));
  Overrides o;
  o.mode = "two_pass";
  o.tile_x1 = 2;
  o.threads = 3;
  o.deterministic = true;
  o.precision = "single";
  o.out_dir = "elsewhere";
  apply_overrides(j, o);
  const auto c = parse_run_config(j);
  EXPECT_EQ(c.mode, Mode::two_pass);
  EXPECT_EQ(c.tile_x1, 2);
  EXPECT_EQ(c.threads, 3);
  EXPECT_TRUE(c.deterministic);
  EXPECT_EQ(c.precision, Precision::single);
  EXPECT_EQ(c.out_dir, "elsewhere");
}

TEST(RunCommand, ConstantIcStaysExact) {
  const auto dir = scratch_dir("constant");
  json j = base_config(dir);
  j["steps"] = 100;
  j["error_every"] = 25;
  j["ic"] = json::array({{{"type", "constant"}, {"value", 1.5}}});
  std::ostringstream out, err;
  ASSERT_EQ(run_command(parse_run_config(j), out, err), kExitOk) << err.str();

  const auto rows = lines_of(slurp(dir / "errors.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], "step,time,l_inf,l2");
  EXPECT_EQ(split(rows[1])[0], "0");
  EXPECT_EQ(split(rows[5])[0], "100");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i]);
    ASSERT_EQ(f.size(), 4u);
    EXPECT_LE(std::stod(f[2]), 1e-14);
    EXPECT_LE(std::stod(f[3]), 1e-14);
  }

  const auto info = read_snapshot_info(dir / "snapshot");
  EXPECT_EQ(info.order_n, 1);
  EXPECT_EQ(info.grid.cells, (std::array<int, 3>{6, 6, 6}));
  double t = 0.0;
  const auto f = read_snapshot<double>(dir / "snapshot", &t);
  EXPECT_NEAR(t, 100 * select_dt(info.grid, 0.9), 1e-12);
  EXPECT_EQ(f.at(3, 2, 1), 1.5);

  const json perf = json::parse(slurp(dir / "perf.json"));
  EXPECT_EQ(perf["runs"].size(), 1u);
  EXPECT_EQ(perf["runs"][0]["kernel"], "monolithic");
  EXPECT_TRUE(fs::exists(dir / "perf.csv"));
}

TEST(RunCommand, SinglePrecisionRun) {
  const auto dir = scratch_dir("single");
  json j = base_config(dir);
  j["precision"] = "single";
  std::ostringstream out, err;
  ASSERT_EQ(run_command(parse_run_config(j), out, err), kExitOk) << err.str();
  EXPECT_EQ(read_snapshot_info(dir / "snapshot").precision, Precision::single);
}

TEST(RunCommand, InstabilityExitsWithStepIndex) {
  const auto dir = scratch_dir("unstable");
  json j = base_config(dir);
  j["cells"] = 8;
  j["stages_q"] = 1;  // a single Taylor stage is not stable
  j["steps"] = 2000;
  std::ostringstream out, err;
  EXPECT_EQ(run_command(parse_run_config(j), out, err), kExitUnstable);
  EXPECT_NE(err.str().find("instability at step "), std::string::npos) << err.str();
  EXPECT_FALSE(fs::exists(dir / "snapshot.bin"));
}

TEST(ConvergeCommand, FirstOrderMethodConvergesAndIsReproducible) {
  const auto dir = scratch_dir("converge");
  json j = base_config(dir);
  j.erase("steps");
  j["final_time"] = 0.25;
  j["deterministic"] = true;
  j["threads"] = 2;
  const RunConfig c = parse_run_config(j);
  std::ostringstream out, err;
  ASSERT_EQ(converge_command(c, {8, 16, 32}, out, err), kExitOk) << err.str();
  const std::string first = slurp(dir / "convergence.csv");
  const auto rows = lines_of(first);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], "M,l_inf,l2,order");
  EXPECT_EQ(split(rows[1])[3], "");
  EXPECT_GE(std::stod(split(rows[3])[3]), 2.5);

  std::ostringstream out2;
  ASSERT_EQ(converge_command(c, {8, 16, 32}, out2, err), kExitOk);
  EXPECT_EQ(slurp(dir / "convergence.csv"), first);

  EXPECT_THROW(convergence_study(c, {8}), ConfigError);
  EXPECT_THROW(convergence_study(c, {16, 8}), ConfigError);
  EXPECT_THROW(convergence_study(parse_run_config(base_config(dir)), {8, 16}), ConfigError);
}

TEST(AutotuneCommand, MarksWinnerAndSkipsOversizedTiles) {
  const auto dir = scratch_dir("autotune");
  json j = base_config(dir);
  j["cells"] = {16, 4, 4};
  j["steps"] = 1;
  std::ostringstream out, err;
  ASSERT_EQ(autotune_command(parse_run_config(j), {1, 4, 16, 32}, out, err), kExitOk) << err.str();
  const auto rows = lines_of(slurp(dir / "autotune.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "tile_x1,status,median_seconds,bytes_modeled,winner");
  int winners = 0;
  double previous_bytes = INFINITY;
  for (int i = 1; i <= 3; ++i) {
    const auto f = split(rows[static_cast<std::size_t>(i)]);
    ASSERT_EQ(f.size(), 5u) << rows[static_cast<std::size_t>(i)];
    EXPECT_EQ(f[1], "ok");
    const double bytes = std::stod(f[3]);
    EXPECT_LE(bytes, previous_bytes);
    previous_bytes = bytes;
    winners += f[4] == "winner";
  }
  EXPECT_EQ(winners, 1);
  EXPECT_EQ(split(rows[4])[0], "32");
  EXPECT_EQ(split(rows[4])[1], "skipped: exceeds M1");
  EXPECT_NE(out.str().find("best tile_x1 = "), std::string::npos);

  EXPECT_THROW(autotune(parse_run_config(j), {4}), ConfigError);
}

TEST(BenchCommand, OneRowPerMode) {
  const auto dir = scratch_dir("bench");
  json j = base_config(dir);
  j["order_n"] = 2;
  std::ostringstream out, err;
  ASSERT_EQ(bench_command(parse_run_config(j), out, err), kExitOk) << err.str();
  const auto rows = lines_of(slurp(dir / "bench.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "mode,N,cells,steps,seconds,l_inf");
  EXPECT_EQ(split(rows[1])[0], "two_pass");
  EXPECT_EQ(split(rows[2])[0], "fused");
  EXPECT_EQ(split(rows[1])[3], "4");
  EXPECT_EQ(split(rows[1])[5], split(rows[2])[5]);  // same answer from both modes
  const json perf = json::parse(slurp(dir / "perf.json"));
  EXPECT_EQ(perf["runs"].size(), 3u);  // reconstruction, evolution, monolithic
}

TEST(Determinism, IdenticalArtifactsAcrossRuns) {
  std::string snap[2], errors[2];
  for (int r = 0; r < 2; ++r) {
    const auto dir = scratch_dir("det" + std::to_string(r));
    json j = base_config(dir);
    j["ic"] = json::array({{{"type", "random_modes"}, {"modes", 4}}});
    j["seed"] = 99;
    j["threads"] = 4;
    j["deterministic"] = true;
    j["error_every"] = 1;
    std::ostringstream out, err;
    ASSERT_EQ(run_command(parse_run_config(j), out, err), kExitOk);
    snap[r] = slurp(dir / "snapshot.bin");
    errors[r] = slurp(dir / "errors.csv");
  }
  EXPECT_FALSE(snap[0].empty());
  EXPECT_EQ(snap[0], snap[1]);
  EXPECT_EQ(errors[0], errors[1]);
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch_dir("binary");
  std::string log;

  json missing = base_config(dir);
  missing.erase("order_n");
  auto cfg = write_json(dir, missing);
  EXPECT_EQ(run_binary("run --config " + cfg.string(), dir, &log), 2);
  EXPECT_NE(log.find("order_n"), std::string::npos) << log;

  EXPECT_EQ(run_binary("run", dir, &log), 2);
  EXPECT_EQ(run_binary("launch --config x", dir, &log), 2);
  EXPECT_EQ(run_binary("run --config " + (dir / "nope.json").string(), dir, &log), 2);

  json ok = base_config(dir);
  cfg = write_json(dir, ok);
  EXPECT_EQ(run_binary("run --config " + cfg.string() + " --mode two_pass", dir, &log), 0) << log;
  EXPECT_TRUE(fs::exists(dir / "snapshot.json"));
  EXPECT_EQ(run_binary("run --config " + cfg.string() + " --tile-x1 99", dir, &log), 2);
  EXPECT_NE(log.find("tile_x1"), std::string::npos) << log;

  EXPECT_EQ(run_binary("run --config " + cfg.string() + " --print-config --threads 3", dir, &log), 0);
  const json printed = json::parse(log);
  EXPECT_EQ(printed["threads"], 3);
  EXPECT_EQ(printed["stages_q"], 9);
  RunConfig expected = parse_run_config(ok);
  expected.threads = 3;
  EXPECT_EQ(parse_run_config(printed), resolve(expected));

  json unstable = base_config(dir);
  unstable["cells"] = 8;
  unstable["stages_q"] = 1;
  unstable["steps"] = 2000;
  cfg = write_json(dir, unstable);
  EXPECT_EQ(run_binary("run --config " + cfg.string(), dir, &log), 3);
  EXPECT_NE(log.find("step"), std::string::npos);
}

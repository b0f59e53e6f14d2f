#pragma once

/// Field snapshots: `<base>.bin` holds the raw DOF tensor in its declared
/// [m3][m2][m1][n3][n2][n1] order (native-endian IEEE floats), `<base>.json`
/// describes it.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hermite/field.hpp"

namespace hermite {

struct SnapshotInfo {
  GridSpec grid;
  int order_n = 0;
  Parity parity = Parity::primary;
  Precision precision = Precision::double_;
  double time = 0.0;
};

inline nlohmann::json to_json(const SnapshotInfo& info) {
  return {{"cells", info.grid.cells},
          {"lengths", info.grid.lengths},
          {"order_n", info.order_n},
          {"parity", std::string(to_string(info.parity))},
          {"precision", std::string(to_string(info.precision))},
          {"time", info.time},
          {"layout", "[m3][m2][m1][n3][n2][n1]"},
          {"entries", info.grid.node_count() * static_cast<std::size_t>((info.order_n + 1) *
                                                                        (info.order_n + 1) *
                                                                        (info.order_n + 1))}};
}

inline SnapshotInfo snapshot_info_from_json(const nlohmann::json& j) {
  SnapshotInfo info;
  info.grid = GridSpec(j.at("cells").get<std::array<int, 3>>(),
                       j.at("lengths").get<std::array<double, 3>>());
  info.order_n = j.at("order_n").get<int>();
  info.parity = parse_parity(j.at("parity").get<std::string>());
  info.precision = parse_precision(j.at("precision").get<std::string>());
  info.time = j.at("time").get<double>();
  return info;
}

template <typename Real>
void write_snapshot(const std::filesystem::path& base, const DofField<Real>& field, double time) {
  const SnapshotInfo info{field.grid(), field.order_n(), field.parity(), field.precision(), time};
  std::ofstream bin(base.string() + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + base.string() + ".bin");
  const auto data = field.data();
  bin.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(Real)));
  std::ofstream meta(base.string() + ".json");
  if (!meta) throw std::runtime_error("cannot write " + base.string() + ".json");
  meta << to_json(info).dump(2) << '\n';
}

inline SnapshotInfo read_snapshot_info(const std::filesystem::path& base) {
  std::ifstream meta(base.string() + ".json");
  if (!meta) throw std::runtime_error("cannot read " + base.string() + ".json");
  return snapshot_info_from_json(nlohmann::json::parse(meta));
}

template <typename Real>
DofField<Real> read_snapshot(const std::filesystem::path& base, double* time = nullptr) {
  const SnapshotInfo info = read_snapshot_info(base);
  if (info.precision != precision_of<Real>())
    throw std::runtime_error("snapshot precision does not match the requested scalar type");
  DofField<Real> field(info.grid, info.order_n, info.parity);
  std::ifstream bin(base.string() + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + base.string() + ".bin");
  auto data = field.data();
  bin.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(Real)));
  if (bin.gcount() != static_cast<std::streamsize>(data.size() * sizeof(Real)))
    throw std::runtime_error("snapshot binary is shorter than its sidecar declares");
  if (time) *time = info.time;
  return field;
}

}  // namespace hermite

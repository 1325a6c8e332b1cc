#pragma once

#include "roundtrip/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace roundtrip {

// Binary layout, all integers and floats little-endian:
//
//   "RTDE"                      magic
//   u16                         format version
//   u32 m, u32 n
//   f64 sigma
//   network G, then network H:
//     u32 layer count
//     per layer: u32 rows, u32 cols, u8 activation tag, f64 activation slope
//     per layer: rows*cols f64 weights (row-major), then rows f64 biases
//   u32 normalization width (0 = identity), then that many f64 mins and maxs
//   u32 CRC-32 of every preceding byte

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::string serialize_model(const RoundtripModel& model);
/// Throws CorruptFileError, VersionError or ShapeError.
RoundtripModel deserialize_model(const std::string& bytes);

void save_checkpoint(const RoundtripModel& model, const std::filesystem::path& path);
RoundtripModel load_checkpoint(const std::filesystem::path& path);

} // namespace roundtrip

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "trits/params.hpp"

namespace trits {

// Binary layout:
//   "TRTS1"
//   repeated until EOF:
//     u64 name_len | name bytes (UTF-8) | u64 rank | rank x u64 extents | numel x f64 values
// All integers and floats little-endian.

inline constexpr char kCheckpointMagic[] = "TRTS1";

using TensorRecord = std::pair<std::string, Tensor>;

void save_checkpoint(const std::filesystem::path& path, const ParamList& params);
std::vector<TensorRecord> read_checkpoint(const std::filesystem::path& path);

/// Copies records into params by name. Every param must be present with a
/// matching shape; extra records are an error too.
void load_checkpoint(const std::filesystem::path& path, const ParamList& params);

}  // namespace trits

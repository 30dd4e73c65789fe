#pragma once

// Binary parameter container. Layout, all integers u32 little-endian:
//
//   "AFEC" | version | entry count | entries...
//   entry: name length | utf8 name | rank | extents[rank] | float32 values
//
// Config scalars are stored as ordinary entries under "config.*".

#include <filesystem>
#include <iosfwd>

#include "afecnn/model.hpp"

namespace afecnn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
};

void write_checkpoint(std::ostream& out, const ModelParams<float>& params, const ModelConfig& config);
void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params, const ModelConfig& config);

/// Throws CheckpointError naming the defect (bad magic, unsupported version,
/// unexpected end of checkpoint, missing or misshapen tensor).
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace afecnn

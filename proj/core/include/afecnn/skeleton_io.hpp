#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "afecnn/skeleton.hpp"

namespace afecnn {

struct NtuFileInfo {
  int setup_id = 0;
  int camera_id = 0;
  int subject_id = 0;
  int replication = 0;
  int action = 0;
};

/// Decodes the `SsssCcccPpppRrrrAaaa` stem of an NTU skeleton file name.
/// Returns nullopt when the name does not follow the pattern.
std::optional<NtuFileInfo> parse_ntu_filename(std::string_view filename);

/// Reads one `.skeleton` file and keeps its primary body (the one with the
/// largest summed squared frame-to-frame joint displacement). Frames without
/// that body are dropped. Metadata comes from the file name when it matches
/// the NTU pattern.
SkeletonSequence parse_ntu(const std::filesystem::path& path);
SkeletonSequence parse_ntu(std::istream& in, std::string_view filename);

/// One JSON object per line:
/// {"label": int, "subject": int, "camera": int, "setup": int, "frames": [[[x,y,z] x J] x T]}
/// "setup" is optional on input. Blank lines are skipped. When
/// `expected_joints` is unset the first sequence fixes J for the file.
std::vector<SkeletonSequence> parse_jsonl(const std::filesystem::path& path,
                                          std::optional<std::size_t> expected_joints = std::nullopt);
std::vector<SkeletonSequence> parse_jsonl(std::istream& in,
                                          std::optional<std::size_t> expected_joints = std::nullopt);

/// Coordinates are written with 9 significant digits, which round-trips
/// every 32-bit float exactly.
void write_jsonl(std::span<const SkeletonSequence> sequences, const std::filesystem::path& path);
void write_jsonl(std::span<const SkeletonSequence> sequences, std::ostream& out);

}  // namespace afecnn

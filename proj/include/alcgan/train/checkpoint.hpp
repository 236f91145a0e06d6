#pragma once

#include <filesystem>
#include <string>

#include "alcgan/train/trainer.hpp"

namespace alcgan::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary archive: magic, format version, JSON header (configs, counters, RNG
/// state), then name-indexed tensors stored as little-endian float32.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
/// Throws IoError for unreadable files and ValidationError for version
/// mismatches, truncation or missing tensors.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

} // namespace alcgan::train

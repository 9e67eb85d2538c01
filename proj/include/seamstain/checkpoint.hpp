#pragma once

#include <filesystem>

#include "seamstain/trainer.hpp"

namespace seamstain {

inline constexpr const char* kCheckpointMagic = "seamstain-ckpt-v1";

// Layout: "seamstain-ckpt-v1\n", u64 little-endian length of a JSON metadata
// block, the JSON itself, then float32 little-endian blobs in the order the
// metadata lists them. Holds everything in a ModelBundle, so a resumed run
// continues bit-for-bit. Written to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& bundle);

// Throws IoError for unreadable, truncated or foreign files.
ModelBundle load_checkpoint(const std::filesystem::path& path);

}  // namespace seamstain

#pragma once

#include <filesystem>

#include "gjepa/config.hpp"
#include "gjepa/model.hpp"

namespace gjepa {

// Binary checkpoint container, format version 1 (see docs/checkpoint.md):
//
//   bytes 0..7   magic "GJEPACKP"
//   bytes 8..11  format version, uint32 little-endian
//   bytes 12..19 header length H, uint64 little-endian
//   next H bytes JSON header (tensor directory, Adam scalars, epoch, seed, config)
//   remainder    tensor payload, float64 little-endian, row-major, in
//                directory order
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderState state;
  RunConfig config;
};

void save_checkpoint(const std::filesystem::path& path, const EncoderState& state,
                     const RunConfig& cfg);

/// Throws Errc::checkpoint_mismatch on a malformed or incompatible file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gjepa

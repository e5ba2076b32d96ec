#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "fedswarm/neuralnet.hpp"

namespace fedswarm::nn {

/// Weight checkpoint layout, every integer and float little-endian:
///
///   bytes 0-3    magic "FSWN"
///   u32          format version (1)
///   u32          layer count L
///   u32          concat_dim
///   L x { u32 input_dim, u32 output_dim, u32 activation tag }
///   payload      per layer: weight matrix row-major (output_dim x input_dim), then bias; float32
///
/// The payload is exactly serialized_size(weights) bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::byte> to_bytes(const NetworkWeights& weights);
/// Throws ShapeError on truncated or malformed input.
NetworkWeights from_bytes(std::span<const std::byte> bytes);

void save_checkpoint(const std::filesystem::path& path, const NetworkWeights& weights);
NetworkWeights load_checkpoint(const std::filesystem::path& path);

}  // namespace fedswarm::nn

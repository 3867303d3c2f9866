#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cxrnet/model.hpp"
#include "cxrnet/optim.hpp"

namespace cxrnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint layout (all integers and floats little-endian):
///
///   "CXRN"                      magic
///   u32  version                currently 1
///   u32  n, n bytes             model descriptor (JSON of ModelSpec)
///   u32  tensor count           then per tensor:
///          u32 rank, rank x u32 extents, f32 values (row-major)
///   u32  epoch
///   u64  seed
///   u8   has optimizer          if 1:
///          i64 step, f64 lr, f64 beta1, f64 beta2, f64 epsilon,
///          u32 moment count, moment tensors (all m then all v)
///   u32  CRC-32 of every preceding byte
struct Checkpoint {
  Network<float> model;
  std::optional<AdamState<float>> optimizer;
  std::uint32_t epoch = 0;
  std::uint64_t seed = 0;
};

std::vector<std::uint8_t> encode_checkpoint(const Network<float>& model,
                                            const AdamState<float>* optimizer,
                                            std::uint32_t epoch,
                                            std::uint64_t seed);

/// Throws FormatError on bad magic, unsupported version, checksum mismatch,
/// truncation, trailing bytes, or tensors inconsistent with the descriptor.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes via a temporary sibling file and rename.
void save_checkpoint(const std::filesystem::path& path,
                     const Network<float>& model,
                     const AdamState<float>* optimizer, std::uint32_t epoch,
                     std::uint64_t seed);

Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CRC-32 (IEEE 802.3, as in zlib).
std::uint32_t crc32(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace cxrnet

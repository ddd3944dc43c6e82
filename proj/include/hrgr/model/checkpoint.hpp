#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hrgr/model/parameters.hpp"

namespace hrgr::model {

struct CheckpointMeta {
  int epoch = 0;
  std::uint64_t seed = 0;
  std::string config_hash;  // 16 hex digits
  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  ModelParameters params;
  CheckpointMeta meta;
};

// Binary layout, little-endian:
//   "HRGR" | u32 version | dims block (8 x u64)
//   u64 n_params, then per param: u32 name_len, name, u32 rank, rank x u64 dims, f64 values
//   u64 footer_len, JSON {epoch, seed, config_hash}
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const ModelParameters& params, const CheckpointMeta& meta);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Also rejects a checkpoint whose dims differ from `expected`, naming both.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelDims& expected);

// FNV-1a 64 of a string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace hrgr::model

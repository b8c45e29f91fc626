#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wseg/nn/graph.hpp"

namespace wseg::nn {

// On-disk layout (all integers little-endian):
//   bytes 0..4   magic "WSEG1"
//   bytes 5..12  u64 length L of the JSON header
//   next L bytes compact JSON header: format, stage, epoch, seed, architecture,
//                input_channels, layers, params [{name, shape}], payload_fnv1a64, meta
//   payload      IEEE-754 float32 values of every parameter, in header order
struct CheckpointMeta {
  int epoch = 0;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();
};

struct Checkpoint {
  ModelGraph<float> model;
  CheckpointMeta meta;
  nlohmann::json header;
};

inline constexpr char kCheckpointMagic[] = "WSEG1";

std::vector<std::uint8_t> serialize_checkpoint(const ModelGraph<float>& model, const CheckpointMeta& meta);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ModelGraph<float>& model, const CheckpointMeta& meta, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
// 16 hex digits of the FNV-1a hash of the serialized checkpoint.
std::string checkpoint_id(const ModelGraph<float>& model, const CheckpointMeta& meta);

}  // namespace wseg::nn

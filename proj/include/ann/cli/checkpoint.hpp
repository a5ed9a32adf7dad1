#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ann/layers/model.hpp"

namespace ann::cli {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::uint64_t epochs_completed = 0;
  std::uint64_t config_hash = 0;
  std::string preset;
};

struct Checkpoint {
  layers::ModelSpec spec;
  CheckpointMeta meta;
  std::vector<std::pair<std::string, ad::Tensor>> parameters;

  layers::Model model() const { return layers::Model::from_parameters(spec, parameters); }
};

nlohmann::json spec_to_json(const layers::ModelSpec& spec);
layers::ModelSpec spec_from_json(const nlohmann::json& j);

Checkpoint make_checkpoint(const layers::Model& model, const CheckpointMeta& meta);

/// "ANNC" | u16 version | u32 spec length | spec JSON | u32 block count |
/// blocks of (u32 name length, name, u32 rank, u32 dims..., f32 LE values).
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace ann::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ddafl/ddpg.hpp"

namespace ddafl {

struct CheckpointManifest {
  std::size_t episodes = 0;
  std::string config_hash;
  std::uint64_t rng_digest = 0;
};

// Writes actor, critic, target_actor, target_critic (.params) and
// manifest.json into dir, creating it if needed.
void save_checkpoint(const std::filesystem::path& dir, const AgentNets& nets, const CheckpointManifest& manifest);

struct Checkpoint {
  AgentNets nets;
  CheckpointManifest manifest;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace ddafl

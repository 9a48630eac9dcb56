#include "ddafl/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace ddafl {

namespace {

constexpr const char* kNetFiles[] = {"actor.params", "critic.params", "target_actor.params", "target_critic.params"};

void write_file(const std::filesystem::path& path, const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_params(out, params);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModelParams read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_params(in);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const AgentNets& nets, const CheckpointManifest& manifest) {
  std::filesystem::create_directories(dir);
  const ModelParams* nets_in_order[] = {&nets.actor, &nets.critic, &nets.target_actor, &nets.target_critic};
  for (std::size_t i = 0; i < 4; ++i) write_file(dir / kNetFiles[i], *nets_in_order[i]);

  nlohmann::json j;
  j["format"] = "ddafl-checkpoint";
  j["version"] = 1;
  j["episodes"] = manifest.episodes;
  j["config_hash"] = manifest.config_hash;
  j["rng_digest"] = manifest.rng_digest;
  j["networks"] = {kNetFiles[0], kNetFiles[1], kNetFiles[2], kNetFiles[3]};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + dir.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bad checkpoint manifest: ") + e.what());
  }
  if (j.value("format", "") != "ddafl-checkpoint") throw std::runtime_error("not a ddafl checkpoint manifest");
  Checkpoint cp;
  cp.manifest.episodes = j.at("episodes").get<std::size_t>();
  cp.manifest.config_hash = j.at("config_hash").get<std::string>();
  cp.manifest.rng_digest = j.at("rng_digest").get<std::uint64_t>();
  cp.nets.actor = read_file(dir / kNetFiles[0]);
  cp.nets.critic = read_file(dir / kNetFiles[1]);
  cp.nets.target_actor = read_file(dir / kNetFiles[2]);
  cp.nets.target_critic = read_file(dir / kNetFiles[3]);
  if (!cp.nets.actor.same_shape(cp.nets.target_actor) || !cp.nets.critic.same_shape(cp.nets.target_critic))
    throw std::runtime_error("checkpoint target nets do not match online nets");
  return cp;
}

}  // namespace ddafl

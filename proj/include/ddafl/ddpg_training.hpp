#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ddafl/afl_engine.hpp"
#include "ddafl/config.hpp"
#include "ddafl/ddpg.hpp"
#include "ddafl/world.hpp"

namespace ddafl {

// Everything logged about one slot, minus the model parameters.
struct SlotRecord {
  Phase phase = Phase::train;
  std::size_t episode = 0;
  std::size_t slot = 0;
  std::vector<double> lambdas;  // empty for baselines
  std::vector<bool> mask;
  double reward = std::numeric_limits<double>::quiet_NaN();
  double avg_loss = 0.0;
  double rsu_loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = 0.0;
  double error_rate = 1.0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t filter_calls = 0;
  double mean_delay = 0.0;
  std::vector<VehicleReport> reports;
  double attacked_fraction = 0.0;  // share of participating vehicles attacked this slot
  std::uint64_t world_digest = 0;
};

StateScale state_scale(const SimConfig& cfg);
std::vector<double> clip_action(const Action& raw, double floor);

struct TrainResult {
  AgentNets nets;
  std::vector<double> episode_rewards;  // sum of slot rewards per episode
  std::vector<SlotRecord> slots;
  std::size_t updates = 0;
  std::size_t transitions = 0;
  std::uint64_t rng_digest = 0;
};

// The configuration the selector trains under: attacks switched off, since
// selection is learned without Byzantine vehicles.
SimConfig training_config(const SimConfig& cfg);

// Episodes x slots of noisy acting, AFL, reward, replay and (once the buffer
// holds more than `minibatch` tuples) one critic, actor and soft update per
// slot. World and global model are reinitialized every episode.
TrainResult train_agent(const SimConfig& cfg, std::uint64_t seed, const AflSettings& settings);

struct TestResult {
  std::vector<SlotRecord> slots;
  std::vector<std::size_t> admissions;  // per vehicle, over all test slots
  std::size_t slot_count = 0;
};

// Noise-free deployment of a trained actor for cfg.test_episodes episodes.
// The actor is taken by const reference and never modified.
TestResult test_policy(const ModelParams& actor, const SimConfig& cfg, std::uint64_t seed,
                       const AflSettings& settings);

enum class BaselineKind { sync_fl, plain_afl };

// All vehicles participate every slot; same episodes as test_policy.
TestResult run_baseline(BaselineKind kind, const SimConfig& cfg, std::uint64_t seed, const AflSettings& settings);

}  // namespace ddafl

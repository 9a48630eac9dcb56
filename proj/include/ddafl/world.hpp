#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ddafl/channel.hpp"
#include "ddafl/config.hpp"
#include "ddafl/data.hpp"
#include "ddafl/rng.hpp"

namespace ddafl {

struct VehicleProfile {
  std::size_t data_count = 1;  // D_n
  double compute = 1.0;        // mu_n(t), CPU cycles/s
  double rate = 0.0;           // R_n(t), bit/s
  Position3 position;
};

enum class Phase : std::uint64_t { train = 1, test = 2 };

// Episode identifier shared by every scheme, so that the same (phase, index)
// replays the same channel, compute and mobility realization.
std::uint64_t episode_key(Phase phase, std::size_t index);

// Rejection-sampled N(mean, stddev^2) restricted to [lo, hi].
double truncated_normal(Rng& rng, double mean, double stddev, double lo, double hi);

// RSU coverage area with K vehicles. Owns the data shards (fixed for the
// run) and the per-episode mobility, channel and compute processes. Every
// random draw comes from a stream keyed by (run seed, purpose, episode,
// vehicle), so realizations do not depend on which vehicles are selected.
class World {
 public:
  World(const SimConfig& cfg, std::uint64_t run_seed);

  void reset_episode(std::uint64_t episode_key);
  // Moves every vehicle one slot, refreshes rho from the new geometry,
  // evolves the channel gain and redraws compute.
  void advance();

  const SimConfig& config() const { return cfg_; }
  std::uint64_t run_seed() const { return run_seed_; }
  std::uint64_t episode() const { return episode_key_; }
  std::size_t slot() const { return slot_; }
  std::size_t vehicle_count() const { return profiles_.size(); }

  std::span<const VehicleProfile> profiles() const { return profiles_; }
  const VehicleProfile& profile(std::size_t v) const { return profiles_.at(v); }
  const ChannelState& channel(std::size_t v) const { return channels_.at(v); }

  const DataShard& shard(std::size_t v) const { return shards_.at(v); }
  const DataShard& rsu_shard() const { return rsu_shard_; }
  // Trusted samples the RSU scores models on; its training shard when no
  // holdout is configured.
  const LabeledBatch& rsu_holdout() const { return rsu_holdout_.empty() ? rsu_shard_.batch : rsu_holdout_; }
  const LabeledBatch& test_set() const { return test_set_; }
  bool is_bad(std::size_t v) const { return shards_.at(v).bad_node; }
  bool is_attack_target(std::size_t v) const { return shards_.at(v).attack != AttackKind::none; }
  // Whether the attack on v is active in the current slot.
  bool attacked_now(std::size_t v) const { return attacked_now_.at(v); }
  // The data v trains on this slot (poisoned when attacked_now).
  const LabeledBatch& training_data(std::size_t v) const;

  // Seed for a per-slot, per-vehicle stream (local mini-batches, noise).
  std::uint64_t slot_seed(Stream tag, std::uint64_t vehicle) const;
  std::uint64_t seed_for(Stream tag, std::uint64_t extra) const;

  // Running hash over every realized position, gain and compute draw.
  std::uint64_t trace_digest() const { return digest_; }

 private:
  void refresh_link(std::size_t v);
  void draw_compute(std::size_t v);
  void draw_attack_activity();
  void fold_digest();

  SimConfig cfg_;
  std::uint64_t run_seed_;
  LinkBudget link_;
  std::vector<DataShard> shards_;
  std::vector<LabeledBatch> poisoned_;
  DataShard rsu_shard_;
  LabeledBatch rsu_holdout_;
  LabeledBatch test_set_;

  std::uint64_t episode_key_ = 0;
  std::size_t slot_ = 0;
  std::vector<double> start_x_;
  std::vector<VehicleProfile> profiles_;
  std::vector<ChannelState> channels_;
  std::vector<Rng> channel_rngs_;
  std::vector<Rng> compute_rngs_;
  std::vector<bool> attacked_now_;
  std::uint64_t digest_ = 0;
};

}  // namespace ddafl

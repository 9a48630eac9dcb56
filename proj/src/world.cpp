#include "ddafl/world.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ddafl {

namespace {

std::uint64_t fold(std::uint64_t h, double v) { return mix64(h ^ std::bit_cast<std::uint64_t>(v)); }

LabeledBatch load_dataset(const SimConfig& cfg, std::uint64_t run_seed, LabeledBatch& test_set) {
  LabeledBatch pool;
  if (cfg.dataset == "synthetic") {
    SyntheticSpec spec{cfg.dataset_size + cfg.test_set_size, cfg.feature_count, cfg.data_separation,
                       cfg.data_noise};
    pool = make_synthetic_dataset(spec, derive_seed({run_seed, static_cast<std::uint64_t>(Stream::dataset)}));
  } else {
    pool = load_csv_dataset(cfg.dataset);
    if (pool.feature_count() != cfg.feature_count) {
      throw std::invalid_argument("dataset has " + std::to_string(pool.feature_count()) +
                                  " features, config expects " + std::to_string(cfg.feature_count));
    }
  }
  if (pool.size() <= cfg.test_set_size) throw std::invalid_argument("dataset smaller than the test set");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed({run_seed, static_cast<std::uint64_t>(Stream::test_set)}));
  rng.shuffle(std::span<std::size_t>(order));
  auto all = std::span<const std::size_t>(order);
  test_set = pool.subset(all.first(cfg.test_set_size));
  return pool.subset(all.subspan(cfg.test_set_size));
}

}  // namespace

std::uint64_t episode_key(Phase phase, std::size_t index) {
  return derive_seed({static_cast<std::uint64_t>(phase), index});
}

double truncated_normal(Rng& rng, double mean, double stddev, double lo, double hi) {
  if (stddev <= 0.0) return std::clamp(mean, lo, hi);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double v = rng.normal(mean, stddev);
    if (v >= lo && v <= hi) return v;
  }
  return std::clamp(mean, lo, hi);
}

World::World(const SimConfig& cfg, std::uint64_t run_seed)
    : cfg_(cfg), run_seed_(run_seed), link_(cfg.link_budget()) {
  validate(cfg_);
  LabeledBatch pool = load_dataset(cfg_, run_seed_, test_set_);

  const std::size_t k = cfg_.num_vehicles;
  std::vector<std::size_t> sizes(k, cfg_.shard_size);
  if (cfg_.bad_vehicle >= 0) {
    auto& s = sizes[static_cast<std::size_t>(cfg_.bad_vehicle)];
    s = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg_.bad_data_fraction * static_cast<double>(s))));
  }
  Partition parts = partition(pool, sizes, cfg_.rsu_shard_size + cfg_.rsu_holdout_size,
                              seed_for(Stream::partition, 0));
  shards_ = std::move(parts.vehicles);
  rsu_shard_ = std::move(parts.rsu);
  if (cfg_.rsu_holdout_size > 0) {
    std::vector<std::size_t> train_idx, hold_idx;
    for (std::size_t i = 0; i < rsu_shard_.batch.size(); ++i)
      (i < cfg_.rsu_shard_size ? train_idx : hold_idx).push_back(i);
    rsu_holdout_ = rsu_shard_.batch.subset(hold_idx);
    rsu_shard_.batch = rsu_shard_.batch.subset(train_idx);
  }
  if (cfg_.bad_vehicle >= 0) shards_[static_cast<std::size_t>(cfg_.bad_vehicle)].bad_node = true;

  // Attack targets: a seeded choice among the vehicles that are not the bad node.
  std::vector<std::size_t> candidates;
  for (std::size_t v = 0; v < k; ++v) {
    if (!shards_[v].bad_node) candidates.push_back(v);
  }
  Rng placement(seed_for(Stream::attack_placement, 0));
  placement.shuffle(std::span<std::size_t>(candidates));
  const AttackKind kind = cfg_.attack_kind();
  const std::size_t n_attacked = kind == AttackKind::none ? 0 : std::min(cfg_.attacked_count(), candidates.size());
  poisoned_.resize(k);
  for (std::size_t i = 0; i < n_attacked; ++i) {
    const std::size_t v = candidates[i];
    shards_[v].attack = kind;
    poisoned_[v] = apply_attack(shards_[v].batch, kind);
  }

  start_x_.assign(k, 0.0);
  profiles_.assign(k, VehicleProfile{});
  channels_.assign(k, ChannelState{});
  attacked_now_.assign(k, false);
  for (std::size_t v = 0; v < k; ++v) profiles_[v].data_count = shards_[v].batch.size();
  reset_episode(episode_key(Phase::train, 0));
}

std::uint64_t World::seed_for(Stream tag, std::uint64_t extra) const {
  return derive_seed({run_seed_, static_cast<std::uint64_t>(tag), extra});
}

std::uint64_t World::slot_seed(Stream tag, std::uint64_t vehicle) const {
  return derive_seed({run_seed_, static_cast<std::uint64_t>(tag), episode_key_, slot_, vehicle});
}

const LabeledBatch& World::training_data(std::size_t v) const {
  return attacked_now_.at(v) ? poisoned_[v] : shards_[v].batch;
}

void World::reset_episode(std::uint64_t key) {
  episode_key_ = key;
  slot_ = 0;
  digest_ = key;
  const std::size_t k = profiles_.size();
  channel_rngs_.clear();
  compute_rngs_.clear();
  for (std::size_t v = 0; v < k; ++v) {
    Rng start(derive_seed({run_seed_, static_cast<std::uint64_t>(Stream::start_positions), key, v}));
    start_x_[v] = start.uniform(cfg_.start_x_min, cfg_.start_x_max);
    channel_rngs_.emplace_back(derive_seed({run_seed_, static_cast<std::uint64_t>(Stream::channel), key, v}));
    compute_rngs_.emplace_back(derive_seed({run_seed_, static_cast<std::uint64_t>(Stream::compute), key, v}));
    profiles_[v].position = {start_x_[v], cfg_.lane_offset, 0.0};
    // Initial gain from the stationary distribution.
    channels_[v].gain = channel_rngs_[v].complex_normal();
    refresh_link(v);
    draw_compute(v);
  }
  draw_attack_activity();
  fold_digest();
}

void World::advance() {
  ++slot_;
  for (std::size_t v = 0; v < profiles_.size(); ++v) {
    profiles_[v].position.x =
        advance_position(start_x_[v], cfg_.speed, static_cast<std::int64_t>(slot_), cfg_.slot_duration);
    // rho for the t-1 -> t step comes from the geometry at t.
    const double cos_theta = cos_uplink_angle(profiles_[v].position, cfg_.rsu_position());
    const double fd = doppler_freq(cfg_.speed, cfg_.wavelength, cos_theta);
    channels_[v].doppler_hz = std::abs(fd);
    channels_[v].rho = channel_correlation(fd, cfg_.slot_duration);
    channels_[v] = evolve_channel(channels_[v], channel_rngs_[v].complex_normal());
    refresh_link(v);
    draw_compute(v);
  }
  draw_attack_activity();
  fold_digest();
}

void World::refresh_link(std::size_t v) {
  auto& p = profiles_[v];
  const double cos_theta = cos_uplink_angle(p.position, cfg_.rsu_position());
  const double fd = doppler_freq(cfg_.speed, cfg_.wavelength, cos_theta);
  channels_[v].doppler_hz = std::abs(fd);
  channels_[v].rho = channel_correlation(fd, cfg_.slot_duration);
  p.rate = transmission_rate(link_, channels_[v].gain, distance_to_rsu(p.position, cfg_.rsu_position()));
}

void World::draw_compute(std::size_t v) {
  double mean = cfg_.compute_mean;
  double ratio = 1.0;
  if (shards_[v].bad_node) {
    ratio = cfg_.bad_compute_mean / cfg_.compute_mean;
    mean = cfg_.bad_compute_mean;
  }
  profiles_[v].compute = truncated_normal(compute_rngs_[v], mean, cfg_.compute_std * ratio,
                                          cfg_.compute_min * ratio, cfg_.compute_max * ratio);
}

void World::draw_attack_activity() {
  for (std::size_t v = 0; v < profiles_.size(); ++v) {
    if (!is_attack_target(v)) {
      attacked_now_[v] = false;
    } else if (cfg_.attack_persistent) {
      attacked_now_[v] = true;
    } else {
      Rng r(slot_seed(Stream::attack_placement, v));
      attacked_now_[v] = r.uniform() < cfg_.transient_attack_prob;
    }
  }
}

void World::fold_digest() {
  for (std::size_t v = 0; v < profiles_.size(); ++v) {
    digest_ = fold(digest_, profiles_[v].position.x);
    digest_ = fold(digest_, channels_[v].gain.real());
    digest_ = fold(digest_, channels_[v].gain.imag());
    digest_ = fold(digest_, profiles_[v].compute);
    digest_ = mix64(digest_ ^ (attacked_now_[v] ? 1U : 0U));
  }
}

}  // namespace ddafl

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddafl/channel.hpp"
#include "ddafl/data.hpp"

namespace ddafl {

// Every simulation constant. Defaults are the scenario values used
// throughout the experiments; see README for the meaning of each key.
struct SimConfig {
  // Scenario constants.
  double speed = 20.0;               // m/s, identical for all vehicles
  double slot_duration = 0.5;        // s
  std::size_t num_vehicles = 5;      // K
  std::size_t minibatch = 64;        // I, DDPG replay mini-batch
  double tx_power_w = 0.25;          // p_0
  std::size_t episodes = 1000;       // training episodes
  double noise_power_mw = 1e-9;      // sigma^2, converted to W internally
  std::size_t test_episodes = 3;     // policy-only evaluation episodes
  double rsu_height = 10.0;          // m
  double bandwidth_hz = 1000.0;
  double model_bits = 5000.0;        // |w|, upload size
  double gamma = 0.99;               // discount factor
  double path_loss_exp = 2.0;
  double cycles_per_sample = 1e6;    // C_0
  double m1 = 0.9;                   // local-delay weight base
  double tau = 0.001;                // target-network soft update rate
  double m2 = 0.9;                   // upload-delay weight base
  double lane_offset = 5.0;          // d_y, m
  double beta_r = 1.25;              // RSU loss-threshold factor
  double wavelength = 7.0;           // m; unusually long for V2X, kept as given

  // Reward and learning.
  double w1 = 1.0;
  double w2 = 1.0;
  double local_lr = 0.05;
  std::size_t local_rounds = 5;
  std::size_t local_batch = 32;
  std::size_t slots_per_episode = 20;
  double aggregation_beta = 0.5;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::string ddpg_optimizer = "adam";  // adam | sgd
  std::size_t replay_capacity = 100000;
  std::size_t hidden1 = 400;
  std::size_t hidden2 = 300;
  double ou_theta = 0.15;
  double ou_variance = 0.02;            // innovation variance; sigma = sqrt
  double lambda_floor = 0.01;
  double rate_norm_factor = 40.0;       // rate block scaled by bandwidth * factor

  // Data.
  std::string dataset = "synthetic";    // "synthetic" or a CSV path
  std::size_t dataset_size = 3000;      // synthetic sample count
  std::size_t feature_count = 64;
  double data_separation = 0.5;
  double data_noise = 0.3;
  std::string classifier_hidden = "32"; // comma-separated hidden widths
  std::size_t shard_size = 400;
  std::size_t rsu_shard_size = 400;     // D_RSU samples the RSU trains on
  std::size_t rsu_holdout_size = 500;   // further D_RSU samples used only to score models
  std::size_t test_set_size = 1000;

  // Vehicles.
  double compute_mean = 2e9;
  double compute_std = 5e8;
  double compute_min = 1e9;
  double compute_max = 3e9;
  double coverage_radius = 250.0;
  double start_x_min = -200.0;
  double start_x_max = 0.0;
  int bad_vehicle = 4;                  // -1 disables the bad node
  double bad_data_fraction = 0.25;
  double bad_compute_mean = 5e8;
  double bad_noise_scale = 0.5;

  // Byzantine attacks.
  std::string attack = "none";          // none | class_flip | data_flip
  double attack_fraction = 0.0;         // share of vehicles attacked
  bool attack_persistent = true;
  double transient_attack_prob = 0.5;   // per-slot, when not persistent

  // Engine policy.
  std::string loss_average = "accepted";  // accepted | all
  bool rsu_warm_start = false;       // true: RSU keeps training its own model across slots
  std::string screening_loss = "trusted";  // trusted: uploads scored on D_RSU | local: reported loss

  std::uint64_t seed = 1;

  // Derived views.
  LinkBudget link_budget() const;
  Position3 rsu_position() const { return {0.0, 0.0, rsu_height}; }
  double noise_power_w() const { return noise_power_mw * 1e-3; }
  double ou_sigma() const;
  std::vector<std::size_t> classifier_widths() const;
  AttackKind attack_kind() const { return parse_attack(attack); }
  std::size_t attacked_count() const;

  bool operator==(const SimConfig&) const = default;
};

// Throws ConfigError naming the first offending key.
void validate(const SimConfig& cfg);

// Parses "key = value" lines over the defaults; '#' starts a comment.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);
// Canonical text form: every key in fixed order, doubles at 17 digits.
std::string serialize_config(const SimConfig& cfg);
void save_config(const SimConfig& cfg, const std::string& path);
// Applies a single "key=value" override (CLI --set).
void set_config_value(SimConfig& cfg, const std::string& key, const std::string& value);
// FNV-1a 64 of the canonical form, as 16 hex digits.
std::string config_hash(const SimConfig& cfg);

}  // namespace ddafl

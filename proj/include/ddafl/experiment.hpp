#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ddafl/afl_engine.hpp"
#include "ddafl/config.hpp"
#include "ddafl/data.hpp"
#include "ddafl/ddpg.hpp"
#include "ddafl/ddpg_training.hpp"
#include "ddafl/metrics.hpp"

namespace ddafl {

enum class Scheme { ddafl, ddafl_no_defense, ddafl_no_lt, ddafl_no_ct, plain_afl, sync_fl };

std::string to_string(Scheme s);
// Throws ConfigError (key "scheme") for unknown names.
Scheme parse_scheme(const std::string& name);
bool uses_agent(Scheme s);
// Engine settings for the deployment stage of a scheme.
AflSettings settings_for(Scheme s, const SimConfig& cfg);

struct TrainedPolicy {
  AgentNets nets;
  std::vector<double> episode_rewards;
  std::vector<SlotRecord> slots;
  std::uint64_t rng_digest = 0;
  std::string config_hash;  // of the training configuration
};

// Trained selectors keyed by (training config, seed, staleness-weight
// variant). ddafl and ddafl_no_defense share one policy, as do all attack
// settings of one configuration.
class PolicyCache {
 public:
  const TrainedPolicy& get(const SimConfig& cfg, std::uint64_t seed, Scheme scheme);
  std::size_t trainings() const { return trainings_; }

 private:
  std::map<std::string, TrainedPolicy> entries_;
  std::size_t trainings_ = 0;
};

TrainedPolicy train_policy(const SimConfig& cfg, std::uint64_t seed, Scheme scheme);

struct ExperimentOptions {
  PolicyCache* cache = nullptr;
  bool include_training_rows = true;
  // Deploy this actor instead of training one (agent schemes only).
  const ModelParams* actor = nullptr;
};

struct ExperimentResult {
  Scheme scheme = Scheme::ddafl;
  std::string run_id;
  std::string config_hash;
  std::vector<MetricsRow> rows;
  std::vector<UploadRow> uploads;
  std::vector<double> episode_rewards;  // training stage; empty for baselines
  std::vector<double> admission_rate;   // per vehicle over test slots
  std::vector<double> test_loss_trace;  // per slot index, mean avg_loss over test episodes
  double final_avg_loss = 0.0;          // final slot, mean over test episodes
  double final_accuracy = 0.0;
  double final_error_rate = 0.0;
  std::size_t filter_calls = 0;
  std::size_t filter_violations = 0;    // accepted uploads with loss > beta_r * rsu_loss
  std::uint64_t world_digest = 0;       // over every test slot's realization
  std::vector<std::uint64_t> train_world_digests;  // per training slot
};

ExperimentResult run_experiment(Scheme scheme, const SimConfig& cfg, std::uint64_t seed,
                                const ExperimentOptions& options = {});

// Population variance of the last half of the entries (the later
// ceil(n/2) ones).
double tail_variance(std::span<const double> trace);

struct SweepPoint {
  double fraction = 0.0;
  AttackKind attack = AttackKind::none;
  double defended_error = 0.0;
  double undefended_error = 0.0;
  double defended_accuracy = 0.0;
  double undefended_accuracy = 0.0;
  double defended_loss = 0.0;
  double undefended_loss = 0.0;
  double defended_tail_variance = 0.0;
  double undefended_tail_variance = 0.0;
  std::size_t filter_violations = 0;
  std::vector<MetricsRow> rows;  // test rows of both schemes
};

// ddafl vs ddafl_no_defense at each fraction, same seed. Throws
// std::invalid_argument for fractions outside [0, 1].
std::vector<SweepPoint> attack_sweep(const SimConfig& cfg, std::span<const double> fractions, AttackKind attack,
                                     std::uint64_t seed, PolicyCache* cache = nullptr);

}  // namespace ddafl

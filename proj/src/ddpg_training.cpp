#include "ddafl/ddpg_training.hpp"

#include <algorithm>

#include "ddafl/local_model.hpp"

namespace ddafl {

namespace {

GlobalModel fresh_global(const SimConfig& cfg, std::uint64_t seed, std::uint64_t key) {
  return GlobalModel{init_params(cfg.classifier_widths(),
                                 derive_seed({seed, static_cast<std::uint64_t>(Stream::global_init), key})),
                     0};
}

SlotRecord record_slot(Phase phase, std::size_t episode, const World& world, const SlotOutcome& out) {
  SlotRecord rec;
  rec.phase = phase;
  rec.episode = episode;
  rec.slot = world.slot();
  rec.avg_loss = out.avg_loss;
  rec.rsu_loss = out.rsu_loss;
  const Evaluation eval = evaluate(out.global.params, world.test_set());
  rec.accuracy = eval.accuracy;
  rec.error_rate = eval.error_rate;
  rec.accepted = out.accepted;
  rec.rejected = out.rejected;
  rec.filter_calls = out.filter_calls;
  rec.mean_delay = out.mean_delay;
  rec.reports = out.reports;
  std::size_t attacked = 0;
  for (const auto& r : out.reports) attacked += r.attacked ? 1 : 0;
  rec.attacked_fraction = out.reports.empty() ? 0.0 : static_cast<double>(attacked) / static_cast<double>(out.reports.size());
  rec.world_digest = world.trace_digest();
  return rec;
}

}  // namespace

StateScale state_scale(const SimConfig& cfg) {
  return StateScale{cfg.bandwidth_hz * cfg.rate_norm_factor, cfg.compute_max, cfg.coverage_radius};
}

std::vector<double> clip_action(const Action& raw, double floor) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = std::clamp(raw[i], floor, 1.0);
  return out;
}

SimConfig training_config(const SimConfig& cfg) {
  SimConfig t = cfg;
  t.attack = "none";
  t.attack_fraction = 0.0;
  return t;
}

TrainResult train_agent(const SimConfig& cfg_in, std::uint64_t seed, const AflSettings& settings) {
  const SimConfig cfg = training_config(cfg_in);
  World world(cfg, seed);
  const std::size_t k = cfg.num_vehicles;
  const StateScale scale = state_scale(cfg);

  TrainResult result;
  result.nets = make_agent_nets(k, {cfg.hidden1, cfg.hidden2},
                                derive_seed({seed, static_cast<std::uint64_t>(Stream::agent_init)}));
  AgentNets& nets = result.nets;
  const auto kind = Optimizer::parse_kind(cfg.ddpg_optimizer);
  Optimizer actor_opt(kind, cfg.actor_lr);
  Optimizer critic_opt(kind, cfg.critic_lr);
  ReplayBuffer buffer(cfg.replay_capacity);
  Rng explore(derive_seed({seed, static_cast<std::uint64_t>(Stream::exploration)}));
  Rng replay_rng(derive_seed({seed, static_cast<std::uint64_t>(Stream::replay)}));

  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const std::uint64_t key = episode_key(Phase::train, ep);
    world.reset_episode(key);
    GlobalModel global = fresh_global(cfg, seed, key);
    RsuState rsu{global.params};
    std::vector<double> prev_action(k, 1.0);
    std::vector<double> noise(k, 0.0);
    Eigen::VectorXd obs = observation(build_state(world, prev_action), scale);
    double episode_reward = 0.0;

    for (std::size_t t = 0; t < cfg.slots_per_episode; ++t) {
      Action mu = actor_forward(nets.actor, obs);
      noise = ou_noise_step(noise, cfg.ou_theta, cfg.ou_sigma(), explore);
      Action noisy(k);
      for (std::size_t i = 0; i < k; ++i) noisy[i] = mu[i] + noise[i];
      const std::vector<double> lambdas = clip_action(noisy, cfg.lambda_floor);
      const std::vector<bool> mask = binarize_action(lambdas);
      const std::vector<int> ids = admitted_ids(mask);

      SlotOutcome out = run_afl_slot(ids, global, world, rsu, settings);
      const double r = reward(lambdas, mask, out.avg_loss, out.delays, cfg.w1, cfg.w2);
      episode_reward += r;

      SlotRecord rec = record_slot(Phase::train, ep, world, out);
      rec.lambdas = lambdas;
      rec.mask = mask;
      rec.reward = r;
      result.slots.push_back(std::move(rec));

      global = std::move(out.global);
      world.advance();
      Eigen::VectorXd next_obs = observation(build_state(world, lambdas), scale);
      buffer.push(Transition{obs, Eigen::Map<const Eigen::VectorXd>(lambdas.data(), static_cast<Eigen::Index>(k)), r,
                             next_obs});
      ++result.transitions;

      if (buffer.size() > cfg.minibatch) {
        const auto idx = buffer.sample_indices(cfg.minibatch, replay_rng);
        const Minibatch batch = gather(buffer, idx);
        critic_update(nets, batch, cfg.gamma, critic_opt);
        actor_update(nets, batch, actor_opt);
        soft_update(nets.critic, nets.target_critic, cfg.tau);
        soft_update(nets.actor, nets.target_actor, cfg.tau);
        ++result.updates;
      }
      obs = std::move(next_obs);
    }
    result.episode_rewards.push_back(episode_reward);
  }
  result.rng_digest = derive_seed({explore.digest(), replay_rng.digest()});
  return result;
}

TestResult test_policy(const ModelParams& actor, const SimConfig& cfg, std::uint64_t seed,
                       const AflSettings& settings) {
  World world(cfg, seed);
  const std::size_t k = cfg.num_vehicles;
  const StateScale scale = state_scale(cfg);
  TestResult result;
  result.admissions.assign(k, 0);
  for (std::size_t ep = 0; ep < cfg.test_episodes; ++ep) {
    const std::uint64_t key = episode_key(Phase::test, ep);
    world.reset_episode(key);
    GlobalModel global = fresh_global(cfg, seed, key);
    RsuState rsu{global.params};
    std::vector<double> prev_action(k, 1.0);
    for (std::size_t t = 0; t < cfg.slots_per_episode; ++t) {
      const Eigen::VectorXd obs = observation(build_state(world, prev_action), scale);
      const std::vector<double> lambdas = clip_action(actor_forward(actor, obs), cfg.lambda_floor);
      const std::vector<bool> mask = binarize_action(lambdas);
      const std::vector<int> ids = admitted_ids(mask);
      for (int id : ids) ++result.admissions[static_cast<std::size_t>(id)];

      SlotOutcome out = run_afl_slot(ids, global, world, rsu, settings);
      SlotRecord rec = record_slot(Phase::test, ep, world, out);
      rec.lambdas = lambdas;
      rec.mask = mask;
      rec.reward = reward(lambdas, mask, out.avg_loss, out.delays, cfg.w1, cfg.w2);
      result.slots.push_back(std::move(rec));
      ++result.slot_count;

      global = std::move(out.global);
      prev_action = lambdas;
      world.advance();
    }
  }
  return result;
}

TestResult run_baseline(BaselineKind kind, const SimConfig& cfg, std::uint64_t seed, const AflSettings& settings) {
  World world(cfg, seed);
  TestResult result;
  result.admissions.assign(cfg.num_vehicles, 0);
  for (std::size_t ep = 0; ep < cfg.test_episodes; ++ep) {
    const std::uint64_t key = episode_key(Phase::test, ep);
    world.reset_episode(key);
    GlobalModel global = fresh_global(cfg, seed, key);
    for (std::size_t t = 0; t < cfg.slots_per_episode; ++t) {
      SlotOutcome out = kind == BaselineKind::sync_fl ? run_sync_fl_round(global, world, settings)
                                                      : run_plain_afl_round(global, world, settings);
      for (auto& a : result.admissions) ++a;
      SlotRecord rec = record_slot(Phase::test, ep, world, out);
      rec.mask.assign(cfg.num_vehicles, true);
      result.slots.push_back(std::move(rec));
      ++result.slot_count;
      global = std::move(out.global);
      world.advance();
    }
  }
  return result;
}

}  // namespace ddafl

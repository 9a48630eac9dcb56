#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ddafl/checkpoint.hpp"
#include "ddafl/config.hpp"
#include "ddafl/errors.hpp"
#include "ddafl/experiment.hpp"
#include "ddafl/metrics.hpp"
#include "doctest.h"
#include "small_config.hpp"

using namespace ddafl;
using doctest::Approx;

namespace {

std::string csv_of(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  emit_metrics(rows, out);
  return out.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ddafl_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config: defaults, parsing, validation, round trip") {
  const SimConfig empty = parse_config("");
  CHECK(empty.speed == 20.0);
  CHECK(empty == SimConfig{});
  CHECK(empty.episodes == 1000);
  CHECK(empty.test_episodes == 3);
  CHECK(empty.noise_power_w() == Approx(1e-12));
  CHECK(empty.beta_r == 1.25);
  CHECK(empty.wavelength == 7.0);

  const SimConfig c = parse_config("# comment\nspeed = 25\n\nattack = data_flip\n  gamma=0.9  \n");
  CHECK(c.speed == 25.0);
  CHECK(c.attack == "data_flip");
  CHECK(c.gamma == 0.9);

  auto key_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  CHECK(key_of("gamma = 1.5") == "gamma");
  CHECK(key_of("tau = 0.5") == "tau");
  CHECK(key_of("m1 = 1") == "m1");
  CHECK(key_of("aggregation_beta = 0") == "aggregation_beta");
  CHECK(key_of("beta_r = 0") == "beta_r");
  CHECK(key_of("warp_factor = 9") == "warp_factor");
  CHECK(key_of("speed = fast") == "speed");
  CHECK(key_of("speed = 1\nspeed = 2") == "speed");
  CHECK(key_of("attack = label_swap") == "attack");

  SimConfig d;
  d.m1 = 0.123456789012345678;
  d.attack = "class_flip";
  d.attack_fraction = 0.4;
  d.seed = 77;
  CHECK(parse_config(serialize_config(d)) == d);
  const auto dir = scratch_dir("config");
  save_config(d, (dir / "c.txt").string());
  CHECK(load_config((dir / "c.txt").string()) == d);
  CHECK_THROWS(load_config((dir / "missing.txt").string()));
  CHECK(config_hash(d) == config_hash(parse_config(serialize_config(d))));
  CHECK(config_hash(d) != config_hash(SimConfig{}));
  CHECK(config_hash(d).size() == 16);
}

TEST_CASE("metrics: emission, determinism and parse-back") {
  MetricsRow r;
  r.run_id = "x";
  r.scheme = "ddafl";
  r.phase = "test";
  r.episode = 2;
  r.slot = 7;
  r.avg_loss = 0.123456789123;
  r.accuracy = 2.0 / 3.0;
  r.error_rate = 1.0 / 3.0;
  r.reward = std::nan("");
  r.mean_delay = 1e-7;
  r.selected = "11010";
  r.config_hash = "abc";
  const std::string one = csv_of({r});
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  CHECK(csv_of({r, r}) == csv_of({r, r}));
  std::istringstream in(csv_of({r}));
  const auto back = parse_metrics(in);
  REQUIRE(back.size() == 1);
  CHECK(back[0].avg_loss == Approx(r.avg_loss).epsilon(1e-9));
  CHECK(back[0].accuracy == Approx(r.accuracy).epsilon(1e-9));
  CHECK(back[0].mean_delay == Approx(r.mean_delay).epsilon(1e-9));
  CHECK(std::isnan(back[0].reward));
  CHECK(back[0].selected == "11010");
  CHECK(back[0].episode == 2);
  CHECK(format_float(0.1) == "0.1");
  CHECK(format_float(1.0 / 3.0) == "0.333333333");
  CHECK_THROWS(csv_of({}));
  CHECK_THROWS(emit_metrics({r}, "/nonexistent-dir/metrics.csv"));
}

TEST_CASE("checkpoint round trip") {
  const AgentNets n = make_agent_nets(5, {12, 8}, 4);
  const auto dir = scratch_dir("ckpt");
  save_checkpoint(dir, n, {17, "0123456789abcdef", 42});
  const Checkpoint cp = load_checkpoint(dir);
  CHECK(cp.nets.actor == n.actor);
  CHECK(cp.nets.critic == n.critic);
  CHECK(cp.nets.target_actor == n.target_actor);
  CHECK(cp.nets.target_critic == n.target_critic);
  CHECK(cp.manifest.episodes == 17);
  CHECK(cp.manifest.config_hash == "0123456789abcdef");
  CHECK(cp.manifest.rng_digest == 42);
  std::filesystem::remove(dir / "critic.params");
  CHECK_THROWS(load_checkpoint(dir));
}

TEST_CASE("schemes") {
  for (const char* name : {"ddafl", "ddafl_no_defense", "ddafl_no_lt", "ddafl_no_ct", "plain_afl", "sync_fl"})
    CHECK(to_string(parse_scheme(name)) == name);
  CHECK_THROWS_AS(parse_scheme("fedavg"), ConfigError);
  const SimConfig c;
  CHECK(settings_for(Scheme::ddafl, c).defense_on);
  CHECK_FALSE(settings_for(Scheme::ddafl_no_defense, c).defense_on);
  CHECK_FALSE(settings_for(Scheme::ddafl_no_lt, c).use_local_weight);
  CHECK(settings_for(Scheme::ddafl_no_lt, c).use_tx_weight);
  CHECK_FALSE(settings_for(Scheme::ddafl_no_ct, c).use_tx_weight);
  CHECK_FALSE(settings_for(Scheme::sync_fl, c).defense_on);
}

TEST_CASE("tail_variance") {
  const std::vector<double> t{100, -50, 1, 3};
  CHECK(tail_variance(t) == Approx(1.0));
  const std::vector<double> five{50, 7, 2, 2, 2};
  CHECK(tail_variance(five) == 0.0);
  const std::vector<double> odd{9, 2, 4, 2};
  CHECK(tail_variance(odd) == Approx(1.0));
}

TEST_CASE("experiment: determinism, filter soundness and paired realizations") {
  const SimConfig c = testing::small_config();
  PolicyCache cache;
  const ExperimentResult a = run_experiment(Scheme::ddafl, c, 3, {&cache, true});
  const ExperimentResult b = run_experiment(Scheme::ddafl, c, 3);
  CHECK(csv_of(a.rows) == csv_of(b.rows));
  CHECK(a.filter_violations == 0);
  CHECK(a.filter_calls > 0);
  for (const auto& r : a.rows) CHECK(r.config_hash == config_hash(c));

  // (episode, slot) is monotone within each phase.
  long last_ep = -1, last_slot = -2;
  std::string phase;
  for (const auto& r : a.rows) {
    if (r.phase != phase) {
      phase = r.phase;
      last_ep = -1;
      last_slot = -2;
    }
    CHECK((r.episode > last_ep || (r.episode == last_ep && r.slot > last_slot)));
    last_ep = r.episode;
    last_slot = r.slot;
  }

  const ExperimentResult sync = run_experiment(Scheme::sync_fl, c, 3);
  const ExperimentResult plain = run_experiment(Scheme::plain_afl, c, 3);
  const ExperimentResult undefended = run_experiment(Scheme::ddafl_no_defense, c, 3, {&cache, true});
  CHECK(sync.filter_calls == 0);
  CHECK(plain.filter_calls == 0);
  CHECK(undefended.filter_calls == 0);
  CHECK(cache.trainings() == 1);
  // Same seed: identical channel, compute and mobility under every scheme.
  CHECK(sync.world_digest == a.world_digest);
  CHECK(plain.world_digest == a.world_digest);
  CHECK(undefended.world_digest == a.world_digest);
  CHECK(run_experiment(Scheme::sync_fl, c, 4).world_digest != a.world_digest);
}

TEST_CASE("experiment: ablation weights") {
  const SimConfig c = testing::small_config();
  const ExperimentResult lt = run_experiment(Scheme::ddafl_no_lt, c, 2);
  const ExperimentResult ct = run_experiment(Scheme::ddafl_no_ct, c, 2);
  CHECK(lt.train_world_digests == ct.train_world_digests);
  CHECK_FALSE(lt.uploads.empty());
  for (const auto& u : lt.uploads) CHECK(u.beta1 == 1.0);
  for (const auto& u : ct.uploads) CHECK(u.beta2 == 1.0);
  for (const auto& r : lt.rows) {
    CHECK(r.beta1_min == 1.0);
    CHECK(r.beta1_max == 1.0);
  }
  CHECK(lt.filter_violations == 0);
  CHECK(ct.filter_violations == 0);
}

TEST_CASE("attack sweep on the reduced configuration") {
  SimConfig c = testing::small_config();
  c.bad_vehicle = -1;
  const std::vector<double> fractions{0.0, 0.4};
  PolicyCache cache;
  const auto pts = attack_sweep(c, fractions, AttackKind::class_flip, 5, &cache);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].fraction == 0.0);
  CHECK(pts[1].fraction == 0.4);
  CHECK(cache.trainings() == 1);
  for (const auto& p : pts) CHECK(p.filter_violations == 0);
  const std::vector<double> bad{0.5, 1.5};
  CHECK_THROWS(attack_sweep(c, bad, AttackKind::class_flip, 5));
}

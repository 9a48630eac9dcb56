// Command-line driver: train | test | baseline | ablation | sweep.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ddafl/checkpoint.hpp"
#include "ddafl/config.hpp"
#include "ddafl/errors.hpp"
#include "ddafl/experiment.hpp"
#include "ddafl/metrics.hpp"

namespace fs = std::filesystem;
using namespace ddafl;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "key = value config file (defaults when omitted)");
  cmd->add_option("--seed", a.seed, "run seed (default: $SIM_SEED, then the config's seed)");
  cmd->add_option("--out", a.out, "output directory")->capture_default_str();
}

SimConfig load(const CommonArgs& a) { return a.config_path.empty() ? SimConfig{} : load_config(a.config_path); }

std::uint64_t resolve_seed(const CommonArgs& a, const SimConfig& cfg) {
  if (a.seed) return *a.seed;
  if (const char* env = std::getenv("SIM_SEED"); env && *env) {
    std::size_t used = 0;
    const std::string s(env);
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw ConfigError("SIM_SEED", "not an unsigned integer: " + s);
    return v;
  }
  return cfg.seed;
}

void write_run(const ExperimentResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  emit_metrics(r.rows, (dir / (r.run_id + "_metrics.csv")).string());
  emit_uploads(r.uploads, (dir / (r.run_id + "_uploads.csv")).string());
}

void print_summary(const ExperimentResult& r) {
  std::cout << r.run_id << ": final avg_loss " << format_float(r.final_avg_loss) << ", accuracy "
            << format_float(r.final_accuracy) << ", error_rate " << format_float(r.final_error_rate)
            << ", filter calls " << r.filter_calls << ", config " << r.config_hash << '\n';
}

int cmd_train(const CommonArgs& a) {
  SimConfig cfg = load(a);
  const std::uint64_t seed = resolve_seed(a, cfg);
  const TrainedPolicy p = train_policy(cfg, seed, Scheme::ddafl);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_checkpoint(dir / "checkpoint", p.nets, {p.episode_rewards.size(), config_hash(cfg), p.rng_digest});
  save_config(cfg, (dir / "config.txt").string());

  std::ofstream rewards(dir / "episode_rewards.csv");
  rewards << "episode,reward\n";
  for (std::size_t i = 0; i < p.episode_rewards.size(); ++i)
    rewards << i << ',' << format_float(p.episode_rewards[i]) << '\n';
  if (!rewards) throw std::runtime_error("cannot write episode_rewards.csv");
  std::cout << "trained " << p.episode_rewards.size() << " episodes; checkpoint in " << (dir / "checkpoint") << '\n';
  return 0;
}

int cmd_test(const CommonArgs& a, const std::string& scheme_name, const std::string& checkpoint) {
  SimConfig cfg = load(a);
  const std::uint64_t seed = resolve_seed(a, cfg);
  const Scheme scheme = parse_scheme(scheme_name);
  ExperimentOptions opts;
  std::optional<Checkpoint> cp;
  if (!checkpoint.empty()) {
    if (!uses_agent(scheme)) throw ConfigError("scheme", scheme_name + " does not use a selector checkpoint");
    cp = load_checkpoint(checkpoint);
    opts.actor = &cp->nets.actor;
  }
  const ExperimentResult r = run_experiment(scheme, cfg, seed, opts);
  write_run(r, a.out);
  print_summary(r);
  return 0;
}

int cmd_baseline(const CommonArgs& a, const std::string& scheme_name) {
  const Scheme scheme = parse_scheme(scheme_name);
  if (uses_agent(scheme)) throw ConfigError("scheme", "baseline expects plain_afl or sync_fl, got " + scheme_name);
  return cmd_test(a, scheme_name, "");
}

int cmd_ablation(const CommonArgs& a) {
  SimConfig cfg = load(a);
  const std::uint64_t seed = resolve_seed(a, cfg);
  PolicyCache cache;
  for (Scheme s : {Scheme::ddafl, Scheme::ddafl_no_lt, Scheme::ddafl_no_ct}) {
    const ExperimentResult r = run_experiment(s, cfg, seed, {&cache, true});
    write_run(r, a.out);
    print_summary(r);
  }
  return 0;
}

int cmd_sweep(const CommonArgs& a, const std::string& attack_name, const std::vector<double>& fractions) {
  SimConfig cfg = load(a);
  const std::uint64_t seed = resolve_seed(a, cfg);
  const AttackKind attack = parse_attack(attack_name);
  const auto points = attack_sweep(cfg, fractions, attack, seed);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<MetricsRow> rows;
  std::ofstream summary(dir / ("sweep_" + attack_name + ".csv"));
  summary << "attack,fraction,defended_error,undefended_error,defended_accuracy,undefended_accuracy,"
             "defended_loss,undefended_loss,config_hash\n";
  for (const auto& p : points) {
    summary << attack_name << ',' << format_float(p.fraction) << ',' << format_float(p.defended_error) << ','
            << format_float(p.undefended_error) << ',' << format_float(p.defended_accuracy) << ','
            << format_float(p.undefended_accuracy) << ',' << format_float(p.defended_loss) << ','
            << format_float(p.undefended_loss) << ',' << (p.rows.empty() ? "" : p.rows.front().config_hash)
            << '\n';
    std::cout << attack_name << " fraction " << format_float(p.fraction) << ": error defended "
              << format_float(p.defended_error) << ", undefended " << format_float(p.undefended_error) << '\n';
    rows.insert(rows.end(), p.rows.begin(), p.rows.end());
  }
  if (!summary) throw std::runtime_error("cannot write sweep summary");
  if (!rows.empty()) emit_metrics(rows, (dir / ("sweep_" + attack_name + "_metrics.csv")).string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicle-selection asynchronous federated learning simulator"};
  app.require_subcommand(1);

  CommonArgs train_args, test_args, base_args, abl_args, sweep_args;
  std::string test_scheme = "ddafl", checkpoint, base_scheme = "sync_fl", attack = "class_flip";
  std::vector<double> fractions{0.0, 0.2, 0.4};

  auto* train = app.add_subcommand("train", "train the selector and save a checkpoint");
  add_common(train, train_args);
  auto* test = app.add_subcommand("test", "run one scheme end to end (training first unless --checkpoint)");
  add_common(test, test_args);
  test->add_option("--scheme", test_scheme, "ddafl|ddafl_no_defense|ddafl_no_lt|ddafl_no_ct|plain_afl|sync_fl")
      ->capture_default_str();
  test->add_option("--checkpoint", checkpoint, "directory written by train");
  auto* base = app.add_subcommand("baseline", "run plain_afl or sync_fl");
  add_common(base, base_args);
  base->add_option("--scheme", base_scheme, "plain_afl|sync_fl")->capture_default_str();
  auto* abl = app.add_subcommand("ablation", "ddafl against ddafl_no_lt and ddafl_no_ct");
  add_common(abl, abl_args);
  auto* sweep = app.add_subcommand("sweep", "defended vs undefended error across attacked fractions");
  add_common(sweep, sweep_args);
  sweep->add_option("--attack", attack, "class_flip|data_flip")->capture_default_str();
  sweep->add_option("--fractions", fractions, "attacked fractions in [0, 1]")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*test) return cmd_test(test_args, test_scheme, checkpoint);
    if (*base) return cmd_baseline(base_args, base_scheme);
    if (*abl) return cmd_ablation(abl_args);
    if (*sweep) return cmd_sweep(sweep_args, attack, fractions);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

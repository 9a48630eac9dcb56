#include "ddafl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "ddafl/errors.hpp"

namespace ddafl {

namespace {

// Visits every persisted field in canonical order. The same table drives
// parsing, serialization and unknown-key detection.
template <typename Config, typename Visitor>
void for_each_field(Config& c, Visitor&& v) {
  v("speed", c.speed);
  v("slot_duration", c.slot_duration);
  v("num_vehicles", c.num_vehicles);
  v("minibatch", c.minibatch);
  v("tx_power_w", c.tx_power_w);
  v("episodes", c.episodes);
  v("noise_power_mw", c.noise_power_mw);
  v("test_episodes", c.test_episodes);
  v("rsu_height", c.rsu_height);
  v("bandwidth_hz", c.bandwidth_hz);
  v("model_bits", c.model_bits);
  v("gamma", c.gamma);
  v("path_loss_exp", c.path_loss_exp);
  v("cycles_per_sample", c.cycles_per_sample);
  v("m1", c.m1);
  v("tau", c.tau);
  v("m2", c.m2);
  v("lane_offset", c.lane_offset);
  v("beta_r", c.beta_r);
  v("wavelength", c.wavelength);
  v("w1", c.w1);
  v("w2", c.w2);
  v("local_lr", c.local_lr);
  v("local_rounds", c.local_rounds);
  v("local_batch", c.local_batch);
  v("slots_per_episode", c.slots_per_episode);
  v("aggregation_beta", c.aggregation_beta);
  v("actor_lr", c.actor_lr);
  v("critic_lr", c.critic_lr);
  v("ddpg_optimizer", c.ddpg_optimizer);
  v("replay_capacity", c.replay_capacity);
  v("hidden1", c.hidden1);
  v("hidden2", c.hidden2);
  v("ou_theta", c.ou_theta);
  v("ou_variance", c.ou_variance);
  v("lambda_floor", c.lambda_floor);
  v("rate_norm_factor", c.rate_norm_factor);
  v("dataset", c.dataset);
  v("dataset_size", c.dataset_size);
  v("feature_count", c.feature_count);
  v("data_separation", c.data_separation);
  v("data_noise", c.data_noise);
  v("classifier_hidden", c.classifier_hidden);
  v("shard_size", c.shard_size);
  v("rsu_shard_size", c.rsu_shard_size);
  v("rsu_holdout_size", c.rsu_holdout_size);
  v("test_set_size", c.test_set_size);
  v("compute_mean", c.compute_mean);
  v("compute_std", c.compute_std);
  v("compute_min", c.compute_min);
  v("compute_max", c.compute_max);
  v("coverage_radius", c.coverage_radius);
  v("start_x_min", c.start_x_min);
  v("start_x_max", c.start_x_max);
  v("bad_vehicle", c.bad_vehicle);
  v("bad_data_fraction", c.bad_data_fraction);
  v("bad_compute_mean", c.bad_compute_mean);
  v("bad_noise_scale", c.bad_noise_scale);
  v("attack", c.attack);
  v("attack_fraction", c.attack_fraction);
  v("attack_persistent", c.attack_persistent);
  v("transient_attack_prob", c.transient_attack_prob);
  v("loss_average", c.loss_average);
  v("rsu_warm_start", c.rsu_warm_start);
  v("screening_loss", c.screening_loss);
  v("seed", c.seed);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
void parse_value(const std::string& key, const std::string& text, T& out) {
  if constexpr (std::is_same_v<T, std::string>) {
    out = text;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") out = true;
    else if (text == "false" || text == "0") out = false;
    else throw ConfigError(key, "expected true or false, got '" + text + "'");
  } else if constexpr (std::is_same_v<T, double>) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty()) throw ConfigError(key, "expected a number, got '" + text + "'");
    out = v;
  } else {
    if (!text.empty() && text[0] == '-' && std::is_unsigned_v<T>) {
      throw ConfigError(key, "must be nonnegative, got '" + text + "'");
    }
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ConfigError(key, "expected an integer, got '" + text + "'");
    }
    out = v;
  }
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, double>) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  } else {
    return std::to_string(v);
  }
}

void require(bool ok, const char* key, const std::string& why) {
  if (!ok) throw ConfigError(key, why);
}

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

LinkBudget SimConfig::link_budget() const {
  return LinkBudget{bandwidth_hz, tx_power_w, noise_power_w(), path_loss_exp};
}

double SimConfig::ou_sigma() const { return std::sqrt(ou_variance); }

std::vector<std::size_t> SimConfig::classifier_widths() const {
  std::vector<std::size_t> widths{feature_count};
  std::stringstream ss(classifier_hidden);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) continue;
    std::size_t w = 0;
    parse_value("classifier_hidden", cell, w);
    widths.push_back(w);
  }
  widths.push_back(kNumClasses);
  return widths;
}

std::size_t SimConfig::attacked_count() const {
  return static_cast<std::size_t>(std::llround(attack_fraction * static_cast<double>(num_vehicles)));
}

void validate(const SimConfig& c) {
  require(std::isfinite(c.speed) && c.speed >= 0.0, "speed", "must be finite and nonnegative");
  require(c.slot_duration > 0.0, "slot_duration", "must be positive");
  require(c.num_vehicles >= 1, "num_vehicles", "must be at least 1");
  require(c.minibatch >= 1, "minibatch", "must be at least 1");
  require(c.tx_power_w > 0.0, "tx_power_w", "must be positive");
  require(c.noise_power_mw > 0.0, "noise_power_mw", "must be positive");
  require(c.rsu_height > 0.0, "rsu_height", "must be positive");
  require(c.bandwidth_hz > 0.0, "bandwidth_hz", "must be positive");
  require(c.model_bits > 0.0, "model_bits", "must be positive");
  require(in_open_unit(c.gamma), "gamma", "must lie in (0, 1)");
  require(c.path_loss_exp > 0.0, "path_loss_exp", "must be positive");
  require(c.cycles_per_sample > 0.0, "cycles_per_sample", "must be positive");
  require(in_open_unit(c.m1), "m1", "must lie in (0, 1)");
  require(c.tau > 0.0 && c.tau <= 0.1, "tau", "must lie in (0, 0.1]");
  require(in_open_unit(c.m2), "m2", "must lie in (0, 1)");
  require(c.beta_r > 0.0, "beta_r", "must be positive");
  require(c.wavelength > 0.0, "wavelength", "must be positive");
  require(c.w1 >= 0.0, "w1", "must be nonnegative");
  require(c.w2 >= 0.0, "w2", "must be nonnegative");
  require(c.local_lr >= 0.0, "local_lr", "must be nonnegative");
  require(c.local_rounds >= 1, "local_rounds", "must be at least 1");
  require(c.local_batch >= 1, "local_batch", "must be at least 1");
  require(c.slots_per_episode >= 1, "slots_per_episode", "must be at least 1");
  require(in_open_unit(c.aggregation_beta), "aggregation_beta", "must lie in (0, 1)");
  require(c.actor_lr > 0.0, "actor_lr", "must be positive");
  require(c.critic_lr > 0.0, "critic_lr", "must be positive");
  require(c.ddpg_optimizer == "adam" || c.ddpg_optimizer == "sgd", "ddpg_optimizer", "must be adam or sgd");
  require(c.replay_capacity > c.minibatch, "replay_capacity", "must exceed minibatch");
  require(c.hidden1 >= 1 && c.hidden2 >= 1, c.hidden1 >= 1 ? "hidden2" : "hidden1", "must be positive");
  require(c.ou_theta > 0.0 && c.ou_theta <= 1.0, "ou_theta", "must lie in (0, 1]");
  require(c.ou_variance >= 0.0, "ou_variance", "must be nonnegative");
  require(c.lambda_floor > 0.0 && c.lambda_floor < 0.5, "lambda_floor", "must lie in (0, 0.5)");
  require(c.rate_norm_factor > 0.0, "rate_norm_factor", "must be positive");
  require(c.feature_count >= 1, "feature_count", "must be positive");
  require(c.data_noise >= 0.0, "data_noise", "must be nonnegative");
  require(c.shard_size >= 1, "shard_size", "must be positive");
  require(c.rsu_shard_size >= 1, "rsu_shard_size", "must be positive");
  require(c.test_set_size >= 1, "test_set_size", "must be positive");
  require(c.compute_std >= 0.0, "compute_std", "must be nonnegative");
  require(c.compute_min > 0.0 && c.compute_min <= c.compute_max, "compute_min", "must be positive and <= compute_max");
  require(c.coverage_radius > 0.0, "coverage_radius", "must be positive");
  require(c.start_x_min <= c.start_x_max, "start_x_min", "must not exceed start_x_max");
  require(c.bad_vehicle >= -1 && c.bad_vehicle < static_cast<int>(c.num_vehicles), "bad_vehicle",
          "must be -1 or a vehicle index");
  require(c.bad_data_fraction > 0.0 && c.bad_data_fraction <= 1.0, "bad_data_fraction", "must lie in (0, 1]");
  require(c.bad_compute_mean > 0.0, "bad_compute_mean", "must be positive");
  require(c.bad_noise_scale >= 0.0, "bad_noise_scale", "must be nonnegative");
  require(c.attack == "none" || c.attack == "class_flip" || c.attack == "data_flip", "attack",
          "must be none, class_flip or data_flip");
  require(c.attack_fraction >= 0.0 && c.attack_fraction <= 1.0, "attack_fraction", "must lie in [0, 1]");
  require(c.transient_attack_prob >= 0.0 && c.transient_attack_prob <= 1.0, "transient_attack_prob",
          "must lie in [0, 1]");
  require(c.loss_average == "all" || c.loss_average == "accepted", "loss_average", "must be all or accepted");
  require(c.screening_loss == "trusted" || c.screening_loss == "local", "screening_loss", "must be trusted or local");
  for (std::size_t w : c.classifier_widths()) require(w >= 1, "classifier_hidden", "widths must be positive");
}

void set_config_value(SimConfig& cfg, const std::string& key, const std::string& value) {
  bool found = false;
  for_each_field(cfg, [&](const char* name, auto& field) {
    if (key == name) {
      parse_value(key, value, field);
      found = true;
    }
  });
  if (!found) throw ConfigError(key, "unknown key");
}

SimConfig parse_config(const std::string& text) {
  SimConfig cfg;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    set_config_value(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const SimConfig& cfg) {
  std::string out;
  for_each_field(cfg, [&](const char* name, const auto& field) {
    out += name;
    out += " = ";
    out += format_value(field);
    out += '\n';
  });
  return out;
}

void save_config(const SimConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  out << serialize_config(cfg);
  if (!out) throw std::runtime_error("cannot write config file " + path);
}

std::string config_hash(const SimConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ddafl

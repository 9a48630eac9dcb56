#include "ddafl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ddafl/errors.hpp"

namespace ddafl {

namespace {

constexpr Scheme kAllSchemes[] = {Scheme::ddafl,       Scheme::ddafl_no_defense, Scheme::ddafl_no_lt,
                                  Scheme::ddafl_no_ct, Scheme::plain_afl,        Scheme::sync_fl};

std::string mask_string(const std::vector<bool>& mask) {
  std::string s;
  for (bool b : mask) s.push_back(b ? '1' : '0');
  return s;
}

MetricsRow slot_row(const SlotRecord& rec, const std::string& run_id, const std::string& scheme,
                    const std::string& hash) {
  MetricsRow r;
  r.run_id = run_id;
  r.scheme = scheme;
  r.phase = rec.phase == Phase::train ? "train" : "test";
  r.episode = static_cast<long>(rec.episode);
  r.slot = static_cast<long>(rec.slot);
  r.avg_loss = rec.avg_loss;
  r.accuracy = rec.accuracy;
  r.error_rate = rec.error_rate;
  r.reward = rec.reward;
  r.attacked_fraction = rec.attacked_fraction;
  r.accepted_count = static_cast<long>(rec.accepted);
  r.rejected_count = static_cast<long>(rec.rejected);
  r.mean_delay = rec.mean_delay;
  double b1lo = 1.0, b1hi = 1.0, b2lo = 1.0, b2hi = 1.0;
  bool first = true;
  for (const auto& u : rec.reports) {
    if (!u.uploaded) continue;
    if (first) {
      b1lo = b1hi = u.beta1;
      b2lo = b2hi = u.beta2;
      first = false;
    }
    b1lo = std::min(b1lo, u.beta1);
    b1hi = std::max(b1hi, u.beta1);
    b2lo = std::min(b2lo, u.beta2);
    b2hi = std::max(b2hi, u.beta2);
  }
  r.beta1_min = b1lo;
  r.beta1_max = b1hi;
  r.beta2_min = b2lo;
  r.beta2_max = b2hi;
  r.selected = mask_string(rec.mask);
  r.config_hash = hash;
  return r;
}

MetricsRow episode_row(std::span<const SlotRecord> slots, const std::string& run_id, const std::string& scheme,
                       const std::string& hash) {
  MetricsRow r = slot_row(slots.back(), run_id, scheme, hash);
  r.slot = -1;
  r.selected.clear();
  double reward = 0.0, attacked = 0.0, delay = 0.0;
  long accepted = 0, rejected = 0;
  double b1lo = r.beta1_min, b1hi = r.beta1_max, b2lo = r.beta2_min, b2hi = r.beta2_max;
  for (const auto& s : slots) {
    reward += s.reward;
    attacked += s.attacked_fraction;
    delay += s.mean_delay;
    accepted += static_cast<long>(s.accepted);
    rejected += static_cast<long>(s.rejected);
    const MetricsRow sr = slot_row(s, run_id, scheme, hash);
    b1lo = std::min(b1lo, sr.beta1_min);
    b1hi = std::max(b1hi, sr.beta1_max);
    b2lo = std::min(b2lo, sr.beta2_min);
    b2hi = std::max(b2hi, sr.beta2_max);
  }
  const double n = static_cast<double>(slots.size());
  r.reward = reward;
  r.attacked_fraction = attacked / n;
  r.mean_delay = delay / n;
  r.accepted_count = accepted;
  r.rejected_count = rejected;
  r.beta1_min = b1lo;
  r.beta1_max = b1hi;
  r.beta2_min = b2lo;
  r.beta2_max = b2hi;
  return r;
}

// Slots are stored episode by episode; emits each episode's summary row
// (slot -1) ahead of its slot rows.
void append_rows(std::vector<MetricsRow>& rows, std::vector<UploadRow>& uploads, std::span<const SlotRecord> slots,
                 const std::string& run_id, const std::string& scheme, const std::string& hash) {
  std::size_t begin = 0;
  while (begin < slots.size()) {
    std::size_t end = begin;
    while (end < slots.size() && slots[end].episode == slots[begin].episode && slots[end].phase == slots[begin].phase)
      ++end;
    const auto episode = slots.subspan(begin, end - begin);
    rows.push_back(episode_row(episode, run_id, scheme, hash));
    for (const auto& s : episode) {
      rows.push_back(slot_row(s, run_id, scheme, hash));
      for (const auto& u : s.reports) {
        UploadRow ur;
        ur.run_id = run_id;
        ur.scheme = scheme;
        ur.phase = s.phase == Phase::train ? "train" : "test";
        ur.episode = static_cast<long>(s.episode);
        ur.slot = static_cast<long>(s.slot);
        ur.vehicle = u.vehicle;
        ur.t_local = u.t_local;
        ur.t_upload = u.t_upload;
        ur.arrival_time = u.arrival_time;
        ur.beta1 = u.beta1;
        ur.beta2 = u.beta2;
        ur.loss = u.loss;
        ur.screen_loss = u.screen_loss;
        ur.rsu_loss = s.rsu_loss;
        ur.filtered = u.filtered ? 1 : 0;
        ur.accepted = u.accepted ? 1 : 0;
        ur.attacked = u.attacked ? 1 : 0;
        ur.bad_node = u.bad_node ? 1 : 0;
        ur.config_hash = hash;
        uploads.push_back(std::move(ur));
      }
    }
    begin = end;
  }
}

std::size_t count_violations(std::span<const SlotRecord> slots, double beta_r) {
  std::size_t bad = 0;
  for (const auto& s : slots) {
    if (std::isnan(s.rsu_loss)) continue;
    for (const auto& u : s.reports)
      if (u.filtered && u.accepted && !(u.screen_loss <= beta_r * s.rsu_loss)) ++bad;
  }
  return bad;
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::ddafl: return "ddafl";
    case Scheme::ddafl_no_defense: return "ddafl_no_defense";
    case Scheme::ddafl_no_lt: return "ddafl_no_lt";
    case Scheme::ddafl_no_ct: return "ddafl_no_ct";
    case Scheme::plain_afl: return "plain_afl";
    case Scheme::sync_fl: return "sync_fl";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : kAllSchemes)
    if (to_string(s) == name) return s;
  throw ConfigError("scheme", "unknown scheme '" + name + "'");
}

bool uses_agent(Scheme s) { return s != Scheme::plain_afl && s != Scheme::sync_fl; }

AflSettings settings_for(Scheme s, const SimConfig& cfg) {
  AflSettings a = AflSettings::from_config(cfg);
  a.defense_on = s != Scheme::ddafl_no_defense && uses_agent(s);
  a.use_local_weight = s != Scheme::ddafl_no_lt && uses_agent(s);
  a.use_tx_weight = s != Scheme::ddafl_no_ct && uses_agent(s);
  return a;
}

TrainedPolicy train_policy(const SimConfig& cfg, std::uint64_t seed, Scheme scheme) {
  if (!uses_agent(scheme)) throw std::invalid_argument("scheme " + to_string(scheme) + " has no selector");
  AflSettings settings = settings_for(scheme, cfg);
  settings.defense_on = false;
  TrainResult tr = train_agent(cfg, seed, settings);
  TrainedPolicy p;
  p.nets = std::move(tr.nets);
  p.episode_rewards = std::move(tr.episode_rewards);
  p.slots = std::move(tr.slots);
  p.rng_digest = tr.rng_digest;
  p.config_hash = config_hash(training_config(cfg));
  return p;
}

const TrainedPolicy& PolicyCache::get(const SimConfig& cfg, std::uint64_t seed, Scheme scheme) {
  const AflSettings s = settings_for(scheme, cfg);
  const std::string key = config_hash(training_config(cfg)) + "/" + std::to_string(seed) + "/" +
                          (s.use_local_weight ? "1" : "0") + (s.use_tx_weight ? "1" : "0");
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    it = entries_.emplace(key, train_policy(cfg, seed, scheme)).first;
    ++trainings_;
  }
  return it->second;
}

ExperimentResult run_experiment(Scheme scheme, const SimConfig& cfg, std::uint64_t seed,
                                const ExperimentOptions& options) {
  validate(cfg);
  ExperimentResult result;
  result.scheme = scheme;
  const std::string name = to_string(scheme);
  result.run_id = name + "-s" + std::to_string(seed);
  result.config_hash = config_hash(cfg);
  const AflSettings settings = settings_for(scheme, cfg);

  TestResult test;
  if (uses_agent(scheme) && options.actor) {
    test = test_policy(*options.actor, cfg, seed, settings);
  } else if (uses_agent(scheme)) {
    TrainedPolicy local;
    const TrainedPolicy* policy = nullptr;
    if (options.cache) {
      policy = &options.cache->get(cfg, seed, scheme);
    } else {
      local = train_policy(cfg, seed, scheme);
      policy = &local;
    }
    result.episode_rewards = policy->episode_rewards;
    for (const auto& s : policy->slots) result.train_world_digests.push_back(s.world_digest);
    if (options.include_training_rows)
      append_rows(result.rows, result.uploads, policy->slots, result.run_id, name, result.config_hash);
    test = test_policy(policy->nets.actor, cfg, seed, settings);
  } else {
    test = run_baseline(scheme == Scheme::sync_fl ? BaselineKind::sync_fl : BaselineKind::plain_afl, cfg, seed,
                        settings);
  }
  append_rows(result.rows, result.uploads, test.slots, result.run_id, name, result.config_hash);

  const std::size_t n = cfg.slots_per_episode;
  result.test_loss_trace.assign(n, 0.0);
  std::uint64_t digest = 0;
  double episodes = 0.0;
  for (const auto& s : test.slots) {
    result.test_loss_trace[s.slot] += s.avg_loss;
    result.filter_calls += s.filter_calls;
    digest = derive_seed({digest, s.world_digest});
    if (s.slot + 1 == n) {
      result.final_avg_loss += s.avg_loss;
      result.final_accuracy += s.accuracy;
      result.final_error_rate += s.error_rate;
      episodes += 1.0;
    }
  }
  for (double& v : result.test_loss_trace) v /= episodes;
  result.final_avg_loss /= episodes;
  result.final_accuracy /= episodes;
  result.final_error_rate /= episodes;
  result.world_digest = digest;
  result.filter_violations = count_violations(test.slots, cfg.beta_r);
  result.admission_rate.resize(test.admissions.size());
  for (std::size_t v = 0; v < test.admissions.size(); ++v)
    result.admission_rate[v] = static_cast<double>(test.admissions[v]) / static_cast<double>(test.slot_count);
  return result;
}

double tail_variance(std::span<const double> trace) {
  if (trace.empty()) return 0.0;
  const auto tail = trace.subspan(trace.size() / 2);
  double mean = 0.0;
  for (double v : tail) mean += v;
  mean /= static_cast<double>(tail.size());
  double var = 0.0;
  for (double v : tail) var += (v - mean) * (v - mean);
  return var / static_cast<double>(tail.size());
}

std::vector<SweepPoint> attack_sweep(const SimConfig& cfg, std::span<const double> fractions, AttackKind attack,
                                     std::uint64_t seed, PolicyCache* cache) {
  for (double f : fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("attack fraction outside [0, 1]");
  PolicyCache own;
  PolicyCache& pc = cache ? *cache : own;
  std::vector<SweepPoint> out;
  for (double f : fractions) {
    SimConfig c = cfg;
    c.attack = to_string(attack);
    c.attack_fraction = f;
    ExperimentOptions opts{&pc, false};
    const ExperimentResult def = run_experiment(Scheme::ddafl, c, seed, opts);
    const ExperimentResult undef = run_experiment(Scheme::ddafl_no_defense, c, seed, opts);
    SweepPoint p;
    p.fraction = f;
    p.attack = attack;
    p.defended_error = def.final_error_rate;
    p.undefended_error = undef.final_error_rate;
    p.defended_accuracy = def.final_accuracy;
    p.undefended_accuracy = undef.final_accuracy;
    p.defended_loss = def.final_avg_loss;
    p.undefended_loss = undef.final_avg_loss;
    p.defended_tail_variance = tail_variance(def.test_loss_trace);
    p.undefended_tail_variance = tail_variance(undef.test_loss_trace);
    p.filter_violations = def.filter_violations;
    p.rows = def.rows;
    p.rows.insert(p.rows.end(), undef.rows.begin(), undef.rows.end());
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ddafl

#include "ddafl/afl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ddafl/data.hpp"
#include "ddafl/errors.hpp"

namespace ddafl {

namespace {

double staleness_weight(double delay, double base, const char* name) {
  if (!(base > 0.0 && base < 1.0)) throw std::invalid_argument(std::string(name) + " must lie in (0, 1)");
  if (delay < 0.0) throw std::invalid_argument("delay must be nonnegative");
  return std::pow(base, delay - 0.5);
}

struct LocalResult {
  int vehicle = 0;
  ModelParams model;
  double loss = 0.0;
  double t_local = 0.0;
  double t_upload = 0.0;
};

LocalResult train_vehicle(const GlobalModel& global, const World& world, int v, const AflSettings& s) {
  const auto idx = static_cast<std::size_t>(v);
  const LabeledBatch& data = world.training_data(idx);
  const VehicleProfile& profile = world.profile(idx);
  LocalTrainResult trained = local_train(global.params, data, s.train, world.slot_seed(Stream::local_batches, idx));
  LocalResult r{v, std::move(trained.params), trained.final_loss, 0.0, 0.0};
  if (world.is_bad(idx)) {
    // The noisy model is what the RSU receives, and what its reported loss describes.
    r.model = degrade_bad_node(r.model, s.bad_noise_scale, world.slot_seed(Stream::bad_node_noise, idx));
    r.loss = cross_entropy_loss(r.model, data);
  }
  r.t_local = local_training_delay(static_cast<double>(profile.data_count), s.cycles_per_sample, profile.compute);
  r.t_upload = upload_delay(s.model_bits, profile.rate);
  return r;
}

VehicleReport base_report(const LocalResult& r, const World& world) {
  VehicleReport rep;
  rep.vehicle = r.vehicle;
  rep.t_local = r.t_local;
  rep.t_upload = r.t_upload;
  rep.arrival_time = r.t_local + r.t_upload;
  rep.loss = r.loss;
  rep.screen_loss = r.loss;
  rep.uploaded = std::isfinite(r.t_upload);
  rep.attacked = world.attacked_now(static_cast<std::size_t>(r.vehicle));
  rep.bad_node = world.is_bad(static_cast<std::size_t>(r.vehicle));
  return rep;
}

bool arrives_before(const VehicleReport& a, const VehicleReport& b) {
  if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
  return a.vehicle < b.vehicle;
}

void finish_outcome(SlotOutcome& out, std::size_t vehicle_count, LossAveraging averaging) {
  out.delays.assign(vehicle_count, 0.0);
  double loss_all = 0.0;
  double loss_accepted = 0.0;
  std::size_t n_all = 0;
  std::size_t n_accepted = 0;
  double delay_sum = 0.0;
  for (const auto& rep : out.reports) {
    if (!rep.uploaded) continue;
    out.delays[static_cast<std::size_t>(rep.vehicle)] = rep.t_local + rep.t_upload;
    delay_sum += rep.t_local + rep.t_upload;
    loss_all += rep.loss;
    ++n_all;
    if (rep.accepted) {
      loss_accepted += rep.loss;
      ++n_accepted;
    }
  }
  if (n_all == 0) return;
  out.mean_delay = delay_sum / static_cast<double>(n_all);
  if (averaging == LossAveraging::accepted_only && n_accepted > 0) {
    out.avg_loss = loss_accepted / static_cast<double>(n_accepted);
  } else {
    out.avg_loss = loss_all / static_cast<double>(n_all);
  }
}

std::vector<LocalResult> train_all(const GlobalModel& global, const World& world, const AflSettings& s) {
  std::vector<LocalResult> results;
  for (std::size_t v = 0; v < world.vehicle_count(); ++v) {
    results.push_back(train_vehicle(global, world, static_cast<int>(v), s));
  }
  return results;
}

}  // namespace

double local_training_delay(double data_count, double cycles_per_sample, double compute) {
  if (!(compute > 0.0)) throw std::invalid_argument("compute capacity must be positive");
  return data_count * cycles_per_sample / compute;
}

double upload_delay(double model_bits, double rate) {
  if (!(rate > 0.0)) return kNoUpload;
  return model_bits / rate;
}

double staleness_weight_local(double t_local, double m1) { return staleness_weight(t_local, m1, "m1"); }

double staleness_weight_tx(double t_upload, double m2) { return staleness_weight(t_upload, m2, "m2"); }

ModelParams weighted_model(const ModelParams& local, double w1, double w2) {
  if (!(w1 > 0.0) || !(w2 > 0.0)) throw std::invalid_argument("staleness weights must be positive");
  return scaled(local, w1 * w2);
}

GlobalModel global_update(const GlobalModel& global, const Upload& upload, double beta) {
  require_same_shape(global.params, upload.weighted_model, "global_update");
  return GlobalModel{linear_combination(beta, global.params, 1.0 - beta, upload.weighted_model),
                     global.update_count + 1};
}

bool threshold_filter(double upload_loss, double rsu_loss, double beta_r) {
  if (upload_loss < 0.0 || rsu_loss < 0.0) throw std::invalid_argument("losses must be nonnegative");
  if (!(beta_r > 0.0)) throw std::invalid_argument("beta_r must be positive");
  return upload_loss <= beta_r * rsu_loss;
}

AflSettings AflSettings::from_config(const SimConfig& cfg) {
  AflSettings s;
  s.beta = cfg.aggregation_beta;
  s.m1 = cfg.m1;
  s.m2 = cfg.m2;
  s.beta_r = cfg.beta_r;
  s.cycles_per_sample = cfg.cycles_per_sample;
  s.model_bits = cfg.model_bits;
  s.train = TrainSettings{cfg.local_rounds, cfg.local_lr, cfg.local_batch};
  s.bad_noise_scale = cfg.bad_noise_scale;
  s.averaging = cfg.loss_average == "accepted" ? LossAveraging::accepted_only : LossAveraging::all_reported;
  s.rsu_warm_start = cfg.rsu_warm_start;
  s.screening = cfg.screening_loss == "local" ? ScreeningLoss::local_data : ScreeningLoss::trusted_data;
  return s;
}

SlotOutcome run_afl_slot(std::span<const int> selected, const GlobalModel& global, const World& world,
                         RsuState& rsu, const AflSettings& s) {
  if (selected.empty()) throw std::invalid_argument("run_afl_slot: empty selection");
  std::vector<bool> seen(world.vehicle_count(), false);
  for (int v : selected) {
    if (v < 0 || static_cast<std::size_t>(v) >= world.vehicle_count() || seen[static_cast<std::size_t>(v)]) {
      throw std::invalid_argument("run_afl_slot: invalid or duplicate vehicle id " + std::to_string(v));
    }
    seen[static_cast<std::size_t>(v)] = true;
  }

  // Every selected vehicle trains from the same slot-start snapshot.
  std::vector<LocalResult> locals;
  for (int v : selected) locals.push_back(train_vehicle(global, world, v, s));

  SlotOutcome out;
  out.global = global;
  std::vector<std::pair<VehicleReport, ModelParams>> queue;
  for (auto& r : locals) {
    VehicleReport rep = base_report(r, world);
    if (rep.uploaded) {
      rep.beta1 = s.use_local_weight ? staleness_weight_local(r.t_local, s.m1) : 1.0;
      rep.beta2 = s.use_tx_weight ? staleness_weight_tx(r.t_upload, s.m2) : 1.0;
      rep.screen_loss = rep.loss;
      if (s.defense_on && s.screening == ScreeningLoss::trusted_data)
        rep.screen_loss = cross_entropy_loss(r.model, world.rsu_holdout());
      queue.emplace_back(rep, weighted_model(r.model, rep.beta1, rep.beta2));
    } else {
      out.reports.push_back(rep);
    }
  }
  std::sort(queue.begin(), queue.end(),
            [](const auto& a, const auto& b) { return arrives_before(a.first, b.first); });

  if (s.defense_on) {
    const ModelParams& start = s.rsu_warm_start ? rsu.trusted : global.params;
    LocalTrainResult trusted = local_train(start, world.rsu_shard().batch, s.train,
                                           world.slot_seed(Stream::local_batches, world.vehicle_count()));
    out.rsu_loss = s.screening == ScreeningLoss::trusted_data ? cross_entropy_loss(trusted.params, world.rsu_holdout())
                                                              : trusted.final_loss;
    rsu.trusted = std::move(trusted.params);
  }

  for (auto& [rep, model] : queue) {
    bool accept = true;
    if (s.defense_on) {
      ++out.filter_calls;
      rep.filtered = true;
      accept = threshold_filter(rep.screen_loss, out.rsu_loss, s.beta_r);
    }
    if (accept) {
      if (s.defense_on && !(rep.screen_loss <= s.beta_r * out.rsu_loss)) {
        throw std::logic_error("screening admitted an upload above the RSU threshold");
      }
      Upload up{rep.vehicle, std::move(model), rep.loss, rep.t_local, rep.t_upload, rep.arrival_time};
      out.global = global_update(out.global, up, s.beta);
      rep.accepted = true;
      ++out.accepted;
    } else {
      ++out.rejected;
    }
    out.reports.push_back(rep);
  }
  std::stable_sort(out.reports.begin(), out.reports.end(), arrives_before);
  finish_outcome(out, world.vehicle_count(), s.averaging);
  return out;
}

SlotOutcome run_sync_fl_round(const GlobalModel& global, const World& world, const AflSettings& s) {
  SlotOutcome out;
  out.global = global;
  std::vector<LocalResult> locals = train_all(global, world, s);
  ModelParams sum = ModelParams::zeros(global.params.widths);
  std::size_t n = 0;
  for (auto& r : locals) {
    VehicleReport rep = base_report(r, world);
    if (rep.uploaded) {
      add_scaled(sum, 1.0, r.model);
      ++n;
      rep.accepted = true;
      ++out.accepted;
    }
    out.reports.push_back(rep);
  }
  if (n > 0) {
    out.global.params = scaled(sum, 1.0 / static_cast<double>(n));
    out.global.update_count += n;
  }
  std::stable_sort(out.reports.begin(), out.reports.end(), arrives_before);
  finish_outcome(out, world.vehicle_count(), LossAveraging::all_reported);
  return out;
}

SlotOutcome run_plain_afl_round(const GlobalModel& global, const World& world, const AflSettings& s) {
  SlotOutcome out;
  out.global = global;
  std::vector<LocalResult> locals = train_all(global, world, s);
  std::vector<std::size_t> order(locals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<VehicleReport> reps;
  for (auto& r : locals) reps.push_back(base_report(r, world));
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return arrives_before(reps[a], reps[b]); });
  for (std::size_t i : order) {
    VehicleReport& rep = reps[i];
    if (rep.uploaded) {
      Upload up{rep.vehicle, std::move(locals[i].model), rep.loss, rep.t_local, rep.t_upload, rep.arrival_time};
      out.global = global_update(out.global, up, s.beta);
      rep.accepted = true;
      ++out.accepted;
    }
    out.reports.push_back(rep);
  }
  finish_outcome(out, world.vehicle_count(), LossAveraging::all_reported);
  return out;
}

}  // namespace ddafl

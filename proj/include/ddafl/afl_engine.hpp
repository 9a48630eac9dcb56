#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ddafl/config.hpp"
#include "ddafl/local_model.hpp"
#include "ddafl/model_params.hpp"
#include "ddafl/world.hpp"

namespace ddafl {

inline constexpr double kNoUpload = std::numeric_limits<double>::infinity();

// D_n * C_0 / mu_n. Throws std::invalid_argument for nonpositive compute.
double local_training_delay(double data_count, double cycles_per_sample, double compute);
// |w| / R_n; kNoUpload when the rate is zero.
double upload_delay(double model_bits, double rate);
// base^(delay - 0.5), base in (0, 1).
double staleness_weight_local(double t_local, double m1);
double staleness_weight_tx(double t_upload, double m2);
// beta1 * w * beta2, elementwise.
ModelParams weighted_model(const ModelParams& local, double w1, double w2);

struct GlobalModel {
  ModelParams params;
  std::size_t update_count = 0;
};

struct Upload {
  int vehicle_id = 0;
  ModelParams weighted_model;
  double local_loss = 0.0;
  double t_local = 0.0;
  double t_upload = 0.0;
  double arrival_time = 0.0;
};

// beta * w_old + (1 - beta) * w_kw; update_count + 1.
GlobalModel global_update(const GlobalModel& global, const Upload& upload, double beta);

// upload_loss <= beta_r * rsu_loss. Throws std::invalid_argument on
// negative losses or nonpositive beta_r.
bool threshold_filter(double upload_loss, double rsu_loss, double beta_r);

enum class LossAveraging { all_reported, accepted_only };

// Which loss of an upload is compared against beta_r * L_RSU: the
// vehicle's own training loss, or the RSU's evaluation of the unweighted
// local model on its trusted set.
enum class ScreeningLoss { local_data, trusted_data };

struct AflSettings {
  double beta = 0.5;
  double m1 = 0.9;
  double m2 = 0.9;
  bool use_local_weight = true;  // false: beta1 = 1
  bool use_tx_weight = true;     // false: beta2 = 1
  bool defense_on = true;
  double beta_r = 1.25;
  double cycles_per_sample = 1e6;
  double model_bits = 5000.0;
  TrainSettings train;
  double bad_noise_scale = 0.5;
  LossAveraging averaging = LossAveraging::accepted_only;
  bool rsu_warm_start = false;
  ScreeningLoss screening = ScreeningLoss::trusted_data;

  static AflSettings from_config(const SimConfig& cfg);
};

struct VehicleReport {
  int vehicle = 0;
  double t_local = 0.0;
  double t_upload = 0.0;
  double arrival_time = 0.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double loss = 0.0;         // training loss on the vehicle's own data
  double screen_loss = 0.0;  // loss the filter compared; equals loss for local screening
  bool uploaded = false;
  bool filtered = false;  // went through threshold_filter
  bool accepted = false;  // changed the global model
  bool attacked = false;
  bool bad_node = false;
};

struct SlotOutcome {
  GlobalModel global;
  double avg_loss = 0.0;
  double rsu_loss = std::numeric_limits<double>::quiet_NaN();
  std::vector<VehicleReport> reports;  // arrival order
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t filter_calls = 0;
  double mean_delay = 0.0;
  std::vector<double> delays;  // T_l + T_u per vehicle id; 0 if not participating
};

// State the RSU carries across slots of an episode.
struct RsuState {
  ModelParams trusted;
};

// One slot of weighted AFL with optional RSU loss-threshold screening. All
// selected vehicles start from the snapshot `global`; uploads are applied in
// ascending arrival time (ties by id). Empty selections are rejected; the
// caller applies the max-lambda fallback.
SlotOutcome run_afl_slot(std::span<const int> selected, const GlobalModel& global, const World& world,
                         RsuState& rsu, const AflSettings& settings);

// Synchronous FL: every vehicle trains, the RSU averages all local models.
SlotOutcome run_sync_fl_round(const GlobalModel& global, const World& world, const AflSettings& settings);

// Plain AFL: every vehicle, beta-mixing in arrival order without
// staleness weights or screening.
SlotOutcome run_plain_afl_round(const GlobalModel& global, const World& world, const AflSettings& settings);

}  // namespace ddafl

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddafl {

// One slot (slot >= 0) or one episode summary (slot == -1).
struct MetricsRow {
  std::string run_id;
  std::string scheme;
  std::string phase;  // "train" or "test"
  long episode = 0;
  long slot = 0;
  double avg_loss = 0.0;
  double accuracy = 0.0;
  double error_rate = 0.0;
  double reward = 0.0;  // NaN where no agent acts
  double attacked_fraction = 0.0;
  long accepted_count = 0;
  long rejected_count = 0;
  double mean_delay = 0.0;
  double beta1_min = 1.0;
  double beta1_max = 1.0;
  double beta2_min = 1.0;
  double beta2_max = 1.0;
  std::string selected;  // admission mask as a 0/1 string, vehicle 0 first
  std::string config_hash;

  bool operator==(const MetricsRow&) const = default;
};

// Per-upload detail behind a slot row.
struct UploadRow {
  std::string run_id;
  std::string scheme;
  std::string phase;
  long episode = 0;
  long slot = 0;
  long vehicle = 0;
  double t_local = 0.0;
  double t_upload = 0.0;
  double arrival_time = 0.0;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double loss = 0.0;
  double screen_loss = 0.0;
  double rsu_loss = 0.0;
  int filtered = 0;
  int accepted = 0;
  int attacked = 0;
  int bad_node = 0;
  std::string config_hash;

  bool operator==(const UploadRow&) const = default;
};

// Header plus one line per row, floats at 9 significant digits. Throws
// std::invalid_argument on empty input, std::runtime_error on I/O failure.
void emit_metrics(const std::vector<MetricsRow>& rows, std::ostream& out);
void emit_metrics(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> parse_metrics(std::istream& in);

void emit_uploads(const std::vector<UploadRow>& rows, std::ostream& out);
void emit_uploads(const std::vector<UploadRow>& rows, const std::string& path);

std::string format_float(double value);

}  // namespace ddafl

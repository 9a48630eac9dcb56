#include "ddafl/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddafl {

namespace {

constexpr const char* kMetricsHeader =
    "run_id,scheme,phase,episode,slot,avg_loss,accuracy,error_rate,reward,attacked_fraction,accepted_count,"
    "rejected_count,mean_delay,beta1_min,beta1_max,beta2_min,beta2_max,selected,config_hash";

constexpr const char* kUploadsHeader =
    "run_id,scheme,phase,episode,slot,vehicle,t_local,t_upload,arrival_time,beta1,beta2,loss,screen_loss,rsu_loss,filtered,"
    "accepted,attacked,bad_node,config_hash";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("bad number in metrics csv: " + s);
  return v;
}

long parse_long(const std::string& s) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::runtime_error("bad integer in metrics csv: " + s);
  return v;
}

template <typename Row, typename Writer>
void emit_to_file(const std::vector<Row>& rows, const std::string& path, Writer writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  writer(rows, out);
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::string format_float(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

void emit_metrics(const std::vector<MetricsRow>& rows, std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("emit_metrics: no rows");
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.scheme << ',' << r.phase << ',' << r.episode << ',' << r.slot << ','
        << format_float(r.avg_loss) << ',' << format_float(r.accuracy) << ',' << format_float(r.error_rate) << ','
        << format_float(r.reward) << ',' << format_float(r.attacked_fraction) << ',' << r.accepted_count << ','
        << r.rejected_count << ',' << format_float(r.mean_delay) << ',' << format_float(r.beta1_min) << ','
        << format_float(r.beta1_max) << ',' << format_float(r.beta2_min) << ',' << format_float(r.beta2_max) << ','
        << r.selected << ',' << r.config_hash << '\n';
  }
}

void emit_metrics(const std::vector<MetricsRow>& rows, const std::string& path) {
  emit_to_file(rows, path, [](const auto& r, std::ostream& o) { emit_metrics(r, o); });
}

std::vector<MetricsRow> parse_metrics(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw std::runtime_error("metrics csv: unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 19) throw std::runtime_error("metrics csv: expected 19 fields, got " + std::to_string(f.size()));
    MetricsRow r;
    r.run_id = f[0];
    r.scheme = f[1];
    r.phase = f[2];
    r.episode = parse_long(f[3]);
    r.slot = parse_long(f[4]);
    r.avg_loss = parse_double(f[5]);
    r.accuracy = parse_double(f[6]);
    r.error_rate = parse_double(f[7]);
    r.reward = parse_double(f[8]);
    r.attacked_fraction = parse_double(f[9]);
    r.accepted_count = parse_long(f[10]);
    r.rejected_count = parse_long(f[11]);
    r.mean_delay = parse_double(f[12]);
    r.beta1_min = parse_double(f[13]);
    r.beta1_max = parse_double(f[14]);
    r.beta2_min = parse_double(f[15]);
    r.beta2_max = parse_double(f[16]);
    r.selected = f[17];
    r.config_hash = f[18];
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_uploads(const std::vector<UploadRow>& rows, std::ostream& out) {
  out << kUploadsHeader << '\n';
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.scheme << ',' << r.phase << ',' << r.episode << ',' << r.slot << ',' << r.vehicle
        << ',' << format_float(r.t_local) << ',' << format_float(r.t_upload) << ',' << format_float(r.arrival_time)
        << ',' << format_float(r.beta1) << ',' << format_float(r.beta2) << ',' << format_float(r.loss) << ',' << format_float(r.screen_loss) << ','
        << format_float(r.rsu_loss) << ',' << r.filtered << ',' << r.accepted << ',' << r.attacked << ','
        << r.bad_node << ',' << r.config_hash << '\n';
  }
}

void emit_uploads(const std::vector<UploadRow>& rows, const std::string& path) {
  emit_to_file(rows, path, [](const auto& r, std::ostream& o) { emit_uploads(r, o); });
}

}  // namespace ddafl

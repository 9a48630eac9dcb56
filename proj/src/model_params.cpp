#include "ddafl/model_params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <cstdint>
#include <istream>
#include "json.hpp"
#include <ostream>
#include <string>

#include "ddafl/errors.hpp"

namespace ddafl {

ModelParams ModelParams::zeros(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw ShapeError("a network needs at least an input and an output layer");
  ModelParams p;
  p.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] == 0 || widths[l + 1] == 0) throw ShapeError("layer widths must be positive");
    p.weights.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(widths[l + 1]),
                                              static_cast<Eigen::Index>(widths[l])));
    p.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(widths[l + 1])));
  }
  return p;
}

ModelParams ModelParams::unflatten(const std::vector<std::size_t>& widths,
                                   std::span<const double> flat) {
  ModelParams p = zeros(widths);
  if (flat.size() != p.parameter_count()) {
    throw ShapeError("flat vector length " + std::to_string(flat.size()) +
                     " does not match architecture (" + std::to_string(p.parameter_count()) + ")");
  }
  std::size_t pos = 0;
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    auto& w = p.weights[l];
    std::memcpy(w.data(), flat.data() + pos, sizeof(double) * static_cast<std::size_t>(w.size()));
    pos += static_cast<std::size_t>(w.size());
    auto& b = p.biases[l];
    std::memcpy(b.data(), flat.data() + pos, sizeof(double) * static_cast<std::size_t>(b.size()));
    pos += static_cast<std::size_t>(b.size());
  }
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data(), weights[l].data() + weights[l].size());
    flat.insert(flat.end(), biases[l].data(), biases[l].data() + biases[l].size());
  }
  return flat;
}

bool ModelParams::same_shape(const ModelParams& other) const { return widths == other.widths; }

bool ModelParams::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

double ModelParams::max_abs_diff(const ModelParams& other) const {
  require_same_shape(*this, other, "max_abs_diff");
  double m = 0.0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    m = std::max(m, (weights[l] - other.weights[l]).cwiseAbs().maxCoeff());
    m = std::max(m, (biases[l] - other.biases[l]).cwiseAbs().maxCoeff());
  }
  return m;
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (widths != other.widths) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l] != other.weights[l] || biases[l] != other.biases[l]) return false;
  }
  return true;
}

void require_same_shape(const ModelParams& a, const ModelParams& b, const char* context) {
  if (!a.same_shape(b)) throw ShapeError(std::string(context) + ": architecture mismatch");
}

ModelParams linear_combination(double a, const ModelParams& x, double b, const ModelParams& y) {
  require_same_shape(x, y, "linear_combination");
  ModelParams out = x;
  for (std::size_t l = 0; l < x.layer_count(); ++l) {
    out.weights[l] = a * x.weights[l] + b * y.weights[l];
    out.biases[l] = a * x.biases[l] + b * y.biases[l];
  }
  return out;
}

ModelParams scaled(const ModelParams& x, double factor) {
  ModelParams out = x;
  for (std::size_t l = 0; l < x.layer_count(); ++l) {
    out.weights[l] *= factor;
    out.biases[l] *= factor;
  }
  return out;
}

void add_scaled(ModelParams& y, double a, const ModelParams& x) {
  require_same_shape(y, x, "add_scaled");
  for (std::size_t l = 0; l < x.layer_count(); ++l) {
    y.weights[l] += a * x.weights[l];
    y.biases[l] += a * x.biases[l];
  }
}

namespace {

void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

double get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("truncated parameter payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_params(std::ostream& out, const ModelParams& params) {
  nlohmann::json header{{"format", "ddafl-params"},
                        {"version", 1},
                        {"widths", params.widths},
                        {"count", params.parameter_count()}};
  out << header.dump() << '\n';
  for (double v : params.flatten()) put_le(out, v);
  if (!out) throw std::runtime_error("failed to write parameters");
}

ModelParams read_params(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing parameter header");
  auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != "ddafl-params") throw std::runtime_error("not a ddafl parameter file");
  auto widths = header.at("widths").get<std::vector<std::size_t>>();
  auto count = header.at("count").get<std::size_t>();
  std::vector<double> flat(count);
  for (auto& v : flat) v = get_le(in);
  return ModelParams::unflatten(widths, flat);
}

}  // namespace ddafl

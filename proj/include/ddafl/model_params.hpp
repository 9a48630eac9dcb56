#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace ddafl {

// Parameters of a fully connected network. weights[l] maps layer l to
// layer l+1 and has shape widths[l+1] x widths[l]. Also used for
// gradients, which share the exact shape.
struct ModelParams {
  std::vector<std::size_t> widths;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static ModelParams zeros(const std::vector<std::size_t>& widths);
  static ModelParams unflatten(const std::vector<std::size_t>& widths,
                               std::span<const double> flat);

  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
  // Layer by layer: weights column-major, then biases.
  std::vector<double> flatten() const;
  bool same_shape(const ModelParams& other) const;
  bool all_finite() const;
  double max_abs_diff(const ModelParams& other) const;

  bool operator==(const ModelParams& other) const;
};

// Throws ShapeError when a and b differ in architecture.
void require_same_shape(const ModelParams& a, const ModelParams& b, const char* context);

// Elementwise a * x + b * y.
ModelParams linear_combination(double a, const ModelParams& x, double b, const ModelParams& y);
ModelParams scaled(const ModelParams& x, double factor);
// y += a * x
void add_scaled(ModelParams& y, double a, const ModelParams& x);

// Flat little-endian f64 payload preceded by a one-line JSON shape header:
//   {"format":"ddafl-params","version":1,"widths":[...],"count":N}\n<8N bytes>
void write_params(std::ostream& out, const ModelParams& params);
ModelParams read_params(std::istream& in);

}  // namespace ddafl

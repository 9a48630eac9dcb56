#include "ddafl/dense_net.hpp"

#include <cmath>
#include <string>

#include "ddafl/errors.hpp"
#include "ddafl/rng.hpp"

namespace ddafl {

ModelParams glorot_init(const std::vector<std::size_t>& widths, std::uint64_t seed,
                        double output_scale) {
  ModelParams p = ModelParams::zeros(widths);
  Rng rng(seed);
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    double limit = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    if (l + 1 == p.layer_count()) limit *= output_scale;
    auto& w = p.weights[l];
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
    }
  }
  return p;
}

Eigen::MatrixXd forward_batch(const ModelParams& params, const Eigen::MatrixXd& inputs,
                              OutputActivation output, ForwardTrace* trace) {
  if (params.layer_count() == 0) throw ShapeError("empty network");
  if (static_cast<std::size_t>(inputs.rows()) != params.widths.front()) {
    throw ShapeError("input width " + std::to_string(inputs.rows()) + " does not match network input " +
                     std::to_string(params.widths.front()));
  }
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(inputs);
  }
  Eigen::MatrixXd a = inputs;
  const std::size_t last = params.layer_count() - 1;
  for (std::size_t l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = params.weights[l] * a;
    z.colwise() += params.biases[l];
    if (l < last) {
      a = z.cwiseMax(0.0);
    } else {
      switch (output) {
        case OutputActivation::softmax: {
          Eigen::RowVectorXd m = z.colwise().maxCoeff();
          z.rowwise() -= m;
          a = z.array().exp().matrix();
          Eigen::RowVectorXd s = a.colwise().sum();
          a.array().rowwise() /= s.array();
          break;
        }
        case OutputActivation::sigmoid:
          a = (1.0 / (1.0 + (-z.array()).exp())).matrix();
          break;
        case OutputActivation::identity:
          a = std::move(z);
          break;
      }
    }
    if (trace) trace->activations.push_back(a);
  }
  return a;
}

Backprop backward(const ModelParams& params, const ForwardTrace& trace,
                  const Eigen::MatrixXd& output_delta) {
  const std::size_t layers = params.layer_count();
  if (trace.activations.size() != layers + 1) throw ShapeError("trace does not match network depth");
  if (output_delta.rows() != static_cast<Eigen::Index>(params.widths.back()) ||
      output_delta.cols() != trace.activations.front().cols()) {
    throw ShapeError("output delta shape mismatch");
  }
  Backprop out{ModelParams::zeros(params.widths), {}};
  Eigen::MatrixXd delta = output_delta;
  for (std::size_t l = layers; l-- > 0;) {
    const Eigen::MatrixXd& a_in = trace.activations[l];
    out.param_grad.weights[l].noalias() = delta * a_in.transpose();
    out.param_grad.biases[l] = delta.rowwise().sum();
    Eigen::MatrixXd upstream = params.weights[l].transpose() * delta;
    if (l > 0) {
      // ReLU derivative, read off the stored post-activation.
      delta = upstream.cwiseProduct((a_in.array() > 0.0).cast<double>().matrix());
    } else {
      out.input_grad = std::move(upstream);
    }
  }
  return out;
}

}  // namespace ddafl

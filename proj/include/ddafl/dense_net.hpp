#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ddafl/model_params.hpp"

namespace ddafl {

// Hidden layers are always rectified linear; the output nonlinearity varies
// by role (classifier, actor, critic).
enum class OutputActivation { softmax, sigmoid, identity };

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
// The final layer's range is multiplied by output_scale.
ModelParams glorot_init(const std::vector<std::size_t>& widths, std::uint64_t seed,
                        double output_scale = 1.0);

// Layer activations from a forward pass; activations[0] is the input batch
// and activations.back() the network output. One column per sample.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;
};

Eigen::MatrixXd forward_batch(const ModelParams& params, const Eigen::MatrixXd& inputs,
                              OutputActivation output, ForwardTrace* trace = nullptr);

struct Backprop {
  ModelParams param_grad;
  Eigen::MatrixXd input_grad;  // d loss / d input, same shape as the input batch
};

// Reverse pass. output_delta holds d loss / d (output pre-activation), one
// column per sample; the caller folds in the output nonlinearity.
Backprop backward(const ModelParams& params, const ForwardTrace& trace,
                  const Eigen::MatrixXd& output_delta);

}  // namespace ddafl

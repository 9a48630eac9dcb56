#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "ddafl/model_params.hpp"

namespace ddafl {

inline constexpr int kNumClasses = 10;

// Samples are columns of inputs; labels[i] belongs to column i.
struct LabeledBatch {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(inputs.rows()); }

  // Throws std::invalid_argument on length mismatch, labels outside
  // [0, kNumClasses) or features outside [0, 1].
  void validate() const;
  LabeledBatch subset(std::span<const std::size_t> indices) const;
};

ModelParams init_params(const std::vector<std::size_t>& widths, std::uint64_t seed);

// Class probabilities for one input vector.
Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& input);
// Class probabilities for a batch, one column per sample.
Eigen::MatrixXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& inputs);

// Mean per-sample cross-entropy; log clamped below at 1e-12.
double cross_entropy_loss(const ModelParams& params, const LabeledBatch& batch);

struct LossGradient {
  double loss = 0.0;
  ModelParams grad;
};

LossGradient loss_and_gradient(const ModelParams& params, const LabeledBatch& batch);
ModelParams gradient(const ModelParams& params, const LabeledBatch& batch);

// params - eta * grad
ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double eta);

struct TrainSettings {
  std::size_t rounds = 5;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
};

struct LocalTrainResult {
  ModelParams params;
  double final_loss = 0.0;  // cross-entropy of the returned params on the full shard
};

// rounds full passes of shuffled mini-batch SGD over data.
LocalTrainResult local_train(const ModelParams& start, const LabeledBatch& data,
                             const TrainSettings& settings, std::uint64_t seed);

struct Evaluation {
  double accuracy = 0.0;
  double error_rate = 1.0;
};

// Argmax accuracy; ties go to the lowest class index.
Evaluation evaluate(const ModelParams& params, const LabeledBatch& test);

// The upload size is a scenario constant, not the measured parameter count.
inline double model_size_bits(const ModelParams& /*params*/, double configured_bits) {
  return configured_bits;
}

}  // namespace ddafl

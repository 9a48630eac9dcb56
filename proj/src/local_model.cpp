#include "ddafl/local_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ddafl/dense_net.hpp"
#include "ddafl/errors.hpp"
#include "ddafl/rng.hpp"

namespace ddafl {

namespace {

constexpr double kLogFloor = 1e-12;

void require_nonempty(const LabeledBatch& batch, const char* what) {
  if (batch.empty()) throw std::invalid_argument(std::string(what) + ": empty batch");
  if (static_cast<std::size_t>(batch.inputs.cols()) != batch.size()) {
    throw ShapeError(std::string(what) + ": inputs and labels differ in length");
  }
}

double mean_cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = probs(labels[i], static_cast<Eigen::Index>(i));
    total -= std::log(std::max(p, kLogFloor));
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace

void LabeledBatch::validate() const {
  if (static_cast<std::size_t>(inputs.cols()) != labels.size()) {
    throw std::invalid_argument("inputs and labels differ in length");
  }
  for (int y : labels) {
    if (y < 0 || y >= kNumClasses) throw std::invalid_argument("label out of range: " + std::to_string(y));
  }
  if (inputs.size() > 0 && (inputs.minCoeff() < 0.0 || inputs.maxCoeff() > 1.0)) {
    throw std::invalid_argument("feature values must lie in [0, 1]");
  }
}

LabeledBatch LabeledBatch::subset(std::span<const std::size_t> indices) const {
  LabeledBatch out;
  out.inputs.resize(inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = inputs.col(static_cast<Eigen::Index>(indices[i]));
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

ModelParams init_params(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw std::invalid_argument("architecture needs at least two layers");
  return glorot_init(widths, seed);
}

Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& input) {
  return forward_batch(params, input, OutputActivation::softmax).col(0);
}

Eigen::MatrixXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& inputs) {
  return forward_batch(params, inputs, OutputActivation::softmax);
}

double cross_entropy_loss(const ModelParams& params, const LabeledBatch& batch) {
  require_nonempty(batch, "cross_entropy_loss");
  return mean_cross_entropy(predict_proba(params, batch.inputs), batch.labels);
}

LossGradient loss_and_gradient(const ModelParams& params, const LabeledBatch& batch) {
  require_nonempty(batch, "gradient");
  ForwardTrace trace;
  Eigen::MatrixXd probs = forward_batch(params, batch.inputs, OutputActivation::softmax, &trace);
  LossGradient out;
  out.loss = mean_cross_entropy(probs, batch.labels);
  // softmax + cross-entropy: d loss / d logits = (p - onehot) / n
  Eigen::MatrixXd delta = probs;
  for (std::size_t i = 0; i < batch.size(); ++i) delta(batch.labels[i], static_cast<Eigen::Index>(i)) -= 1.0;
  delta /= static_cast<double>(batch.size());
  out.grad = backward(params, trace, delta).param_grad;
  return out;
}

ModelParams gradient(const ModelParams& params, const LabeledBatch& batch) {
  return loss_and_gradient(params, batch).grad;
}

ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double eta) {
  if (eta < 0.0) throw std::invalid_argument("learning rate must be nonnegative");
  return linear_combination(1.0, params, -eta, grad);
}

LocalTrainResult local_train(const ModelParams& start, const LabeledBatch& data,
                             const TrainSettings& settings, std::uint64_t seed) {
  require_nonempty(data, "local_train");
  if (settings.rounds < 1) throw std::invalid_argument("local_train needs at least one round");
  if (settings.batch_size < 1) throw std::invalid_argument("mini-batch size must be positive");
  Rng rng(seed);
  LocalTrainResult result{start, 0.0};
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t round = 0; round < settings.rounds; ++round) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += settings.batch_size) {
      const std::size_t end = std::min(order.size(), begin + settings.batch_size);
      LabeledBatch mini = data.subset(std::span<const std::size_t>(order).subspan(begin, end - begin));
      if (settings.learning_rate == 0.0) continue;
      add_scaled(result.params, -settings.learning_rate, gradient(result.params, mini));
    }
  }
  result.final_loss = cross_entropy_loss(result.params, data);
  return result;
}

Evaluation evaluate(const ModelParams& params, const LabeledBatch& test) {
  require_nonempty(test, "evaluate");
  Eigen::MatrixXd probs = predict_proba(params, test.inputs);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < probs.cols(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.rows(); ++c) {
      if (probs(c, i) > probs(best, i)) best = c;
    }
    if (best == test.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  Evaluation e;
  e.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  e.error_rate = 1.0 - e.accuracy;
  return e;
}

}  // namespace ddafl

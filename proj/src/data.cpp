#include "ddafl/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ddafl/rng.hpp"

namespace ddafl {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return "none";
    case AttackKind::class_flip: return "class_flip";
    case AttackKind::data_flip: return "data_flip";
  }
  return "none";
}

AttackKind parse_attack(std::string_view name) {
  if (name == "none") return AttackKind::none;
  if (name == "class_flip") return AttackKind::class_flip;
  if (name == "data_flip") return AttackKind::data_flip;
  throw std::invalid_argument("unknown attack: " + std::string(name));
}

LabeledBatch make_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(spec.features);
  Eigen::MatrixXd prototypes(d, kNumClasses);
  for (Eigen::Index c = 0; c < kNumClasses; ++c) {
    for (Eigen::Index f = 0; f < d; ++f) prototypes(f, c) = 0.5 + spec.separation * rng.uniform(-0.5, 0.5);
  }
  LabeledBatch out;
  out.inputs.resize(d, static_cast<Eigen::Index>(spec.count));
  out.labels.resize(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const int label = static_cast<int>(i % kNumClasses);
    out.labels[i] = label;
    for (Eigen::Index f = 0; f < d; ++f) {
      const double v = prototypes(f, label) + spec.noise * rng.normal();
      out.inputs(f, static_cast<Eigen::Index>(i)) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

LabeledBatch load_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not a number: " + cell);
      }
    }
    if (values.size() < 2) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": no features");
    labels.push_back(static_cast<int>(values.front()));
    rows.emplace_back(values.begin() + 1, values.end());
    if (rows.back().size() != rows.front().size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": ragged row");
    }
  }
  if (rows.empty()) throw std::runtime_error("dataset " + path + " is empty");
  LabeledBatch out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < rows[i].size(); ++f) {
      out.inputs(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i)) = rows[i][f];
    }
  }
  out.labels = std::move(labels);
  out.validate();
  return out;
}

Partition partition(const LabeledBatch& dataset, std::span<const std::size_t> sizes,
                    std::size_t rsu_size, std::uint64_t seed) {
  const std::size_t needed = std::accumulate(sizes.begin(), sizes.end(), rsu_size);
  if (needed > dataset.size()) {
    throw std::invalid_argument("insufficient data: need " + std::to_string(needed) + " samples, have " +
                                std::to_string(dataset.size()));
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  Partition out;
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    auto slice = std::span<const std::size_t>(order).subspan(pos, n);
    pos += n;
    return dataset.subset(slice);
  };
  for (std::size_t v = 0; v < sizes.size(); ++v) {
    out.vehicles.push_back(DataShard{static_cast<int>(v), take(sizes[v]), AttackKind::none, false});
  }
  out.rsu = DataShard{kRsuOwner, take(rsu_size), AttackKind::none, false};
  out.unassigned = dataset.size() - pos;
  return out;
}

LabeledBatch class_flip(const LabeledBatch& batch) {
  LabeledBatch out = batch;
  for (int& y : out.labels) {
    if (y < 0 || y >= kNumClasses) throw std::invalid_argument("class_flip: label out of range");
    y = kNumClasses - 1 - y;
  }
  return out;
}

LabeledBatch data_flip(const LabeledBatch& batch) {
  if (batch.inputs.size() > 0 && (batch.inputs.minCoeff() < 0.0 || batch.inputs.maxCoeff() > 1.0)) {
    throw std::invalid_argument("data_flip: feature out of [0, 1]");
  }
  LabeledBatch out = batch;
  out.inputs = (1.0 - batch.inputs.array()).matrix();
  return out;
}

LabeledBatch apply_attack(const LabeledBatch& batch, AttackKind kind) {
  switch (kind) {
    case AttackKind::none: return batch;
    case AttackKind::class_flip: return class_flip(batch);
    case AttackKind::data_flip: return data_flip(batch);
  }
  return batch;
}

ModelParams degrade_bad_node(const ModelParams& params, double noise_scale, std::uint64_t seed) {
  if (noise_scale < 0.0) throw std::invalid_argument("noise scale must be nonnegative");
  ModelParams out = params;
  if (noise_scale == 0.0) return out;
  Rng rng(seed);
  for (std::size_t l = 0; l < out.layer_count(); ++l) {
    for (Eigen::Index i = 0; i < out.weights[l].size(); ++i) out.weights[l].data()[i] += noise_scale * rng.normal();
    for (Eigen::Index i = 0; i < out.biases[l].size(); ++i) out.biases[l][i] += noise_scale * rng.normal();
  }
  return out;
}

}  // namespace ddafl

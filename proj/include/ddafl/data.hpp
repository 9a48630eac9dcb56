#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddafl/local_model.hpp"
#include "ddafl/model_params.hpp"

namespace ddafl {

enum class AttackKind { none, class_flip, data_flip };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack(std::string_view name);

inline constexpr int kRsuOwner = -1;

struct DataShard {
  int owner = kRsuOwner;  // vehicle id, or kRsuOwner for the trusted RSU set
  LabeledBatch batch;
  AttackKind attack = AttackKind::none;
  bool bad_node = false;

  bool is_rsu() const { return owner == kRsuOwner; }
};

// Ten-class Gaussian blobs in [0,1]^features. Class c has prototype
// 0.5 + separation * u_c with u_c ~ U(-0.5, 0.5)^features; samples add
// N(0, noise^2) per feature and are clipped to [0, 1]. Labels are balanced.
struct SyntheticSpec {
  std::size_t count = 3000;
  std::size_t features = 64;
  double separation = 0.5;
  double noise = 0.3;
};

LabeledBatch make_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

// Rows "label, f1, ..., fd" with features already scaled to [0, 1].
// Blank lines and lines starting with '#' are skipped.
LabeledBatch load_csv_dataset(const std::string& path);

struct Partition {
  std::vector<DataShard> vehicles;
  DataShard rsu;
  std::size_t unassigned = 0;
};

// Disjoint random slices of a seeded permutation: one per vehicle in order,
// then the RSU's. Throws std::invalid_argument if the dataset is too small.
Partition partition(const LabeledBatch& dataset, std::span<const std::size_t> sizes,
                    std::size_t rsu_size, std::uint64_t seed);

// y -> 9 - y
LabeledBatch class_flip(const LabeledBatch& batch);
// a -> 1 - a
LabeledBatch data_flip(const LabeledBatch& batch);
LabeledBatch apply_attack(const LabeledBatch& batch, AttackKind kind);

// Adds N(0, noise_scale^2) to every parameter.
ModelParams degrade_bad_node(const ModelParams& params, double noise_scale, std::uint64_t seed);

}  // namespace ddafl

#include <cmath>
#include <set>

#include "ddafl/data.hpp"
#include "ddafl/local_model.hpp"
#include "doctest.h"

using namespace ddafl;
using doctest::Approx;

TEST_CASE("synthetic dataset is balanced, in range and seeded") {
  const SyntheticSpec spec{500, 12, 0.5, 0.3};
  const LabeledBatch a = make_synthetic_dataset(spec, 3);
  CHECK(a.size() == 500);
  CHECK(a.feature_count() == 12);
  CHECK_NOTHROW(a.validate());
  std::vector<int> counts(kNumClasses, 0);
  for (int y : a.labels) ++counts[static_cast<std::size_t>(y)];
  for (int c : counts) CHECK(c == 50);
  const LabeledBatch b = make_synthetic_dataset(spec, 3);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
}

TEST_CASE("partition: disjoint shards and counting") {
  LabeledBatch data;
  data.inputs = Eigen::MatrixXd::Zero(1, 1000);
  for (int i = 0; i < 1000; ++i) {
    data.inputs(0, i) = i / 1000.0;
    data.labels.push_back(i % 10);
  }
  const std::vector<std::size_t> sizes(5, 150);
  const Partition p = partition(data, sizes, 150, 9);
  CHECK(p.vehicles.size() == 5);
  CHECK(p.unassigned == 100);
  CHECK(p.rsu.is_rsu());
  std::set<double> seen;
  for (const auto& s : p.vehicles) {
    CHECK(s.batch.size() == 150);
    for (Eigen::Index j = 0; j < s.batch.inputs.cols(); ++j) CHECK(seen.insert(s.batch.inputs(0, j)).second);
  }
  CHECK(p.rsu.batch.size() == 150);
  for (Eigen::Index j = 0; j < p.rsu.batch.inputs.cols(); ++j) CHECK(seen.insert(p.rsu.batch.inputs(0, j)).second);

  const Partition q = partition(data, sizes, 150, 9);
  CHECK(q.vehicles[2].batch.inputs == p.vehicles[2].batch.inputs);
  const std::vector<std::size_t> too_big(5, 200);
  CHECK_THROWS(partition(data, too_big, 1, 9));
}

TEST_CASE("class_flip") {
  LabeledBatch b;
  b.inputs = Eigen::MatrixXd::Constant(2, 3, 0.25);
  b.labels = {3, 9, 0};
  const LabeledBatch f = class_flip(b);
  CHECK(f.labels == std::vector<int>{6, 0, 9});
  CHECK(f.inputs == b.inputs);
  CHECK(class_flip(f).labels == b.labels);
  LabeledBatch bad = b;
  bad.labels[0] = 10;
  CHECK_THROWS(class_flip(bad));
}

TEST_CASE("data_flip") {
  LabeledBatch b;
  b.inputs.resize(1, 3);
  b.inputs << 0.0, 0.5, 0.8;
  b.labels = {1, 2, 3};
  const LabeledBatch f = data_flip(b);
  CHECK(f.inputs(0, 0) == 1.0);
  CHECK(f.inputs(0, 1) == 0.5);
  CHECK(f.inputs(0, 2) == Approx(0.2));
  CHECK(f.labels == b.labels);
  CHECK(data_flip(f).inputs.isApprox(b.inputs, 1e-15));
  LabeledBatch bad = b;
  bad.inputs(0, 0) = 1.5;
  CHECK_THROWS(data_flip(bad));
  CHECK(apply_attack(b, AttackKind::none).inputs == b.inputs);
}

TEST_CASE("attack names") {
  CHECK(parse_attack("class_flip") == AttackKind::class_flip);
  CHECK(parse_attack("data_flip") == AttackKind::data_flip);
  CHECK(parse_attack("none") == AttackKind::none);
  CHECK(to_string(AttackKind::data_flip) == "data_flip");
  CHECK_THROWS(parse_attack("label_swap"));
}

TEST_CASE("degrade_bad_node") {
  const ModelParams p = init_params({100, 50, 100}, 4);
  CHECK(degrade_bad_node(p, 0.0, 5) == p);
  const ModelParams d = degrade_bad_node(p, 0.1, 5);
  CHECK(d == degrade_bad_node(p, 0.1, 5));
  const auto a = p.flatten();
  const auto b = d.flatten();
  REQUIRE(a.size() >= 10000);
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += b[i] - a[i];
  mean /= static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sq += (b[i] - a[i] - mean) * (b[i] - a[i] - mean);
  const double sd = std::sqrt(sq / static_cast<double>(a.size()));
  CHECK(sd == Approx(0.1).epsilon(0.05));
}

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace ddafl {

// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

// Hashes a path of integers (e.g. {run_seed, tag, episode, vehicle}) into a
// stream seed. Distinct paths give statistically independent streams.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> path);

// Stream tags. Keep stable: they are part of the reproducibility contract.
enum class Stream : std::uint64_t {
  dataset = 1,
  partition,
  attack_placement,
  global_init,
  start_positions,
  channel,
  compute,
  local_batches,
  bad_node_noise,
  agent_init,
  exploration,
  replay,
  test_set,
};

// Seeded generator with platform-independent uniform and normal draws
// (mt19937_64 bits, 53-bit uniforms, Box-Muller normals).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double normal();  // N(0, 1)
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Circularly-symmetric complex Gaussian with E|z|^2 = 1.
  std::complex<double> complex_normal();
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Digest of the internal state, for checkpoint manifests.
  std::uint64_t digest() const;

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ddafl

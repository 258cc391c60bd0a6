#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace pglim {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Stream derivation for reproducible parallel sampling:
//   stream_seed(seed, n) = mix64(mix64(seed) + (n + 1) * 0x9E3779B97F4A7C15).
// Every trajectory/batch draws from its own stream, so results are identical
// under any worker schedule.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

// Standard normals from a seeded mt19937_64: 53-bit uniforms mapped through a
// Box-Muller pair (both draws used). The transform is spelled out here because
// std::normal_distribution is implementation-defined and would break
// cross-platform reproducibility.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  double uniform01();  // in [0, 1)
  double normal();
  Eigen::VectorXd normal_vector(int d);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pglim

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace spongecake {

/// Stream of uniform variates in [0, 1). Each thread owns its own source.
class UniformSource {
 public:
  virtual ~UniformSource() = default;
  virtual double next() = 0;
};

/// SplitMix64 finalizer; used to derive independent stream seeds from (seed, index).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic 64-bit Mersenne Twister source. Doubles take the top 53 bits so the result
/// never rounds up to 1.
class RandomSource final : public UniformSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream = 0)
      : engine_(mix_seed(seed, stream)) {}

  double next() override { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Replays a fixed list of variates; throws StreamExhaustedError when it runs dry.
class SequenceSource final : public UniformSource {
 public:
  explicit SequenceSource(std::vector<double> values) : values_(std::move(values)) {}
  double next() override;
  std::size_t consumed() const { return pos_; }

 private:
  std::vector<double> values_;
  std::size_t pos_ = 0;
};

}  // namespace spongecake

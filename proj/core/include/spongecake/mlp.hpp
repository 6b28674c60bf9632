#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace spongecake {

enum class Activation : std::uint8_t { relu = 0, tanh = 1 };

/// Maps a raw network output onto a parameter domain.
enum class RangeMap : std::uint8_t {
  identity = 0,
  sigmoid = 1,   // (0, 1): roughness, albedo, f0
  softplus = 2,  // (0, inf): thickness, lobe weights
  tanh = 3,      // (-1, 1)
};

double apply_range_map(RangeMap map, double x);

/// Fully connected layer y = W x + b with W stored row-major (rows = outputs).
struct DenseLayer {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> weights;
  std::vector<float> bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Feed-forward network: hidden layers use `hidden`, the final layer is linear and each output
/// slot is passed through its own range map.
struct MlpWeights {
  std::vector<DenseLayer> layers;
  Activation hidden = Activation::relu;
  std::vector<RangeMap> output_maps;

  std::size_t input_width() const { return layers.empty() ? 0 : layers.front().cols; }
  std::size_t output_width() const { return layers.empty() ? 0 : layers.back().rows; }

  /// Throws FormatError on inconsistent shapes or non-finite values.
  void validate() const;
  /// Raw forward pass followed by the per-slot range maps.
  std::vector<double> forward(std::span<const double> input) const;

  bool operator==(const MlpWeights&) const = default;
};

/// Zero-initialized network with the given widths (input, hidden..., output).
MlpWeights make_mlp(std::span<const std::uint32_t> widths, Activation hidden,
                    std::vector<RangeMap> output_maps);

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Little-endian "SPCK" file; layout documented in docs/file-formats.md.
void save_weights(const MlpWeights& weights, const std::filesystem::path& path);
MlpWeights load_weights(const std::filesystem::path& path);

}  // namespace spongecake

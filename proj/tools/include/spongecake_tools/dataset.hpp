#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spongecake/bsdf_table.hpp"
#include "spongecake/layer.hpp"
#include "spongecake/random.hpp"

namespace spongecake::tools {

/// Uniform over α∈[0.05,1], γ∈[0,1]³, T∈[0.1,8], f0∈[0,1]³, orientation uniform on the upper
/// hemisphere and a fair coin between fiber and surface.
LayerSpec random_layer(UniformSource& u);

struct DatasetOptions {
  std::uint32_t count = 200;
  std::uint32_t layers = 1;
  std::uint32_t resolution = 16;
  std::uint64_t samples_per_wi = 10'000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct DatasetEntry {
  std::string file;  // relative to the output directory
  LayerStack stack;
};

/// Writes table_NNNNN.sptb (multiple-only) per configuration and manifest.json. Configuration
/// k draws its parameters from stream (seed, k) and its walks from stream (seed + 1, k).
std::vector<DatasetEntry> write_dataset(const DatasetOptions& options, const std::filesystem::path& dir);

}  // namespace spongecake::tools

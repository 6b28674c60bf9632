#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "spongecake/multiscatter.hpp"
#include "spongecake_tools/image.hpp"

namespace spongecake::tools {

enum class Strategy { bsdf, light, mis };

Strategy strategy_from_string(std::string_view text);

/// Direct lighting of a unit sphere (the layered material) resting on a grey Lambertian
/// plane z = -1 under one downward-facing square area light. Camera and light are fixed.
struct RenderOptions {
  std::uint32_t width = 48;
  std::uint32_t height = 36;
  std::uint32_t spp = 64;
  Strategy strategy = Strategy::mis;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

enum class Surface : std::uint8_t { none = 0, sphere = 1, plane = 2, light = 3 };

struct RenderResult {
  Image radiance;
  /// Per-pixel variance of the pixel estimate (channel average), i.e. sample variance / spp.
  std::vector<double> variance;
  /// Surface seen through each pixel center.
  std::vector<Surface> primary;

  double mean_variance() const;
};

/// Renders with the exact single-scattering lobe of `stack`, plus the added lobes when
/// `lobes` is given. Importance sampling follows the single-scattering sampler only.
RenderResult render(const LayerStack& stack, const std::optional<ThreeLobeParams>& lobes,
                    const RenderOptions& options);

}  // namespace spongecake::tools

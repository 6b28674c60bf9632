#pragma once

#include <cstdint>

#include "spongecake/bsdf_table.hpp"
#include "spongecake/single_scatter.hpp"

namespace spongecake {

struct QuadratureOptions {
  std::uint32_t n_cos = 1024;  // per hemisphere
  std::uint32_t n_phi = 1024;
  unsigned threads = 0;
};

/// ∫ f(wi, wo) |cos θo| dωo over the whole sphere by the midpoint rule in (cos θo, φo).
/// Partial sums are reduced in a fixed order, so the result does not depend on threads.
Spectrum integrate_projected(const DirectionalBsdf& f, const Vec3& wi,
                             const QuadratureOptions& options = {});

/// Directional albedo of exact single scattering, optionally plus delta transmission.
Spectrum single_scatter_albedo(const CompiledStack& stack, const Vec3& wi, bool with_delta,
                               const QuadratureOptions& options = {});

}  // namespace spongecake

#pragma once

#include <cstdint>
#include <optional>

#include "spongecake/bsdf_table.hpp"
#include "spongecake/multiscatter.hpp"
#include "spongecake_tools/image.hpp"

namespace spongecake::tools {

enum class LobeLayout { full_matrix, fixed_incidence };

/// Fixed-incidence pixel geometry: row r spans cos θo from 1 - 2r/rows down to 1 - 2(r+1)/rows
/// (zenith at the top, nadir at the bottom), column c spans φo in 2π[c, c+1)/cols.
struct FixedIncidenceGrid {
  std::uint32_t rows = 64;
  std::uint32_t cols = 128;

  std::size_t index(const Vec3& wo) const;
  Vec3 center(std::size_t row, std::size_t col) const;
  double projected_solid_angle(std::size_t row) const;
};

/// Incident direction in the xz-plane at polar angle theta.
Vec3 incidence(double theta);

/// Cosine-weighted pixel averages of f(wi, ·) from `supersample`² midpoint sub-samples.
Image fixed_incidence_lobe(const DirectionalBsdf& f, const Vec3& wi, const FixedIncidenceGrid& grid,
                           unsigned supersample = 4, unsigned threads = 0);

/// Random-walk estimate on the same pixels. Walks are split into 64 seed-derived streams, so
/// the image does not depend on the thread count.
Image fixed_incidence_oracle(const LayerStack& stack, const Vec3& wi, const FixedIncidenceGrid& grid,
                             std::uint64_t samples, TransportMode mode, std::uint64_t seed,
                             unsigned threads = 0);

/// Reshapes a table: row i is the incident bin (ci * n_phi + pi), column j the outgoing bin
/// (cj * n_phi + pj), lower hemisphere first.
Image full_matrix_image(const BsdfTable& table);

}  // namespace spongecake::tools

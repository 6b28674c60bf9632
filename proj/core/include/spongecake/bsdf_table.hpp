#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spongecake/math.hpp"
#include "spongecake/spectrum.hpp"

namespace spongecake {

/// Which light paths a tabulation or random walk accounts for.
enum class TransportMode : std::uint8_t {
  single_only = 0,    // exactly one scattering event (volume or substrate)
  multiple_only = 1,  // two or more events
  full = 2,           // one or more events
  full_delta = 3,     // everything, including unscattered delta transmission
};

std::string_view to_string(TransportMode mode);
TransportMode transport_mode_from_string(std::string_view text);

/// Stratified direction grid, uniform in (cos θ, φ).
///
/// Incident bins cover the upper hemisphere: n_cos cosine bins over (0, 1] times n_phi azimuth
/// bins, index i = ci * n_phi + pi. Outgoing bins cover the whole sphere with 2 n_cos cosine
/// bins over [-1, 1]; index j = cj * n_phi + pj, so the first half of the outgoing row is the
/// lower (transmission) hemisphere.
struct DirectionGrid {
  std::uint32_t n_cos = 16;
  std::uint32_t n_phi = 16;

  std::size_t wi_count() const { return std::size_t{n_cos} * n_phi; }
  std::size_t wo_count() const { return 2 * std::size_t{n_cos} * n_phi; }

  Vec3 wi_center(std::size_t i) const;
  Vec3 wo_center(std::size_t j) const;
  /// Cosine range [lo, hi] and azimuth range of an outgoing bin.
  void wo_bounds(std::size_t j, double& cos_lo, double& cos_hi, double& phi_lo,
                 double& phi_hi) const;
  std::size_t wo_index(const Vec3& w) const;
  std::size_t wi_index(const Vec3& w) const;
  /// ∫_bin |cos θ| dω of an outgoing bin.
  double wo_projected_solid_angle(std::size_t j) const;
  /// Bins touching |cos θ| < 0.02 carry high Monte Carlo variance.
  bool wo_is_grazing(std::size_t j) const;

  bool operator==(const DirectionGrid&) const = default;
};

enum class DirectionParameterization : std::uint8_t { uniform_cos_phi = 0 };

/// Discretized RGB BSDF, values ordered [wi][wo][channel].
struct BsdfTable {
  DirectionGrid grid;
  TransportMode mode = TransportMode::full;
  DirectionParameterization parameterization = DirectionParameterization::uniform_cos_phi;
  std::uint64_t samples_per_wi = 0;
  std::string material;  // canonical material text of the tabulated stack
  std::vector<float> values;

  void resize() { values.assign(grid.wi_count() * grid.wo_count() * 3, 0.0f); }
  std::size_t offset(std::size_t i, std::size_t j) const {
    return (i * grid.wo_count() + j) * 3;
  }
  float at(std::size_t i, std::size_t j, int c) const { return values[offset(i, j) + c]; }
  float& at(std::size_t i, std::size_t j, int c) { return values[offset(i, j) + c]; }

  /// Throws FormatError when metadata and payload disagree or values are negative/non-finite.
  void validate() const;
  bool operator==(const BsdfTable&) const = default;
};

/// Little-endian "SPTB" file; layout documented in docs/file-formats.md.
void save_table(const BsdfTable& table, const std::filesystem::path& path);
BsdfTable load_table(const std::filesystem::path& path);

inline constexpr std::uint32_t kTableFormatVersion = 1;

using DirectionalBsdf = std::function<Spectrum(const Vec3& wi, const Vec3& wo)>;

/// Tabulates a closed-form BSDF on the grid: incident directions at bin centers, outgoing
/// values as cosine-weighted bin averages from `supersample`² midpoint sub-samples per bin,
/// matching what Monte Carlo binning estimates.
BsdfTable tabulate_analytic(const DirectionalBsdf& f, const DirectionGrid& grid, TransportMode mode,
                            unsigned supersample = 4, unsigned threads = 0);

}  // namespace spongecake

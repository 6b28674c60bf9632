#include "spongecake_tools/lobe.hpp"

#include <cmath>

#include "spongecake/mc_oracle.hpp"
#include "spongecake/parallel.hpp"

namespace spongecake::tools {

std::size_t FixedIncidenceGrid::index(const Vec3& wo) const {
  const auto r = static_cast<std::size_t>(std::clamp((1.0 - wo.z) * 0.5 * rows, 0.0, rows - 1.0));
  double phi = std::atan2(wo.y, wo.x);
  if (phi < 0.0) phi += 2.0 * kPi;
  const auto c = std::min<std::size_t>(static_cast<std::size_t>(phi / (2.0 * kPi) * cols), cols - 1);
  return r * cols + c;
}

Vec3 FixedIncidenceGrid::center(std::size_t row, std::size_t col) const {
  return spherical_direction(1.0 - 2.0 * (row + 0.5) / rows, 2.0 * kPi * (col + 0.5) / cols);
}

double FixedIncidenceGrid::projected_solid_angle(std::size_t row) const {
  const double c0 = 1.0 - 2.0 * (row + 1.0) / rows;
  const double c1 = 1.0 - 2.0 * static_cast<double>(row) / rows;
  double integral = 0.0;  // ∫ |c| dc, splitting at the horizon
  if (c0 >= 0.0 || c1 <= 0.0) integral = 0.5 * std::abs(c1 * std::abs(c1) - c0 * std::abs(c0));
  else integral = 0.5 * (c1 * c1 + c0 * c0);
  return integral * 2.0 * kPi / cols;
}

Vec3 incidence(double theta) { return {std::sin(theta), 0.0, std::cos(theta)}; }

Image fixed_incidence_lobe(const DirectionalBsdf& f, const Vec3& wi, const FixedIncidenceGrid& grid,
                           unsigned supersample, unsigned threads) {
  Image image(grid.cols, grid.rows);
  const double s = std::max(1u, supersample);
  parallel_for(grid.rows, threads, [&](std::size_t r) {
    const double c_hi = 1.0 - 2.0 * static_cast<double>(r) / grid.rows;
    const double c_lo = 1.0 - 2.0 * (r + 1.0) / grid.rows;
    for (std::size_t col = 0; col < grid.cols; ++col) {
      const double p0 = 2.0 * kPi * col / grid.cols;
      const double p1 = 2.0 * kPi * (col + 1.0) / grid.cols;
      Spectrum sum;
      double weight = 0.0;
      for (unsigned a = 0; a < s; ++a) {
        const double c = c_hi + (a + 0.5) / s * (c_lo - c_hi);
        for (unsigned b = 0; b < s; ++b) {
          const Vec3 wo = spherical_direction(c, p0 + (b + 0.5) / s * (p1 - p0));
          sum += f(wi, wo) * std::abs(c);
          weight += std::abs(c);
        }
      }
      image.set(r, col, weight > 0.0 ? sum / weight : Spectrum{});
    }
  });
  return image;
}

Image fixed_incidence_oracle(const LayerStack& stack, const Vec3& wi, const FixedIncidenceGrid& grid,
                             std::uint64_t samples, TransportMode mode, std::uint64_t seed,
                             unsigned threads) {
  const CompiledStack compiled(stack);
  const std::size_t pixels = std::size_t{grid.rows} * grid.cols;
  constexpr std::size_t kChunks = 64;
  std::vector<std::vector<double>> partial(kChunks);
  parallel_for(kChunks, threads, [&](std::size_t k) {
    RandomSource rng(seed, k);
    const std::uint64_t n = samples * (k + 1) / kChunks - samples * k / kChunks;
    partial[k] = bin_exits(compiled, wi, n, mode, kDefaultMaxDepth, rng,
                           [&](const Vec3& w) { return grid.index(w); }, pixels);
  });
  Image image(grid.cols, grid.rows);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    const double norm = 1.0 / (static_cast<double>(samples) * grid.projected_solid_angle(r));
    for (std::size_t col = 0; col < grid.cols; ++col)
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (const auto& p : partial) sum += p[(r * grid.cols + col) * 3 + c];
        image.at(r, col, c) = static_cast<float>(sum * norm);
      }
  }
  return image;
}

Image full_matrix_image(const BsdfTable& table) {
  Image image(table.grid.wo_count(), table.grid.wi_count());
  image.rgb = table.values;
  return image;
}

}  // namespace spongecake::tools

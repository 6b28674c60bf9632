#include "spongecake/albedo.hpp"

#include <vector>

#include "spongecake/parallel.hpp"

namespace spongecake {

Spectrum integrate_projected(const DirectionalBsdf& f, const Vec3& wi,
                             const QuadratureOptions& options) {
  const std::uint32_t rows = 2 * options.n_cos;
  const double dc = 1.0 / options.n_cos;
  const double dphi = 2.0 * kPi / options.n_phi;
  std::vector<Spectrum> partial(rows);
  parallel_for(rows, options.threads, [&](std::size_t r) {
    const double c = -1.0 + (static_cast<double>(r) + 0.5) * dc;
    Spectrum row;
    for (std::uint32_t p = 0; p < options.n_phi; ++p) {
      const Vec3 wo = spherical_direction(c, (p + 0.5) * dphi);
      row += f(wi, wo);
    }
    partial[r] = row * (std::abs(c) * dc * dphi);
  });
  Spectrum total;
  for (const Spectrum& s : partial) total += s;
  return total;
}

Spectrum single_scatter_albedo(const CompiledStack& stack, const Vec3& wi, bool with_delta,
                               const QuadratureOptions& options) {
  Spectrum a = integrate_projected(
      [&](const Vec3& i, const Vec3& o) { return stack.eval_single(i, o); }, wi, options);
  if (with_delta && stack.stack().include_delta) a += stack.delta_transmittance(wi);
  return a;
}

}  // namespace spongecake

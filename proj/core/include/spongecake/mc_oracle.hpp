#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spongecake/bsdf_table.hpp"
#include "spongecake/random.hpp"
#include "spongecake/single_scatter.hpp"

namespace spongecake {

enum class ExitSide { top, bottom, absorbed_or_capped };

struct WalkOutcome {
  Vec3 exit_direction;
  Spectrum throughput{1.0};
  int bounces = 0;
  ExitSide side = ExitSide::absorbed_or_capped;
};

inline constexpr int kDefaultMaxDepth = 20;

/// Monte Carlo random walk of a photon entering the top of the stack along -wi.
///
/// Free flights use regular tracking through the piecewise-constant layers: an exponential
/// optical distance is drawn once and consumed layer by layer against the direction-dependent
/// extinction σ(d), so boundaries never deflect the path. Each interaction multiplies the
/// throughput by γ·F(h) and draws a new direction from the layer's phase function; reaching an
/// opaque substrate is a Lambertian bounce. In single_only mode the walk is absorbed at its
/// second event. A walk that would exceed `max_depth` events is reported as capped.
WalkOutcome random_walk(const CompiledStack& stack, const Vec3& wi, UniformSource& u,
                        int max_depth, TransportMode mode);

/// True when an outcome with this many events belongs to the tally of `mode`.
bool counts_toward(TransportMode mode, const WalkOutcome& outcome);

/// Launches `samples` walks along wi and sums the throughput of those counted by `mode` into
/// bin(exit direction). Returns unnormalized sums laid out [bin][channel].
std::vector<double> bin_exits(const CompiledStack& stack, const Vec3& wi, std::uint64_t samples,
                              TransportMode mode, int max_depth, UniformSource& rng,
                              const std::function<std::size_t(const Vec3&)>& bin,
                              std::size_t bin_count);

struct TabulateOptions {
  DirectionGrid grid;
  std::uint64_t samples_per_wi = 10000;
  TransportMode mode = TransportMode::full;
  int max_depth = kDefaultMaxDepth;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Bins exit directions of walks launched from each incident bin center. Each bin value is the
/// tallied energy divided by samples and by the bin's projected solid angle, i.e. the
/// cosine-weighted bin average of the BSDF. Every incident bin uses its own seed-derived stream,
/// so the result does not depend on the thread count.
BsdfTable tabulate(const LayerStack& stack, const TabulateOptions& options);

struct MonteCarloEstimate {
  Spectrum mean;
  Spectrum std_error;
};

/// Total exitance (both sides, plus delta) for unit incident irradiance along wi.
MonteCarloEstimate furnace_albedo(const LayerStack& stack, const Vec3& wi, std::uint64_t samples,
                                  TransportMode mode, std::uint64_t seed, int max_depth = 100000,
                                  unsigned threads = 0);

/// Point estimate of the single-scattering BSDF at (wi, wo) without the closed-form depth
/// integral: the interaction point is sampled by free flight along -wi and contributes
/// F·fp(wi→wo)/|cos wo| times the transmittance from that point out of the stack along wo
/// (an expected-value escape test, summed layer by layer). Paths reaching the substrate
/// contribute albedo/π times the escape transmittance.
MonteCarloEstimate estimate_single_point(const LayerStack& stack, const Vec3& wi, const Vec3& wo,
                                         std::uint64_t walks, std::uint64_t seed,
                                         unsigned threads = 0);

}  // namespace spongecake

#include "spongecake/mc_oracle.hpp"

#include <cmath>
#include <vector>

#include "spongecake/errors.hpp"
#include "spongecake/material_io.hpp"
#include "spongecake/parallel.hpp"
#include "spongecake/sampler.hpp"

namespace spongecake {

namespace {

constexpr std::uint64_t kChunkCount = 64;

enum class FlightEnd { interact, exit_top, exit_bottom };

struct PathState {
  std::size_t layer = 0;
  double depth = 0.0;  // physical depth below the top of the stack
};

/// Layer boundaries in depth; the bottom of a semi-infinite layer is +inf.
struct Slabs {
  std::span<const LayerMedium> media;
  std::vector<double> top;
  std::vector<double> bottom;

  explicit Slabs(const CompiledStack& stack) : media(stack.media()) {
    double z = 0.0;
    for (const auto& m : media) {
      top.push_back(z);
      z += m.spec().thickness;
      bottom.push_back(z);
    }
  }

  std::size_t size() const { return media.size(); }

  /// exp(-optical depth) from `state` out of the stack along d; zero when d is horizontal
  /// or heads into a semi-infinite layer.
  double escape_transmittance(const PathState& state, const Vec3& d) const {
    if (d.z == 0.0) return 0.0;
    double tau = 0.0;
    double depth = state.depth;
    if (d.z > 0.0) {
      for (std::size_t k = state.layer + 1; k-- > 0;) {
        tau += media[k].sigma(d) * (depth - top[k]) / d.z;
        depth = top[k];
      }
    } else {
      for (std::size_t k = state.layer; k < media.size(); ++k) {
        if (bottom[k] == kSemiInfinite) return 0.0;
        tau += media[k].sigma(d) * (bottom[k] - depth) / -d.z;
        depth = bottom[k];
      }
    }
    return std::exp(-tau);
  }

  /// Consumes the optical distance `tau` along d starting from `state`.
  FlightEnd fly(PathState& state, const Vec3& d, double tau) const {
    for (;;) {
      const LayerMedium& m = media[state.layer];
      const double sigma = m.sigma(d);
      double dist = kSemiInfinite;
      if (d.z < 0.0)
        dist = (bottom[state.layer] - state.depth) / -d.z;
      else if (d.z > 0.0)
        dist = (state.depth - top[state.layer]) / d.z;
      const double optical = sigma * dist;
      if (tau < optical) {
        state.depth -= d.z * (tau / sigma);
        state.depth = std::clamp(state.depth, top[state.layer], bottom[state.layer]);
        return FlightEnd::interact;
      }
      tau -= optical;
      if (d.z < 0.0) {
        if (state.layer + 1 == media.size()) {
          state.depth = bottom[state.layer];
          return FlightEnd::exit_bottom;
        }
        ++state.layer;
        state.depth = top[state.layer];
      } else {
        if (state.layer == 0) {
          state.depth = 0.0;
          return FlightEnd::exit_top;
        }
        --state.layer;
        state.depth = bottom[state.layer];
      }
    }
  }
};

double exponential(UniformSource& u) { return -std::log1p(-u.next()); }

struct ChunkTally {
  Spectrum sum;
  Spectrum sum_sq;
};

MonteCarloEstimate finish(const std::vector<ChunkTally>& chunks, std::uint64_t samples) {
  Spectrum sum, sum_sq;
  for (const auto& c : chunks) {
    sum += c.sum;
    sum_sq += c.sum_sq;
  }
  MonteCarloEstimate est;
  const double n = static_cast<double>(samples);
  est.mean = sum / n;
  for (int c = 0; c < 3; ++c) {
    const double var = std::max(0.0, sum_sq[c] / n - est.mean[c] * est.mean[c]);
    est.std_error[c] = std::sqrt(var / std::max(1.0, n - 1.0));
  }
  return est;
}

template <typename PerSample>
MonteCarloEstimate run_chunked(std::uint64_t samples, std::uint64_t seed, unsigned threads,
                               PerSample&& per_sample) {
  std::vector<ChunkTally> chunks(kChunkCount);
  parallel_for(kChunkCount, threads, [&](std::size_t c) {
    const std::uint64_t begin = samples * c / kChunkCount;
    const std::uint64_t end = samples * (c + 1) / kChunkCount;
    RandomSource rng(seed, c);
    ChunkTally tally;
    for (std::uint64_t s = begin; s < end; ++s) {
      const Spectrum v = per_sample(rng);
      tally.sum += v;
      tally.sum_sq += v * v;
    }
    chunks[c] = tally;
  });
  return finish(chunks, samples);
}

}  // namespace

bool counts_toward(TransportMode mode, const WalkOutcome& outcome) {
  if (outcome.side == ExitSide::absorbed_or_capped) return false;
  switch (mode) {
    case TransportMode::single_only:
      return outcome.bounces == 1;
    case TransportMode::multiple_only:
      return outcome.bounces >= 2;
    case TransportMode::full:
      return outcome.bounces >= 1;
    case TransportMode::full_delta:
      return true;
  }
  return false;
}

WalkOutcome random_walk(const CompiledStack& stack, const Vec3& wi, UniformSource& u,
                        int max_depth, TransportMode mode) {
  if (!(wi.z > 0.0)) throw ParameterError("random walk requires wi above the horizon");
  if (max_depth < 1) throw ParameterError("max depth must be at least 1");
  const Slabs slabs(stack);
  const SubstrateSpec& substrate = stack.stack().substrate;

  WalkOutcome out;
  PathState state;
  Vec3 d = -wi;
  for (;;) {
    const FlightEnd end = slabs.fly(state, d, exponential(u));
    if (end == FlightEnd::exit_top) {
      out.side = ExitSide::top;
      out.exit_direction = d;
      return out;
    }
    if (end == FlightEnd::exit_bottom && !substrate.present()) {
      out.side = ExitSide::bottom;
      out.exit_direction = d;
      return out;
    }
    if ((mode == TransportMode::single_only && out.bounces >= 1) || out.bounces >= max_depth) {
      out.side = ExitSide::absorbed_or_capped;
      out.exit_direction = d;
      return out;
    }
    ++out.bounces;
    const double u1 = u.next();
    const double u2 = u.next();
    if (end == FlightEnd::exit_bottom) {
      out.throughput *= substrate.albedo;
      d = sample_cosine_hemisphere(u1, u2);
      continue;
    }
    const LayerMedium& m = slabs.media[state.layer];
    const Vec3 w_in = -d;
    const Vec3 w_out = m.sggx() ? sample_flake_phase(*m.sggx(), w_in, u1, u2)
                                : sample_hg(m.spec().roughness, w_in, u1, u2);
    out.throughput *= m.reflectance(w_in, w_out);
    d = w_out;
  }
}

std::vector<double> bin_exits(const CompiledStack& stack, const Vec3& wi, std::uint64_t samples,
                              TransportMode mode, int max_depth, UniformSource& rng,
                              const std::function<std::size_t(const Vec3&)>& bin,
                              std::size_t bin_count) {
  const TransportMode walk_mode =
      mode == TransportMode::single_only ? TransportMode::single_only : TransportMode::full_delta;
  std::vector<double> accum(bin_count * 3, 0.0);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const WalkOutcome o = random_walk(stack, wi, rng, max_depth, walk_mode);
    if (!counts_toward(mode, o)) continue;
    const std::size_t j = bin(o.exit_direction);
    if (j >= bin_count) continue;
    for (int c = 0; c < 3; ++c) accum[j * 3 + c] += o.throughput[c];
  }
  return accum;
}

BsdfTable tabulate(const LayerStack& stack, const TabulateOptions& options) {
  if (options.grid.n_cos < 2 || options.grid.n_phi < 2)
    throw ParameterError("table resolution must be at least 2");
  if (options.samples_per_wi < 1) throw ParameterError("samples per incident bin must be >= 1");
  const CompiledStack compiled(stack);
  BsdfTable table;
  table.grid = options.grid;
  table.mode = options.mode;
  table.samples_per_wi = options.samples_per_wi;
  table.material = serialize_material(stack);
  table.resize();

  const std::size_t n_wo = table.grid.wo_count();
  parallel_for(table.grid.wi_count(), options.threads, [&](std::size_t i) {
    RandomSource rng(options.seed, i);
    const std::vector<double> accum = bin_exits(
        compiled, table.grid.wi_center(i), options.samples_per_wi, options.mode,
        options.max_depth, rng, [&](const Vec3& w) { return table.grid.wo_index(w); }, n_wo);
    const double n = static_cast<double>(options.samples_per_wi);
    for (std::size_t j = 0; j < n_wo; ++j) {
      const double norm = 1.0 / (n * table.grid.wo_projected_solid_angle(j));
      for (int c = 0; c < 3; ++c)
        table.at(i, j, c) = static_cast<float>(accum[j * 3 + c] * norm);
    }
  });
  return table;
}

MonteCarloEstimate furnace_albedo(const LayerStack& stack, const Vec3& wi, std::uint64_t samples,
                                  TransportMode mode, std::uint64_t seed, int max_depth,
                                  unsigned threads) {
  if (samples < 1) throw ParameterError("furnace needs at least one sample");
  const CompiledStack compiled(stack);
  const TransportMode walk_mode =
      mode == TransportMode::single_only ? TransportMode::single_only : TransportMode::full_delta;
  return run_chunked(samples, seed, threads, [&](UniformSource& rng) {
    const WalkOutcome o = random_walk(compiled, wi, rng, max_depth, walk_mode);
    return counts_toward(mode, o) ? o.throughput : Spectrum{};
  });
}

MonteCarloEstimate estimate_single_point(const LayerStack& stack, const Vec3& wi, const Vec3& wo,
                                         std::uint64_t walks, std::uint64_t seed,
                                         unsigned threads) {
  if (!(wi.z > 0.0)) throw ParameterError("single-scatter oracle requires wi above the horizon");
  if (wo.z == 0.0) return {};
  const CompiledStack compiled(stack);
  const Slabs slabs(compiled);
  const SubstrateSpec& substrate = compiled.stack().substrate;

  auto escape = [&](const PathState& state) {
    if (wo.z < 0.0 && substrate.present()) return 0.0;
    return slabs.escape_transmittance(state, wo);
  };

  return run_chunked(walks, seed, threads, [&](UniformSource& rng) -> Spectrum {
    PathState state;
    const FlightEnd end = slabs.fly(state, -wi, exponential(rng));
    if (end == FlightEnd::interact) {
      const LayerMedium& m = slabs.media[state.layer];
      return m.reflectance(wi, wo) * (m.phase(wi, wo) / std::abs(wo.z) * escape(state));
    }
    if (end == FlightEnd::exit_bottom && substrate.present() && wo.z > 0.0)
      return substrate.albedo * (kInvPi * escape(state));
    return {};
  });
}

}  // namespace spongecake

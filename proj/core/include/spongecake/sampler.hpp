#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "spongecake/microflake.hpp"
#include "spongecake/random.hpp"
#include "spongecake/single_scatter.hpp"

namespace spongecake {

/// Draws a microflake normal from the visible-normal distribution D(m)⟨wi,m⟩/σ(wi) by
/// projecting the SGGX ellipsoid onto the plane orthogonal to wi, then mirrors wi about it.
/// The density of the returned direction equals flake_phase_eval(s, wi, wo).
Vec3 sample_flake_phase(const SggxMatrix& s, const Vec3& wi, double u1, double u2);

/// Visible normal only (no mirroring).
Vec3 sample_sggx_visible_normal(const SggxMatrix& s, const Vec3& wi, double u1, double u2);

/// Closed-form Henyey-Greenstein inversion around the propagation direction -wi.
Vec3 sample_hg(double g, const Vec3& wi, double u1, double u2);

/// Cosine-weighted direction on the hemisphere around +z.
Vec3 sample_cosine_hemisphere(double u1, double u2);

/// Discrete choice between scattering in a layer, delta transmission and the substrate.
struct LayerDistribution {
  std::vector<double> layer;  // normalized probability of first interacting in layer k
  double delta = 0.0;
  double substrate = 0.0;

  double total() const;
};

enum class SampleEvent { scatter, delta, substrate };

struct SampleRecord {
  Vec3 wo;
  Spectrum weight;  // BSDF / pdf, cosine excluded
  double pdf = 0.0;  // solid-angle density, or the discrete probability for delta events
  SampleEvent event = SampleEvent::scatter;
  std::size_t layer = 0;  // meaningful for scatter events
};

/// Importance sampling of the single-scattering stack.
///
/// Every call consumes exactly three variates in a fixed order: event selection, then the two
/// direction variates (drawn even for delta events).
class StackSampler {
 public:
  explicit StackSampler(const CompiledStack& stack) : stack_(&stack) {}

  /// Requires wi.z > 0.
  LayerDistribution layer_probabilities(const Vec3& wi) const;
  double pdf(const Vec3& wi, const Vec3& wo) const;
  double pdf(const LayerDistribution& dist, const Vec3& wi, const Vec3& wo) const;
  /// Returns nullopt when the drawn direction has zero density (e.g. exactly horizontal).
  std::optional<SampleRecord> sample(const Vec3& wi, UniformSource& u) const;

 private:
  const CompiledStack* stack_;
};

LayerDistribution layer_probabilities(const LayerStack& stack, const Vec3& wi);
double pdf_stack(const LayerStack& stack, const Vec3& wi, const Vec3& wo);
std::optional<SampleRecord> sample_stack(const LayerStack& stack, const Vec3& wi,
                                         UniformSource& u);

}  // namespace spongecake

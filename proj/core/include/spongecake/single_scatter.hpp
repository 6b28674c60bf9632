#pragma once

#include <span>
#include <vector>

#include "spongecake/layer.hpp"
#include "spongecake/math.hpp"
#include "spongecake/spectrum.hpp"

namespace spongecake {

/// BSDF value in sr⁻¹ (cosine not included).
using BsdfValue = Spectrum;

/// Single-scattering reflection of one layer; requires wi.z > 0 and wo.z > 0.
BsdfValue eval_layer_reflect(const LayerMedium& layer, const Vec3& wi, const Vec3& wo);
BsdfValue eval_layer_reflect(const LayerSpec& layer, const Vec3& wi, const Vec3& wo);

/// Single-scattering transmission of one layer; requires wi.z > 0 and wo.z < 0.
/// Semi-infinite layers transmit nothing.
BsdfValue eval_layer_transmit(const LayerMedium& layer, const Vec3& wi, const Vec3& wo);
BsdfValue eval_layer_transmit(const LayerSpec& layer, const Vec3& wi, const Vec3& wo);

/// Slab depth integral ∫₀ᵀ exp(-t·Λi) exp(-(T - t)·|Λo|) dt for transmission, written in terms
/// of the optical depths a = TΛi and b = T|Λo| so it stays finite and symmetric at a = b.
double transmission_shadowing(double thickness, double a, double b);

/// ∫₀ᵀ exp(-t(Λi + Λo)) dt for reflection; thickness may be infinite.
double reflection_shadowing(double thickness, double lambda_sum);

/// A validated stack with per-layer media resolved for both viewing sides.
///
/// Evaluation canonicalizes the frame so the incident direction is above the horizon. Stacks
/// lit from below are evaluated on the mirrored stack; the opaque substrate (when present) and
/// semi-infinite layers make every lower-hemisphere pair zero.
class CompiledStack {
 public:
  explicit CompiledStack(LayerStack stack);

  const LayerStack& stack() const { return stack_; }
  std::span<const LayerMedium> media() const { return media_; }
  std::size_t size() const { return media_.size(); }

  /// Optical depth of the full stack along w (infinite with a semi-infinite layer).
  double total_optical_depth(const Vec3& w) const;

  /// τk(ω): transmittance through the layers above k (w.z > 0) or below k (w.z < 0).
  double attenuation(std::size_t k, const Vec3& w) const;

  /// Unscattered transmittance straight through every layer along wi.
  Spectrum delta_transmittance(const Vec3& wi) const;

  /// Sum of per-layer single-scattering lobes plus the attenuated substrate; excludes delta.
  BsdfValue eval_single(const Vec3& wi, const Vec3& wo) const;

 private:
  BsdfValue eval_upper(std::span<const LayerMedium> media, bool with_substrate, const Vec3& wi,
                       const Vec3& wo) const;

  LayerStack stack_;
  std::vector<LayerMedium> media_;
  std::vector<LayerMedium> mirrored_media_;
};

double attenuation(const LayerStack& stack, std::size_t k, const Vec3& w);
Spectrum delta_transmittance(const LayerStack& stack, const Vec3& wi);
BsdfValue eval_stack_single(const LayerStack& stack, const Vec3& wi, const Vec3& wo);

}  // namespace spongecake

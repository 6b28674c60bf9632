#pragma once

#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "spongecake/math.hpp"
#include "spongecake/microflake.hpp"
#include "spongecake/spectrum.hpp"

namespace spongecake {

enum class PhaseKind { fiber, surface, hg };

std::string_view to_string(PhaseKind kind);

inline constexpr double kSemiInfinite = std::numeric_limits<double>::infinity();

/// One homogeneous volumetric layer.
///
/// Density is folded into `thickness` (optical depth Tρ with ρ = 1). For hg layers
/// `roughness` holds the mean cosine g and `orientation` is ignored; f0 never applies to them.
struct LayerSpec {
  PhaseKind kind = PhaseKind::surface;
  Spectrum albedo{1.0};
  double roughness = 1.0;
  Spectrum f0{1.0};
  double thickness = 1.0;
  Vec3 orientation{0.0, 0.0, 1.0};

  bool semi_infinite() const { return thickness == kSemiInfinite; }
  bool is_flake() const { return kind != PhaseKind::hg; }

  /// Throws ParameterError naming `path` and the offending field.
  void validate(std::string_view path = "layer") const;

  bool operator==(const LayerSpec&) const = default;
};

enum class SubstrateKind { none, lambertian };

struct SubstrateSpec {
  SubstrateKind kind = SubstrateKind::none;
  Spectrum albedo{0.0};

  bool present() const { return kind != SubstrateKind::none; }
  bool operator==(const SubstrateSpec&) const = default;
};

/// Layers ordered top to bottom, with an optional opaque substrate underneath.
struct LayerStack {
  std::vector<LayerSpec> layers;
  bool include_delta = false;
  SubstrateSpec substrate;

  std::size_t size() const { return layers.size(); }
  bool has_semi_infinite() const;
  void validate() const;

  bool operator==(const LayerStack&) const = default;
};

/// A validated layer with its SGGX matrix resolved, ready for repeated evaluation.
class LayerMedium {
 public:
  explicit LayerMedium(const LayerSpec& spec);

  const LayerSpec& spec() const { return spec_; }
  const SggxMatrix* sggx() const { return sggx_ ? &*sggx_ : nullptr; }

  /// Extinction per unit optical depth along w (σ(ω) for flakes, 1 for hg).
  double sigma(const Vec3& w) const;
  /// σ(ω)/cos ω with the grazing clamp; the caller guarantees w.z != 0.
  double lambda(const Vec3& w) const;
  /// Normalized phase function; zero for an antiparallel flake pair.
  double phase(const Vec3& wi, const Vec3& wo) const;
  /// Interaction reflectance γ·Schlick(f0, |wi·h|) for flakes, γ for hg.
  Spectrum reflectance(const Vec3& wi, const Vec3& wo) const;
  /// σt(wi) F(h) fp(wi→wo).
  Spectrum reduced_phase(const Vec3& wi, const Vec3& wo) const;

 private:
  LayerSpec spec_;
  std::optional<SggxMatrix> sggx_;
};

/// Reduced phase function σt(ωi)·F(h)·fp(ωi→ωo) of a single layer.
Spectrum reduced_phase_eval(const LayerSpec& layer, const Vec3& wi, const Vec3& wo);

std::vector<LayerMedium> compile_layers(const LayerStack& stack);

/// The same stack seen from below: layer order reversed, orientations mirrored in z.
/// The substrate is dropped since it is opaque from either side.
LayerStack mirrored(const LayerStack& stack);

}  // namespace spongecake

#include "spongecake/layer.hpp"

#include <cmath>
#include <string>

#include "spongecake/errors.hpp"

namespace spongecake {

namespace {

void check_unit_range(const Spectrum& s, std::string_view path, std::string_view field) {
  for (int c = 0; c < 3; ++c)
    if (!(s[c] >= 0.0 && s[c] <= 1.0))
      throw ParameterError(std::string(path) + "." + std::string(field) + "[" +
                           std::to_string(c) + "] must lie in [0, 1]");
}

}  // namespace

std::string_view to_string(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::fiber:
      return "fiber";
    case PhaseKind::surface:
      return "surface";
    case PhaseKind::hg:
      return "hg";
  }
  return "?";
}

void LayerSpec::validate(std::string_view path) const {
  const std::string p(path);
  check_unit_range(albedo, path, "albedo");
  check_unit_range(f0, path, "f0");
  if (!(thickness > 0.0) || std::isnan(thickness))
    throw ParameterError(p + ".thickness must be positive (or inf)");
  if (kind == PhaseKind::hg) {
    if (!(std::abs(roughness) < 1.0))
      throw ParameterError(p + ".roughness (g) must lie in (-1, 1) for hg layers");
    return;
  }
  if (!(roughness > 0.0 && roughness <= 1.0))
    throw ParameterError(p + ".roughness must lie in (0, 1] for flake layers");
  const double len = length(orientation);
  if (!(std::abs(len - 1.0) <= 1e-6))
    throw ParameterError(p + ".orientation must be a unit vector");
}

bool LayerStack::has_semi_infinite() const {
  for (const auto& l : layers)
    if (l.semi_infinite()) return true;
  return false;
}

void LayerStack::validate() const {
  if (layers.empty()) throw ParameterError("layers: a stack needs at least one layer");
  check_unit_range(substrate.albedo, "substrate", "albedo");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string path = "layers[" + std::to_string(i) + "]";
    layers[i].validate(path);
    if (layers[i].semi_infinite()) {
      if (i + 1 != layers.size())
        throw ParameterError(path + ".thickness: only the bottom layer may be semi-infinite");
      if (substrate.present())
        throw ParameterError(path + ".thickness: a semi-infinite layer cannot have a substrate");
      if (include_delta)
        throw ParameterError(path +
                             ".thickness: delta transmission is undefined for a semi-infinite layer");
    }
  }
  if (include_delta && substrate.present())
    throw ParameterError("delta_transmission: an opaque substrate blocks delta transmission");
}

LayerMedium::LayerMedium(const LayerSpec& spec) : spec_(spec) {
  if (spec.kind == PhaseKind::fiber)
    sggx_.emplace(sggx_matrix(FlakeShape::fiber, spec.roughness, spec.orientation));
  else if (spec.kind == PhaseKind::surface)
    sggx_.emplace(sggx_matrix(FlakeShape::surface, spec.roughness, spec.orientation));
  else if (!(std::abs(spec.roughness) < 1.0))
    throw ParameterError("Henyey-Greenstein g must lie in (-1, 1)");
}

double LayerMedium::sigma(const Vec3& w) const {
  return sggx_ ? projected_area(*sggx_, w) : 1.0;
}

double LayerMedium::lambda(const Vec3& w) const {
  const double c = std::copysign(std::max(std::abs(w.z), kGrazingCosine), w.z);
  return sigma(w) / c;
}

double LayerMedium::phase(const Vec3& wi, const Vec3& wo) const {
  if (sggx_) return flake_phase_eval(*sggx_, wi, wo, HalfVectorPolicy::zero_on_degenerate);
  return hg_phase_eval(spec_.roughness, wi, wo);
}

Spectrum LayerMedium::reflectance(const Vec3& wi, const Vec3& wo) const {
  if (!sggx_) return spec_.albedo;
  Vec3 h;
  if (!half_vector(wi, wo, h)) return spec_.albedo * schlick(spec_.f0, 0.0);
  return spec_.albedo * schlick(spec_.f0, std::abs(dot(wi, h)));
}

Spectrum LayerMedium::reduced_phase(const Vec3& wi, const Vec3& wo) const {
  if (sggx_) {
    // σ(wi) cancels against the phase normalization: σ·D/(4σ) = D/4, which is exactly symmetric.
    Vec3 h;
    if (!half_vector(wi, wo, h)) return {};
    const double d = sggx_ndf(*sggx_, h);
    return spec_.albedo * schlick(spec_.f0, std::abs(dot(wi, h))) * (0.25 * d);
  }
  return spec_.albedo * hg_phase_eval(spec_.roughness, wi, wo);
}

Spectrum reduced_phase_eval(const LayerSpec& layer, const Vec3& wi, const Vec3& wo) {
  layer.validate();
  return LayerMedium(layer).reduced_phase(wi, wo);
}

std::vector<LayerMedium> compile_layers(const LayerStack& stack) {
  std::vector<LayerMedium> media;
  media.reserve(stack.layers.size());
  for (const auto& l : stack.layers) media.emplace_back(l);
  return media;
}

LayerStack mirrored(const LayerStack& stack) {
  LayerStack out;
  out.include_delta = stack.include_delta;
  out.layers.assign(stack.layers.rbegin(), stack.layers.rend());
  for (auto& l : out.layers) l.orientation.z = -l.orientation.z;
  return out;
}

}  // namespace spongecake

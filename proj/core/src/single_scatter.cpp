#include "spongecake/single_scatter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "spongecake/errors.hpp"

namespace spongecake {

namespace {

constexpr double kSeriesThreshold = 1e-6;
constexpr std::size_t kInlineLayers = 8;

double clamped_cos(double z) { return std::max(std::abs(z), kGrazingCosine); }

Vec3 flip_z(const Vec3& w) { return {w.x, w.y, -w.z}; }

// Per-layer optical depth along w; layers below a semi-infinite one are unreachable anyway.
double layer_depth(const LayerMedium& m, const Vec3& w, double abs_cos) {
  return m.spec().thickness * m.sigma(w) / abs_cos;
}

}  // namespace

double reflection_shadowing(double thickness, double lambda_sum) {
  if (thickness == kSemiInfinite) return 1.0 / lambda_sum;
  const double x = thickness * lambda_sum;
  if (std::abs(x) < kSeriesThreshold) return thickness * (1.0 - 0.5 * x + x * x / 6.0);
  return -std::expm1(-x) / lambda_sum;
}

double transmission_shadowing(double thickness, double a, double b) {
  if (thickness == kSemiInfinite) return 0.0;
  const double d = std::abs(a - b);
  const double base = thickness * std::exp(-std::min(a, b));
  if (d < kSeriesThreshold) return base * (1.0 - 0.5 * d + d * d / 6.0);
  return base * -std::expm1(-d) / d;
}

BsdfValue eval_layer_reflect(const LayerMedium& layer, const Vec3& wi, const Vec3& wo) {
  if (!(wi.z > 0.0 && wo.z > 0.0)) return {};
  const double ci = clamped_cos(wi.z);
  const double co = clamped_cos(wo.z);
  const double lambda_sum = layer.sigma(wi) / ci + layer.sigma(wo) / co;
  const double g = reflection_shadowing(layer.spec().thickness, lambda_sum);
  return layer.reduced_phase(wi, wo) * (g / (ci * co));
}

BsdfValue eval_layer_reflect(const LayerSpec& layer, const Vec3& wi, const Vec3& wo) {
  layer.validate();
  return eval_layer_reflect(LayerMedium(layer), wi, wo);
}

BsdfValue eval_layer_transmit(const LayerMedium& layer, const Vec3& wi, const Vec3& wo) {
  if (!(wi.z > 0.0 && wo.z < 0.0) || layer.spec().semi_infinite()) return {};
  const double ci = clamped_cos(wi.z);
  const double co = clamped_cos(wo.z);
  const double t = layer.spec().thickness;
  const double a = t * layer.sigma(wi) / ci;
  const double b = t * layer.sigma(wo) / co;
  return layer.reduced_phase(wi, wo) * (transmission_shadowing(t, a, b) / (ci * co));
}

BsdfValue eval_layer_transmit(const LayerSpec& layer, const Vec3& wi, const Vec3& wo) {
  layer.validate();
  return eval_layer_transmit(LayerMedium(layer), wi, wo);
}

CompiledStack::CompiledStack(LayerStack stack) : stack_(std::move(stack)) {
  stack_.validate();
  media_ = compile_layers(stack_);
  if (!stack_.has_semi_infinite() && !stack_.substrate.present())
    for (const auto& l : mirrored(stack_).layers) mirrored_media_.emplace_back(l);
}

double CompiledStack::total_optical_depth(const Vec3& w) const {
  const double c = clamped_cos(w.z);
  double depth = 0.0;
  for (const auto& m : media_) depth += layer_depth(m, w, c);
  return depth;
}

double CompiledStack::attenuation(std::size_t k, const Vec3& w) const {
  if (k >= media_.size()) throw ParameterError("attenuation: layer index out of range");
  const double c = clamped_cos(w.z);
  double depth = 0.0;
  if (w.z > 0.0) {
    for (std::size_t j = 0; j < k; ++j) depth += layer_depth(media_[j], w, c);
  } else {
    for (std::size_t j = k + 1; j < media_.size(); ++j) depth += layer_depth(media_[j], w, c);
  }
  return std::exp(-depth);
}

Spectrum CompiledStack::delta_transmittance(const Vec3& wi) const {
  if (stack_.substrate.present() || wi.z == 0.0) return {};
  return Spectrum(std::exp(-total_optical_depth(wi)));
}

BsdfValue CompiledStack::eval_single(const Vec3& wi, const Vec3& wo) const {
  if (wi.z == 0.0 || wo.z == 0.0) return {};
  if (wi.z > 0.0) return eval_upper(media_, stack_.substrate.present(), wi, wo);
  if (mirrored_media_.empty()) return {};
  return eval_upper(mirrored_media_, false, flip_z(wi), flip_z(wo));
}

BsdfValue CompiledStack::eval_upper(std::span<const LayerMedium> media, bool with_substrate,
                                    const Vec3& wi, const Vec3& wo) const {
  const double ci = clamped_cos(wi.z);
  const double co = clamped_cos(wo.z);
  const double inv_cos = 1.0 / (ci * co);
  BsdfValue value;

  if (wo.z > 0.0) {
    double depth = 0.0;  // optical depth above the current layer, both directions combined
    for (const auto& m : media) {
      const double lambda_i = m.sigma(wi) / ci;
      const double lambda_o = m.sigma(wo) / co;
      const double tau = std::exp(-depth);
      if (tau == 0.0) break;
      const double g = reflection_shadowing(m.spec().thickness, lambda_i + lambda_o);
      value += m.reduced_phase(wi, wo) * (tau * g * inv_cos);
      depth += m.spec().thickness * (lambda_i + lambda_o);
    }
    if (with_substrate) value += stack_.substrate.albedo * (kInvPi * std::exp(-depth));
    return value;
  }

  if (with_substrate) return value;
  const std::size_t n = media.size();
  std::array<double, 3 * kInlineLayers> inline_buf{};
  std::vector<double> heap_buf;
  double* depth_i = inline_buf.data();
  if (n > kInlineLayers) {
    heap_buf.resize(3 * n);
    depth_i = heap_buf.data();
  }
  double* depth_o = depth_i + n;
  double* below_o = depth_o + n;  // optical depth along wo of the layers under k
  for (std::size_t k = 0; k < n; ++k) {
    depth_i[k] = layer_depth(media[k], wi, ci);
    depth_o[k] = layer_depth(media[k], wo, co);
  }
  below_o[n - 1] = 0.0;
  for (std::size_t k = n - 1; k > 0; --k) below_o[k - 1] = below_o[k] + depth_o[k];

  double above_i = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = std::exp(-(above_i + below_o[k]));
    if (tau > 0.0) {
      const double g = transmission_shadowing(media[k].spec().thickness, depth_i[k], depth_o[k]);
      value += media[k].reduced_phase(wi, wo) * (tau * g * inv_cos);
    }
    above_i += depth_i[k];
  }
  return value;
}

double attenuation(const LayerStack& stack, std::size_t k, const Vec3& w) {
  return CompiledStack(stack).attenuation(k, w);
}

Spectrum delta_transmittance(const LayerStack& stack, const Vec3& wi) {
  return CompiledStack(stack).delta_transmittance(wi);
}

BsdfValue eval_stack_single(const LayerStack& stack, const Vec3& wi, const Vec3& wo) {
  return CompiledStack(stack).eval_single(wi, wo);
}

}  // namespace spongecake

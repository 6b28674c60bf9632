#include "spongecake/sampler.hpp"

#include <cmath>
#include <numeric>

#include "spongecake/errors.hpp"

namespace spongecake {

namespace {

double project(const Mat3& s, const Vec3& a, const Vec3& b) { return dot(a, s * b); }

}  // namespace

Vec3 sample_sggx_visible_normal(const SggxMatrix& sggx, const Vec3& wi, double u1, double u2) {
  const double r = std::sqrt(u1);
  const double phi = 2.0 * kPi * u2;
  const double u = r * std::cos(phi);
  const double v = r * std::sin(phi);
  const double w = std::sqrt(std::max(0.0, 1.0 - u * u - v * v));

  const Mat3& s = sggx.matrix();
  Frame frame = Frame::from_normal(wi);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const Vec3& wk = frame.s;
    const Vec3& wj = frame.t;
    const double s_kk = project(s, wk, wk);
    const double s_jj = project(s, wj, wj);
    const double s_ii = project(s, wi, wi);
    const double s_kj = project(s, wk, wj);
    const double s_ki = project(s, wk, wi);
    const double s_ji = project(s, wj, wi);

    const double det = s_kk * s_jj * s_ii - s_kj * s_kj * s_ii - s_ki * s_ki * s_jj -
                       s_ji * s_ji * s_kk + 2.0 * s_kj * s_ki * s_ji;
    const double minor = s_jj * s_ii - s_ji * s_ji;
    if (!(std::abs(det) > 1e-12 && minor > 1e-12 && s_ii > 0.0)) {
      // Rotate the tangent frame by 90 degrees and retry.
      frame = Frame{frame.t, -frame.s, frame.n};
      continue;
    }
    const double sqrt_det = std::sqrt(std::abs(det));
    const double inv_sqrt_sii = 1.0 / std::sqrt(s_ii);
    const double tmp = std::sqrt(minor);

    const Vec3 mk(sqrt_det / tmp, 0.0, 0.0);
    const Vec3 mj(-inv_sqrt_sii * (s_ki * s_ji - s_kj * s_ii) / tmp, inv_sqrt_sii * tmp, 0.0);
    const Vec3 mi(inv_sqrt_sii * s_ki, inv_sqrt_sii * s_ji, inv_sqrt_sii * s_ii);
    const Vec3 m_kji = normalize(u * mk + v * mj + w * mi);
    return normalize(m_kji.x * wk + m_kji.y * wj + m_kji.z * wi);
  }
  throw ParameterError("SGGX matrix projection is degenerate");
}

Vec3 sample_flake_phase(const SggxMatrix& s, const Vec3& wi, double u1, double u2) {
  const Vec3 m = sample_sggx_visible_normal(s, wi, u1, u2);
  return normalize(reflect(wi, m));
}

Vec3 sample_hg(double g, const Vec3& wi, double u1, double u2) {
  if (!(std::abs(g) < 1.0)) throw ParameterError("Henyey-Greenstein g must lie in (-1, 1)");
  double mu;
  if (std::abs(g) < 1e-3) {
    mu = 1.0 - 2.0 * u1;
  } else {
    const double t = (1.0 - g * g) / (1.0 - g + 2.0 * g * u1);
    mu = (1.0 + g * g - t * t) / (2.0 * g);
  }
  mu = std::clamp(mu, -1.0, 1.0);
  const Frame frame = Frame::from_normal(-wi);
  return normalize(frame.to_world(spherical_direction(mu, 2.0 * kPi * u2)));
}

Vec3 sample_cosine_hemisphere(double u1, double u2) {
  const double r = std::sqrt(u1);
  const double phi = 2.0 * kPi * u2;
  return {r * std::cos(phi), r * std::sin(phi), std::sqrt(std::max(0.0, 1.0 - u1))};
}

double LayerDistribution::total() const {
  return std::accumulate(layer.begin(), layer.end(), 0.0) + delta + substrate;
}

LayerDistribution StackSampler::layer_probabilities(const Vec3& wi) const {
  if (!(wi.z > 0.0)) throw ParameterError("sampling requires wi above the horizon");
  const auto media = stack_->media();
  const LayerStack& stack = stack_->stack();
  const double c = std::max(wi.z, kGrazingCosine);

  LayerDistribution dist;
  dist.layer.resize(media.size());
  std::vector<double> depth(media.size());
  double above = 0.0;
  for (std::size_t k = 0; k < media.size(); ++k) {
    depth[k] = media[k].spec().thickness * media[k].sigma(wi) / c;
    // P(first interaction in k) = τk(wi) (1 - exp(-dk)).
    dist.layer[k] = std::exp(-above) * -std::expm1(-depth[k]);
    above += depth[k];
  }
  const double residual = std::exp(-above);
  if (stack.substrate.present()) {
    dist.substrate = residual;
  } else if (stack.include_delta) {
    dist.delta = residual;
  } else {
    double sum = 0.0;
    for (double p : dist.layer) sum += p;
    if (sum > 0.0) {
      for (double& p : dist.layer) p /= sum;
    } else {
      // Vanishing stack: the small-depth limit is proportional to optical depth.
      const double total = std::accumulate(depth.begin(), depth.end(), 0.0);
      for (std::size_t k = 0; k < depth.size(); ++k) dist.layer[k] = depth[k] / total;
    }
  }
  return dist;
}

double StackSampler::pdf(const LayerDistribution& dist, const Vec3& wi, const Vec3& wo) const {
  const auto media = stack_->media();
  double p = 0.0;
  for (std::size_t k = 0; k < media.size(); ++k)
    if (dist.layer[k] > 0.0) p += dist.layer[k] * media[k].phase(wi, wo);
  if (dist.substrate > 0.0 && wo.z > 0.0) p += dist.substrate * wo.z * kInvPi;
  return p;
}

double StackSampler::pdf(const Vec3& wi, const Vec3& wo) const {
  return pdf(layer_probabilities(wi), wi, wo);
}

std::optional<SampleRecord> StackSampler::sample(const Vec3& wi, UniformSource& u) const {
  const double u_event = u.next();
  const double u1 = u.next();
  const double u2 = u.next();

  const LayerDistribution dist = layer_probabilities(wi);
  const auto media = stack_->media();

  SampleRecord rec;
  double cdf = 0.0;
  std::size_t chosen = media.size();
  for (std::size_t k = 0; k < media.size(); ++k) {
    cdf += dist.layer[k];
    if (u_event < cdf) {
      chosen = k;
      break;
    }
  }
  if (chosen == media.size()) {
    if (dist.delta > 0.0 && u_event < cdf + dist.delta) {
      rec.event = SampleEvent::delta;
      rec.wo = -wi;
      rec.pdf = dist.delta;
      rec.weight = stack_->delta_transmittance(wi) / dist.delta;
      return rec;
    }
    if (dist.substrate > 0.0) {
      rec.event = SampleEvent::substrate;
      rec.wo = sample_cosine_hemisphere(u1, u2);
    } else {
      // Round-off left u_event past the last bucket; fall back to the last layer with mass.
      chosen = media.size() - 1;
      while (chosen > 0 && dist.layer[chosen] == 0.0) --chosen;
    }
  }
  if (chosen < media.size()) {
    const LayerMedium& m = media[chosen];
    rec.event = SampleEvent::scatter;
    rec.layer = chosen;
    rec.wo = m.sggx() ? sample_flake_phase(*m.sggx(), wi, u1, u2)
                      : sample_hg(m.spec().roughness, wi, u1, u2);
  }
  if (rec.wo.z == 0.0) return std::nullopt;
  rec.pdf = pdf(dist, wi, rec.wo);
  if (!(rec.pdf > 0.0) || !std::isfinite(rec.pdf)) return std::nullopt;
  rec.weight = stack_->eval_single(wi, rec.wo) / rec.pdf;
  return rec;
}

LayerDistribution layer_probabilities(const LayerStack& stack, const Vec3& wi) {
  const CompiledStack compiled(stack);
  return StackSampler(compiled).layer_probabilities(wi);
}

double pdf_stack(const LayerStack& stack, const Vec3& wi, const Vec3& wo) {
  const CompiledStack compiled(stack);
  return StackSampler(compiled).pdf(wi, wo);
}

std::optional<SampleRecord> sample_stack(const LayerStack& stack, const Vec3& wi,
                                         UniformSource& u) {
  const CompiledStack compiled(stack);
  return StackSampler(compiled).sample(wi, u);
}

}  // namespace spongecake

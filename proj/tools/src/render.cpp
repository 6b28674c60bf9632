#include "spongecake_tools/render.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "spongecake/errors.hpp"
#include "spongecake/parallel.hpp"
#include "spongecake/random.hpp"
#include "spongecake/sampler.hpp"

namespace spongecake::tools {

namespace {

constexpr double kEpsilon = 1e-6;
constexpr double kNoHit = std::numeric_limits<double>::infinity();

const Vec3 kCamera{0.0, -6.0, 2.0};
const Vec3 kTarget{0.0, 0.0, -0.3};
constexpr double kFovY = 30.0 * kPi / 180.0;

constexpr double kPlaneZ = -1.0;
const Spectrum kPlaneAlbedo{0.5};

const Vec3 kLightCenter{0.5, -0.5, 3.5};
constexpr double kLightHalf = 3.5;
constexpr double kLightArea = 4.0 * kLightHalf * kLightHalf;
const Spectrum kLightRadiance{3.0};

struct Hit {
  double t = kNoHit;
  Surface surface = Surface::none;
  Vec3 p, n;
};

double hit_sphere(const Vec3& o, const Vec3& d) {
  const double b = dot(o, d);
  const double c = dot(o, o) - 1.0;
  const double disc = b * b - c;
  if (disc < 0.0) return kNoHit;
  const double s = std::sqrt(disc);
  if (const double t0 = -b - s; t0 > kEpsilon) return t0;
  if (const double t1 = -b + s; t1 > kEpsilon) return t1;
  return kNoHit;
}

double hit_plane(const Vec3& o, const Vec3& d) {
  if (d.z == 0.0) return kNoHit;
  const double t = (kPlaneZ - o.z) / d.z;
  return t > kEpsilon ? t : kNoHit;
}

/// Front face only: the light emits downwards.
double hit_light(const Vec3& o, const Vec3& d) {
  if (!(d.z > 0.0)) return kNoHit;
  const double t = (kLightCenter.z - o.z) / d.z;
  if (!(t > kEpsilon)) return kNoHit;
  const Vec3 p = o + d * t;
  if (std::abs(p.x - kLightCenter.x) > kLightHalf || std::abs(p.y - kLightCenter.y) > kLightHalf)
    return kNoHit;
  return t;
}

Hit intersect(const Vec3& o, const Vec3& d) {
  Hit h;
  auto consider = [&](double t, Surface s) {
    if (t < h.t) {
      h.t = t;
      h.surface = s;
    }
  };
  consider(hit_sphere(o, d), Surface::sphere);
  consider(hit_plane(o, d), Surface::plane);
  consider(hit_light(o, d), Surface::light);
  if (h.surface != Surface::none) {
    h.p = o + d * h.t;
    h.n = h.surface == Surface::sphere ? normalize(h.p) : Vec3{0, 0, h.surface == Surface::plane ? 1.0 : -1.0};
  }
  return h;
}

bool occluded(const Vec3& o, const Vec3& d, double dist) {
  const double limit = dist * (1.0 - 1e-7);
  return hit_sphere(o, d) < limit || hit_plane(o, d) < limit;
}

double power_heuristic(double a, double b) {
  const double a2 = a * a;
  return a2 / (a2 + b * b);
}

struct Material {
  const CompiledStack* stack;
  const StackSampler* sampler;
  const ThreeLobeModel* lobes;

  Spectrum eval(const Vec3& wi, const Vec3& wo) const {
    return lobes ? lobes->eval(wi, wo) : stack->eval_single(wi, wo);
  }
};

class ArraySource final : public UniformSource {
 public:
  explicit ArraySource(const double* u) : u_(u) {}
  double next() override { return *u_++; }

 private:
  const double* u_;
};

/// Padded stratified variates for one pixel. Each dimension group (pixel position, BSDF event,
/// BSDF direction, light point) is stratified over the pixel's samples on its own, as a
/// jittered grid for 2D groups when spp is a perfect square and a Latin hypercube otherwise,
/// and the groups are shuffled independently.
class PixelSamples {
 public:
  static constexpr int kDims = 7;  // pixel 2, event 1, direction 2, light 2

  PixelSamples(std::uint32_t spp, UniformSource& rng) : n_(spp), values_(std::size_t{spp} * kDims) {
    fill_2d(0, rng);
    fill_1d(2, rng);
    fill_2d(3, rng);
    fill_2d(5, rng);
  }

  const double* sample(std::uint32_t s) const { return values_.data() + std::size_t{s} * kDims; }

 private:
  double& at(std::uint32_t s, int dim) { return values_[std::size_t{s} * kDims + dim]; }

  std::vector<std::uint32_t> permutation(UniformSource& rng) const {
    std::vector<std::uint32_t> p(n_);
    std::iota(p.begin(), p.end(), 0u);
    for (std::uint32_t i = n_; i > 1; --i)
      std::swap(p[i - 1], p[std::min<std::uint32_t>(static_cast<std::uint32_t>(rng.next() * i), i - 1)]);
    return p;
  }

  void fill_1d(int dim, UniformSource& rng) {
    const auto p = permutation(rng);
    for (std::uint32_t s = 0; s < n_; ++s) at(p[s], dim) = (s + rng.next()) / n_;
  }

  void fill_2d(int dim, UniformSource& rng) {
    const auto m = static_cast<std::uint32_t>(std::lround(std::sqrt(static_cast<double>(n_))));
    const auto p = permutation(rng);
    if (m * m == n_) {
      for (std::uint32_t s = 0; s < n_; ++s) {
        at(p[s], dim) = (s % m + rng.next()) / m;
        at(p[s], dim + 1) = (s / m + rng.next()) / m;
      }
      return;
    }
    const auto q = permutation(rng);
    for (std::uint32_t s = 0; s < n_; ++s) {
      at(p[s], dim) = (s + rng.next()) / n_;
      at(p[s], dim + 1) = (q[s] + rng.next()) / n_;
    }
  }

  std::uint32_t n_;
  std::vector<double> values_;
};

class Integrator {
 public:
  Integrator(const Material& m, Strategy s) : material_(m), strategy_(s) {}

  /// u: event and direction variates for the BSDF technique, then two for the light point.
  Spectrum shade(const Hit& hit, const Vec3& view, const double* u) const {
    const Frame frame = Frame::from_normal(hit.n);
    const Vec3 wi = frame.to_local(view);
    if (!(wi.z > 0.0)) return {};
    const Vec3 origin = hit.p + hit.n * 1e-5;
    const bool sphere = hit.surface == Surface::sphere;
    Spectrum value;
    if (strategy_ != Strategy::light) value += bsdf_sample(frame, wi, origin, sphere, u);
    if (strategy_ != Strategy::bsdf) value += light_sample(frame, wi, origin, sphere, u + 3);
    return value;
  }

 private:
  double bsdf_pdf(bool sphere, const Vec3& wi, const Vec3& wo) const {
    if (sphere) return material_.sampler->pdf(wi, wo);
    return wo.z > 0.0 ? wo.z * kInvPi : 0.0;
  }

  Spectrum bsdf_value(bool sphere, const Vec3& wi, const Vec3& wo) const {
    if (sphere) return material_.eval(wi, wo);
    return wo.z > 0.0 ? kPlaneAlbedo * kInvPi : Spectrum{};
  }

  Spectrum bsdf_sample(const Frame& frame, const Vec3& wi, const Vec3& origin, bool sphere,
                       const double* u) const {
    Vec3 wo;
    double pdf = 0.0;
    if (sphere) {
      ArraySource source(u);
      const auto rec = material_.sampler->sample(wi, source);
      if (!rec || rec->event != SampleEvent::scatter) return {};
      wo = rec->wo;
      pdf = rec->pdf;
    } else {
      wo = sample_cosine_hemisphere(u[1], u[2]);
      pdf = wo.z * kInvPi;
    }
    if (!(pdf > 0.0) || !(wo.z > 0.0)) return {};
    const Vec3 d = frame.to_world(wo);
    const Hit h = intersect(origin, d);
    if (h.surface != Surface::light) return {};
    const Spectrum f = bsdf_value(sphere, wi, wo);
    double weight = 1.0;
    if (strategy_ == Strategy::mis) {
      const double cos_light = d.z;
      const double light_pdf = h.t * h.t / (cos_light * kLightArea);
      weight = power_heuristic(pdf, light_pdf);
    }
    return kLightRadiance * f * (weight * wo.z / pdf);
  }

  Spectrum light_sample(const Frame& frame, const Vec3& wi, const Vec3& origin, bool sphere,
                        const double* u) const {
    const Vec3 y{kLightCenter.x + (2.0 * u[0] - 1.0) * kLightHalf,
                 kLightCenter.y + (2.0 * u[1] - 1.0) * kLightHalf, kLightCenter.z};
    const Vec3 to = y - origin;
    const double dist2 = dot(to, to);
    const double dist = std::sqrt(dist2);
    const Vec3 d = to / dist;
    const double cos_light = d.z;
    if (!(cos_light > 0.0)) return {};
    const Vec3 wo = frame.to_local(d);
    if (!(wo.z > 0.0) || occluded(origin, d, dist)) return {};
    const Spectrum f = bsdf_value(sphere, wi, wo);
    const double light_pdf = dist2 / (cos_light * kLightArea);
    double weight = 1.0;
    if (strategy_ == Strategy::mis) weight = power_heuristic(light_pdf, bsdf_pdf(sphere, wi, wo));
    return kLightRadiance * f * (weight * wo.z / light_pdf);
  }

  Material material_;
  Strategy strategy_;
};

struct Camera {
  Vec3 forward, right, up;
  double tan_half;
  double aspect;

  Camera(std::uint32_t w, std::uint32_t h) {
    forward = normalize(kTarget - kCamera);
    right = normalize(cross(forward, Vec3{0, 0, 1}));
    up = cross(right, forward);
    tan_half = std::tan(0.5 * kFovY);
    aspect = static_cast<double>(w) / h;
  }

  /// (sx, sy) in [0,1)² over the image, y down.
  Vec3 ray(double sx, double sy) const {
    const double x = (2.0 * sx - 1.0) * tan_half * aspect;
    const double y = (1.0 - 2.0 * sy) * tan_half;
    return normalize(forward + right * x + up * y);
  }
};

}  // namespace

Strategy strategy_from_string(std::string_view text) {
  if (text == "bsdf") return Strategy::bsdf;
  if (text == "light") return Strategy::light;
  if (text == "mis") return Strategy::mis;
  throw ParameterError("unknown strategy '" + std::string(text) + "' (expected bsdf, light or mis)");
}

double RenderResult::mean_variance() const {
  double s = 0.0;
  for (double v : variance) s += v;
  return variance.empty() ? 0.0 : s / static_cast<double>(variance.size());
}

RenderResult render(const LayerStack& stack, const std::optional<ThreeLobeParams>& lobes,
                    const RenderOptions& options) {
  if (options.width == 0 || options.height == 0 || options.spp == 0)
    throw ParameterError("render size and spp must be positive");
  const CompiledStack compiled(stack);
  const StackSampler sampler(compiled);
  std::optional<ThreeLobeModel> model;
  if (lobes) model.emplace(stack, *lobes);
  const Integrator integrator({&compiled, &sampler, model ? &*model : nullptr}, options.strategy);
  const Camera camera(options.width, options.height);

  RenderResult result;
  result.radiance = Image(options.width, options.height);
  const std::size_t pixels = std::size_t{options.width} * options.height;
  result.variance.assign(pixels, 0.0);
  result.primary.assign(pixels, Surface::none);

  parallel_for(options.height, options.threads, [&](std::size_t row) {
    for (std::size_t col = 0; col < options.width; ++col) {
      const std::size_t pixel = row * options.width + col;
      RandomSource rng(options.seed, pixel);
      result.primary[pixel] =
          intersect(kCamera, camera.ray((col + 0.5) / options.width, (row + 0.5) / options.height)).surface;
      const PixelSamples samples(options.spp, rng);
      Spectrum sum;
      double sum_sq = 0.0;
      for (std::uint32_t s = 0; s < options.spp; ++s) {
        const double* u = samples.sample(s);
        const Vec3 d = camera.ray((col + u[0]) / options.width, (row + u[1]) / options.height);
        const Hit hit = intersect(kCamera, d);
        Spectrum value;
        if (hit.surface == Surface::light) value = kLightRadiance;
        else if (hit.surface != Surface::none) value = integrator.shade(hit, -d, u + 2);
        sum += value;
        sum_sq += value.average() * value.average();
      }
      const double n = options.spp;
      const Spectrum mean = sum / n;
      result.radiance.set(row, col, mean);
      const double m = mean.average();
      result.variance[pixel] = n > 1 ? std::max(0.0, sum_sq / n - m * m) / (n - 1.0) : 0.0;
    }
  });
  return result;
}

}  // namespace spongecake::tools

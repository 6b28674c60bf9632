#include "spongecake/microflake.hpp"

#include <cmath>
#include <string>

#include "spongecake/errors.hpp"

namespace spongecake {

namespace {

constexpr double kDeterminantGuard = 1e-12;
constexpr double kSymmetryTolerance = 1e-9;

Mat3 adjugate_inverse(const Mat3& a, double det) {
  Mat3 inv;
  inv(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  inv(0, 1) = a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2);
  inv(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  inv(1, 0) = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
  inv(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  inv(1, 2) = a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2);
  inv(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  inv(2, 1) = a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1);
  inv(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  for (double& v : inv.m) v /= det;
  return inv;
}

}  // namespace

SggxMatrix::SggxMatrix(const Mat3& s) : s_(s) {
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(s(i, j) - s(j, i)) > kSymmetryTolerance)
        throw ParameterError("SGGX matrix is not symmetric");
  // Sylvester's criterion: all leading principal minors positive.
  const double m1 = s(0, 0);
  const double m2 = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
  const double det = s.determinant();
  if (!(m1 > 0.0 && m2 > 0.0 && det > kDeterminantGuard))
    throw ParameterError("SGGX matrix is not positive definite (det " + std::to_string(det) + ")");
  inv_ = adjugate_inverse(s, det);
  alpha_det_ = std::sqrt(det);
}

SggxMatrix sggx_matrix(FlakeShape shape, double alpha, const Vec3& orientation) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ParameterError("SGGX roughness must lie in (0, 1], got " + std::to_string(alpha));
  const double len = length(orientation);
  if (!(len > 0.0) || !std::isfinite(len))
    throw ParameterError("flake orientation must be a non-zero finite vector");
  const Vec3 n = orientation / len;

  const double a2 = alpha * alpha;
  // Eigenvalue across the orientation axis (tangential) and along it.
  const double tangential = shape == FlakeShape::fiber ? 1.0 : a2;
  const double axial = shape == FlakeShape::fiber ? a2 : 1.0;

  // Q diag(t, t, a) Qᵀ = t (I - n nᵀ) + a n nᵀ for any frame Q with third column n.
  Mat3 s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double nn = n[i] * n[j];
      s(i, j) = (i == j ? tangential : 0.0) + (axial - tangential) * nn;
    }
  return SggxMatrix(s);
}

double sggx_ndf(const SggxMatrix& s, const Vec3& w) {
  const double q = quadratic_form(s.inverse(), w);
  return 1.0 / (kPi * s.alpha_det() * q * q);
}

double projected_area(const SggxMatrix& s, const Vec3& w) {
  return std::sqrt(std::max(0.0, quadratic_form(s.matrix(), w)));
}

double lambda_fn(const SggxMatrix& s, const Vec3& w) {
  if (w.z == 0.0) throw GrazingError("Lambda is singular for horizontal directions");
  const double cos_clamped = std::copysign(std::max(std::abs(w.z), kGrazingCosine), w.z);
  return projected_area(s, w) / cos_clamped;
}

bool half_vector(const Vec3& wi, const Vec3& wo, Vec3& h) {
  const Vec3 sum = wi + wo;
  const double len2 = dot(sum, sum);
  if (!(len2 > 1e-24)) return false;
  h = sum / std::sqrt(len2);
  return true;
}

double flake_phase_eval(const SggxMatrix& s, const Vec3& wi, const Vec3& wo,
                        HalfVectorPolicy policy) {
  Vec3 h;
  if (!half_vector(wi, wo, h)) {
    if (policy == HalfVectorPolicy::throw_on_degenerate)
      throw DegenerateHalfVectorError("half vector undefined for antiparallel directions");
    return 0.0;
  }
  const double sigma = projected_area(s, wi);
  if (sigma <= 0.0) return 0.0;
  return sggx_ndf(s, h) / (4.0 * sigma);
}

double hg_phase_eval(double g, const Vec3& wi, const Vec3& wo) {
  if (!(std::abs(g) < 1.0)) throw ParameterError("Henyey-Greenstein g must lie in (-1, 1)");
  const double mu = -dot(wi, wo);
  const double denom = 1.0 + g * g - 2.0 * g * mu;
  return kInv4Pi * (1.0 - g * g) / (denom * std::sqrt(denom));
}

Spectrum schlick(const Spectrum& f0, double cos_theta) {
  const double c = std::clamp(cos_theta, 0.0, 1.0);
  const double m = 1.0 - c;
  const double m2 = m * m;
  const double w = m2 * m2 * m;
  return {f0.r + (1.0 - f0.r) * w, f0.g + (1.0 - f0.g) * w, f0.b + (1.0 - f0.b) * w};
}

}  // namespace spongecake

#pragma once

#include "spongecake/math.hpp"
#include "spongecake/spectrum.hpp"

namespace spongecake {

enum class FlakeShape { fiber, surface };

/// Symmetric positive-definite matrix describing an SGGX microflake distribution.
///
/// Fiber-like distributions are diag(1, 1, α²) and surface-like ones diag(α², α², 1) in the
/// frame whose z axis is the flake orientation. The inverse and sqrt(det S) are cached since
/// every NDF evaluation needs them.
class SggxMatrix {
 public:
  /// Validates symmetry (1e-9) and positive definiteness.
  explicit SggxMatrix(const Mat3& s);

  const Mat3& matrix() const { return s_; }
  const Mat3& inverse() const { return inv_; }
  /// sqrt(det S); equals α for the axis-aligned forms.
  double alpha_det() const { return alpha_det_; }

 private:
  Mat3 s_;
  Mat3 inv_;
  double alpha_det_;
};

/// Builds Q·diag·Qᵀ where Q maps the local z axis onto `orientation`.
/// Throws ParameterError for alpha outside (0, 1] or a zero-length orientation.
SggxMatrix sggx_matrix(FlakeShape shape, double alpha, const Vec3& orientation);

/// D(ω) = 1 / (π sqrt(det S) q²), q = ωᵀS⁻¹ω.
double sggx_ndf(const SggxMatrix& s, const Vec3& w);

/// σ(ω) = sqrt(ωᵀSω).
double projected_area(const SggxMatrix& s, const Vec3& w);

inline constexpr double kGrazingCosine = 1e-7;

/// Λ(ω) = σ(ω)/cos ω, negative below the horizon. |cos ω| is clamped to kGrazingCosine;
/// an exactly horizontal direction throws GrazingError.
double lambda_fn(const SggxMatrix& s, const Vec3& w);

enum class HalfVectorPolicy { throw_on_degenerate, zero_on_degenerate };

/// Specular microflake phase function D(h) / (4 σ(ωi)). Both directions point away from the
/// scattering point, so h is the normalized sum wi + wo.
double flake_phase_eval(const SggxMatrix& s, const Vec3& wi, const Vec3& wo,
                        HalfVectorPolicy policy = HalfVectorPolicy::throw_on_degenerate);

/// Henyey-Greenstein density of the angle between wo and the propagation direction -wi.
double hg_phase_eval(double g, const Vec3& wi, const Vec3& wo);

/// f0 + (1 - f0)(1 - cos)^5 per channel; cos is clamped to [0, 1].
Spectrum schlick(const Spectrum& f0, double cos_theta);

/// Writes the normalized wi + wo to `h`; returns false for an antiparallel pair.
bool half_vector(const Vec3& wi, const Vec3& wo, Vec3& h);

}  // namespace spongecake

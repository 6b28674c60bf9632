#pragma once

#include <vector>

#include "spongecake/bsdf_table.hpp"
#include "spongecake/mlp.hpp"
#include "spongecake/single_scatter.hpp"

namespace spongecake {

/// Parameters of the two lobes added on top of exact single scattering.
struct ThreeLobeParams {
  std::vector<LayerSpec> modified_layers;  // same count, kinds and orientations as the source
  double w1 = 0.0;                         // weight of the modified single-scattering lobe
  double w2 = 0.0;                         // weight of the Lambertian lobe

  /// Throws ParameterError if the params do not belong to `stack`.
  void validate_against(const LayerStack& stack) const;
};

/// Parameters with both weights zero and unmodified layers.
ThreeLobeParams zero_lobes(const LayerStack& stack);

struct LobeOptions {
  bool lambert_transmission = false;  // Lambert lobe also covers the transmission hemisphere
};

struct LobeBreakdown {
  BsdfValue single;
  BsdfValue modified;  // already multiplied by w1
  BsdfValue lambert;   // already multiplied by w2

  BsdfValue total() const { return single + modified + lambert; }
};

/// Exact single scattering plus w1 · single scattering of the modified stack plus w2/π.
class ThreeLobeModel {
 public:
  ThreeLobeModel(const LayerStack& stack, const ThreeLobeParams& params, LobeOptions options = {});

  const CompiledStack& exact() const { return exact_; }
  const CompiledStack& modified() const { return modified_; }
  const ThreeLobeParams& params() const { return params_; }

  LobeBreakdown eval_lobes(const Vec3& wi, const Vec3& wo) const;
  BsdfValue eval(const Vec3& wi, const Vec3& wo) const { return eval_lobes(wi, wo).total(); }
  /// Albedo-free Lambert factor (1/π or 0) for the pair.
  double lambert_basis(const Vec3& wi, const Vec3& wo) const;

 private:
  CompiledStack exact_;
  CompiledStack modified_;
  ThreeLobeParams params_;
  LobeOptions options_;
  bool lit_from_below_ = false;
};

BsdfValue eval_full(const LayerStack& stack, const ThreeLobeParams& params, const Vec3& wi,
                    const Vec3& wo, LobeOptions options = {});

/// Network input for one stack: 12 values per layer (α, γ rgb, T, f0 rgb, k, ωp xyz).
/// Throws ParameterError for hg or semi-infinite layers.
std::vector<double> encode_stack(const LayerStack& stack);

/// Runs the network. The output holds 8 values per modified layer (α, γ rgb, T, f0 rgb) then
/// w1 and w2. A two-or-more-layer input with a single-layer output modifies the bottom layer
/// only and copies the others unchanged.
ThreeLobeParams mlp_infer(const MlpWeights& weights, const LayerStack& stack);

struct FitOptions {
  int max_evaluations = 1500;
  double tolerance = 1e-7;  // simplex spread in loss at which the search stops
  LobeOptions lobes;
};

struct FitResult {
  ThreeLobeParams params;
  double mae = 0.0;           // achieved table MAE
  double baseline_mae = 0.0;  // MAE with both weights at zero
  bool converged = false;     // false: budget exhausted, params are the best found
  int evaluations = 0;
};

/// Fits the added lobes to a multiple-scattering-only table by Nelder-Mead over the modified
/// layer parameters, starting at the source stack. For each candidate lobe shape the
/// non-negative weights (w1, w2) are solved by least absolute deviation, so the loss the
/// simplex sees is already minimized over the weights. Lobes are evaluated at bin centers.
FitResult fit_direct(const LayerStack& stack, const BsdfTable& target, const FitOptions& options = {});

/// Table MAE of the two added lobes against `target` (averaged over bins and channels).
double lobe_table_mae(const LayerStack& stack, const ThreeLobeParams& params,
                      const BsdfTable& target, LobeOptions options = {});

}  // namespace spongecake

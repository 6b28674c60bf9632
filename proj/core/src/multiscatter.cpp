#include "spongecake/multiscatter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spongecake/errors.hpp"

namespace spongecake {

namespace {

constexpr double kMinRoughness = 1e-4;
constexpr double kMinThickness = 1e-6;

bool is_opaque(const LayerStack& stack) {
  return stack.substrate.present() || stack.has_semi_infinite();
}

LayerStack modified_stack(const ThreeLobeParams& params) {
  LayerStack s;
  s.layers = params.modified_layers;
  return s;
}

double logit(double p) {
  p = std::clamp(p, 1e-4, 1.0 - 1e-4);
  return std::log(p / (1.0 - p));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Minimizes Σ |w·a_n - r_n| over w ≥ 0 for non-negative a (weighted median of r/a).
double l1_nonneg_scale(const std::vector<double>& a, const std::vector<double>& r,
                       std::vector<std::pair<double, double>>& scratch) {
  scratch.clear();
  double total = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (a[n] > 0.0) {
      scratch.emplace_back(r[n] / a[n], a[n]);
      total += a[n];
    }
  }
  if (scratch.empty()) return 0.0;
  // Weighted quickselect: expected linear time, the fit calls this thousands of times.
  const double half = 0.5 * total;
  std::size_t lo = 0, hi = scratch.size();
  double below = 0.0;  // weight of everything left of lo
  for (;;) {
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(scratch.begin() + lo, scratch.begin() + mid, scratch.begin() + hi);
    double left = 0.0;
    for (std::size_t k = lo; k < mid; ++k) left += scratch[k].second;
    if (below + left >= half && mid > lo) {
      hi = mid;
    } else if (below + left + scratch[mid].second >= half || mid + 1 >= hi) {
      return std::max(0.0, scratch[mid].first);
    } else {
      below += left + scratch[mid].second;
      lo = mid + 1;
    }
  }
}

/// Table samples flattened over (wi, wo, channel).
struct FitProblem {
  const LayerStack* stack;
  DirectionGrid grid;
  LobeOptions lobes;
  std::vector<Vec3> wi, wo;
  std::vector<double> target;   // (i, j, c)
  std::vector<double> lambert;  // (i, j, c) basis, duplicated per channel
  bool opaque = false;

  std::vector<double> modified_lobe(const LayerStack& modified) const {
    const CompiledStack compiled(modified);
    std::vector<double> out(target.size());
    std::size_t n = 0;
    for (const Vec3& i : wi) {
      for (const Vec3& o : wo) {
        Spectrum v;
        if (!(opaque && o.z < 0.0)) v = compiled.eval_single(i, o);
        for (int c = 0; c < 3; ++c) out[n++] = v[c];
      }
    }
    return out;
  }

  /// Best non-negative (w1, w2) for the lobe and its MAE.
  double solve_weights(const std::vector<double>& lobe, double& w1, double& w2) const {
    const std::size_t n = target.size();
    auto mae = [&](double a, double b) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += std::abs(a * lobe[k] + b * lambert[k] - target[k]);
      return s / static_cast<double>(n);
    };
    // Least-squares start, projected onto the feasible quadrant.
    double mm = 0, ml = 0, ll = 0, mt = 0, lt = 0;
    for (std::size_t k = 0; k < n; ++k) {
      mm += lobe[k] * lobe[k];
      ml += lobe[k] * lambert[k];
      ll += lambert[k] * lambert[k];
      mt += lobe[k] * target[k];
      lt += lambert[k] * target[k];
    }
    const double det = mm * ll - ml * ml;
    w1 = 0.0;
    w2 = 0.0;
    if (det > 1e-12 * std::max(1e-300, mm * ll)) {
      w1 = std::max(0.0, (mt * ll - lt * ml) / det);
      w2 = std::max(0.0, (lt * mm - mt * ml) / det);
    }
    std::vector<double> residual(n);
    std::vector<std::pair<double, double>> scratch;
    for (int round = 0; round < 12; ++round) {
      const double prev1 = w1, prev2 = w2;
      for (std::size_t k = 0; k < n; ++k) residual[k] = target[k] - w2 * lambert[k];
      w1 = l1_nonneg_scale(lobe, residual, scratch);
      for (std::size_t k = 0; k < n; ++k) residual[k] = target[k] - w1 * lobe[k];
      w2 = l1_nonneg_scale(lambert, residual, scratch);
      if (w1 == prev1 && w2 == prev2) break;
    }
    double best = mae(w1, w2);
    // Single-lobe and empty solutions guard against coordinate descent stalling at a kink.
    for (std::size_t k = 0; k < n; ++k) residual[k] = target[k];
    const double only1 = l1_nonneg_scale(lobe, residual, scratch);
    const double only2 = l1_nonneg_scale(lambert, residual, scratch);
    const std::pair<double, double> candidates[] = {{0.0, 0.0}, {only1, 0.0}, {0.0, only2}};
    for (const auto& [a, b] : candidates) {
      const double m = mae(a, b);
      if (m < best) {
        best = m;
        w1 = a;
        w2 = b;
      }
    }
    return best;
  }
};

/// Unconstrained coordinates for the optimizable fields of each layer.
struct LayerCoding {
  std::vector<LayerSpec> base;

  std::vector<double> encode() const {
    std::vector<double> x;
    for (const LayerSpec& l : base) {
      x.push_back(l.is_flake() ? logit(l.roughness)
                               : std::atanh(std::clamp(l.roughness, -0.999, 0.999)));
      for (int c = 0; c < 3; ++c) x.push_back(logit(l.albedo[c]));
      if (!l.semi_infinite()) x.push_back(std::log(std::max(l.thickness, kMinThickness)));
      if (l.is_flake())
        for (int c = 0; c < 3; ++c) x.push_back(logit(l.f0[c]));
    }
    return x;
  }

  std::vector<LayerSpec> decode(const std::vector<double>& x) const {
    std::vector<LayerSpec> out = base;
    std::size_t k = 0;
    for (LayerSpec& l : out) {
      l.roughness = l.is_flake() ? std::clamp(sigmoid(x[k]), kMinRoughness, 1.0)
                                 : std::clamp(std::tanh(x[k]), -0.999, 0.999);
      ++k;
      for (int c = 0; c < 3; ++c) l.albedo[c] = sigmoid(x[k++]);
      if (!l.semi_infinite())
        l.thickness = std::clamp(std::exp(x[k++]), kMinThickness, 1e6);
      if (l.is_flake())
        for (int c = 0; c < 3; ++c) l.f0[c] = sigmoid(x[k++]);
    }
    return out;
  }
};

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  bool converged = false;
};

template <typename F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, double step, double tolerance,
                          int& budget) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> vals(d + 1);
  for (std::size_t k = 0; k < d; ++k) pts[k + 1][k] += step;
  for (std::size_t k = 0; k <= d; ++k) {
    vals[k] = f(pts[k]);
    --budget;
  }
  std::vector<std::size_t> order(d + 1);
  auto point = [&](const std::vector<double>& c, const std::vector<double>& p, double t) {
    std::vector<double> r(d);
    for (std::size_t k = 0; k < d; ++k) r[k] = c[k] + t * (p[k] - c[k]);
    return r;
  };
  bool converged = false;
  while (budget > 0) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[d - 1];
    if (vals[worst] - vals[best] <= tolerance * vals[best] + 1e-15) {
      converged = true;
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (std::size_t k = 0; k <= d; ++k)
      if (k != worst)
        for (std::size_t m = 0; m < d; ++m) centroid[m] += pts[k][m] / static_cast<double>(d);

    const auto xr = point(centroid, pts[worst], -1.0);
    const double fr = f(xr);
    --budget;
    if (fr < vals[best]) {
      const auto xe = point(centroid, pts[worst], -2.0);
      const double fe = f(xe);
      --budget;
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const auto xc = point(centroid, outside ? xr : pts[worst], 0.5);
    const double fc = f(xc);
    --budget;
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= d; ++k) {
      if (k == best) continue;
      pts[k] = point(pts[best], pts[k], 0.5);
      vals[k] = f(pts[k]);
      --budget;
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  return {pts[static_cast<std::size_t>(it - vals.begin())], *it, converged};
}

FitProblem make_problem(const LayerStack& stack, const BsdfTable& target, LobeOptions lobes) {
  target.validate();
  FitProblem p;
  p.stack = &stack;
  p.grid = target.grid;
  p.lobes = lobes;
  p.opaque = is_opaque(stack);
  for (std::size_t i = 0; i < target.grid.wi_count(); ++i) p.wi.push_back(target.grid.wi_center(i));
  for (std::size_t j = 0; j < target.grid.wo_count(); ++j) p.wo.push_back(target.grid.wo_center(j));
  p.target.assign(target.values.begin(), target.values.end());
  ThreeLobeParams unit = zero_lobes(stack);
  unit.w2 = 1.0;
  const ThreeLobeModel model(stack, unit, lobes);
  p.lambert.reserve(p.target.size());
  for (const Vec3& i : p.wi)
    for (const Vec3& o : p.wo) {
      const double b = model.lambert_basis(i, o);
      for (int c = 0; c < 3; ++c) p.lambert.push_back(b);
    }
  return p;
}

}  // namespace

void ThreeLobeParams::validate_against(const LayerStack& stack) const {
  if (!(std::isfinite(w1) && w1 >= 0.0 && std::isfinite(w2) && w2 >= 0.0))
    throw ParameterError("lobe weights must be finite and non-negative");
  if (modified_layers.size() != stack.layers.size())
    throw ParameterError("modified layer count does not match the stack");
  for (std::size_t k = 0; k < modified_layers.size(); ++k) {
    const LayerSpec& m = modified_layers[k];
    const LayerSpec& s = stack.layers[k];
    const std::string path = "modified layers[" + std::to_string(k) + "]";
    if (m.kind != s.kind) throw ParameterError(path + ": phase kind differs from the stack");
    if (s.is_flake() && !(m.orientation == s.orientation))
      throw ParameterError(path + ": orientation differs from the stack");
    if (m.semi_infinite() != s.semi_infinite())
      throw ParameterError(path + ": semi-infinite thickness differs from the stack");
    m.validate(path);
  }
}

ThreeLobeParams zero_lobes(const LayerStack& stack) {
  ThreeLobeParams p;
  p.modified_layers = stack.layers;
  return p;
}

ThreeLobeModel::ThreeLobeModel(const LayerStack& stack, const ThreeLobeParams& params,
                               LobeOptions options)
    : exact_(stack), modified_(modified_stack(params)), params_(params), options_(options) {
  params.validate_against(stack);
}

double ThreeLobeModel::lambert_basis(const Vec3& wi, const Vec3& wo) const {
  if (wi.z == 0.0 || wo.z == 0.0) return 0.0;
  const bool opaque = is_opaque(exact_.stack());
  if (opaque && (wi.z < 0.0 || wo.z < 0.0)) return 0.0;
  const bool reflect = (wi.z > 0.0) == (wo.z > 0.0);
  if (!reflect && !options_.lambert_transmission) return 0.0;
  return kInvPi;
}

LobeBreakdown ThreeLobeModel::eval_lobes(const Vec3& wi, const Vec3& wo) const {
  LobeBreakdown b;
  b.single = exact_.eval_single(wi, wo);
  const bool opaque = is_opaque(exact_.stack());
  if (params_.w1 > 0.0 && !(opaque && (wi.z < 0.0 || wo.z < 0.0)))
    b.modified = modified_.eval_single(wi, wo) * params_.w1;
  if (params_.w2 > 0.0) b.lambert = Spectrum(params_.w2 * lambert_basis(wi, wo));
  return b;
}

BsdfValue eval_full(const LayerStack& stack, const ThreeLobeParams& params, const Vec3& wi,
                    const Vec3& wo, LobeOptions options) {
  return ThreeLobeModel(stack, params, options).eval(wi, wo);
}

std::vector<double> encode_stack(const LayerStack& stack) {
  stack.validate();
  std::vector<double> x;
  x.reserve(12 * stack.size());
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const LayerSpec& l = stack.layers[k];
    if (!l.is_flake())
      throw ParameterError("layers[" + std::to_string(k) +
                           "]: hg layers are outside the network's domain");
    if (l.semi_infinite())
      throw ParameterError("layers[" + std::to_string(k) +
                           "]: semi-infinite layers are outside the network's domain");
    x.push_back(l.roughness);
    for (int c = 0; c < 3; ++c) x.push_back(l.albedo[c]);
    x.push_back(l.thickness);
    for (int c = 0; c < 3; ++c) x.push_back(l.f0[c]);
    x.push_back(l.kind == PhaseKind::fiber ? 0.0 : 1.0);
    x.push_back(l.orientation.x);
    x.push_back(l.orientation.y);
    x.push_back(l.orientation.z);
  }
  return x;
}

ThreeLobeParams mlp_infer(const MlpWeights& weights, const LayerStack& stack) {
  const std::vector<double> input = encode_stack(stack);
  if (weights.input_width() != input.size())
    throw FormatError("network input width " + std::to_string(weights.input_width()) +
                      " does not match a " + std::to_string(stack.size()) + "-layer stack");
  const std::size_t out_width = weights.output_width();
  if (out_width < 10 || (out_width - 2) % 8 != 0)
    throw FormatError("network output width " + std::to_string(out_width) + " is not 8n + 2");
  const std::size_t modified = (out_width - 2) / 8;
  if (modified != stack.size() && modified != 1)
    throw FormatError("network output covers " + std::to_string(modified) +
                      " layers, stack has " + std::to_string(stack.size()));

  const std::vector<double> y = weights.forward(input);
  ThreeLobeParams p = zero_lobes(stack);
  const std::size_t first = stack.size() - modified;
  for (std::size_t m = 0; m < modified; ++m) {
    LayerSpec& l = p.modified_layers[first + m];
    const double* v = y.data() + 8 * m;
    l.roughness = std::clamp(v[0], kMinRoughness, 1.0);
    l.albedo = Spectrum(std::clamp(v[1], 0.0, 1.0), std::clamp(v[2], 0.0, 1.0),
                        std::clamp(v[3], 0.0, 1.0));
    l.thickness = std::max(v[4], kMinThickness);
    l.f0 = Spectrum(std::clamp(v[5], 0.0, 1.0), std::clamp(v[6], 0.0, 1.0),
                    std::clamp(v[7], 0.0, 1.0));
  }
  p.w1 = std::max(0.0, y[out_width - 2]);
  p.w2 = std::max(0.0, y[out_width - 1]);
  if (!std::isfinite(p.w1) || !std::isfinite(p.w2))
    throw NumericalError("network produced non-finite lobe weights");
  return p;
}

double lobe_table_mae(const LayerStack& stack, const ThreeLobeParams& params,
                      const BsdfTable& target, LobeOptions options) {
  params.validate_against(stack);
  const FitProblem problem = make_problem(stack, target, options);
  const std::vector<double> lobe = problem.modified_lobe(modified_stack(params));
  double s = 0.0;
  for (std::size_t k = 0; k < lobe.size(); ++k)
    s += std::abs(params.w1 * lobe[k] + params.w2 * problem.lambert[k] - problem.target[k]);
  return s / static_cast<double>(lobe.size());
}

FitResult fit_direct(const LayerStack& stack, const BsdfTable& target, const FitOptions& options) {
  stack.validate();
  if (options.max_evaluations < 1) throw ParameterError("fit budget must be at least 1");
  const FitProblem problem = make_problem(stack, target, options.lobes);
  const LayerCoding coding{stack.layers};

  FitResult result;
  double baseline = 0.0;
  for (double t : problem.target) baseline += std::abs(t);
  result.baseline_mae = baseline / static_cast<double>(problem.target.size());

  auto loss = [&](const std::vector<double>& x) {
    LayerStack m;
    m.layers = coding.decode(x);
    double w1, w2;
    ++result.evaluations;
    return problem.solve_weights(problem.modified_lobe(m), w1, w2);
  };

  int budget = options.max_evaluations;
  SimplexResult best = nelder_mead(loss, coding.encode(), 0.5, options.tolerance, budget);
  // One restart around the optimum recovers from a collapsed simplex.
  if (best.converged && budget > 0) {
    const SimplexResult again = nelder_mead(loss, best.x, 0.25, options.tolerance, budget);
    if (again.f <= best.f) best = again;
    else best.converged = again.converged;
  }

  result.params.modified_layers = coding.decode(best.x);
  LayerStack m;
  m.layers = result.params.modified_layers;
  result.mae = problem.solve_weights(problem.modified_lobe(m), result.params.w1, result.params.w2);
  result.converged = best.converged;
  return result;
}

}  // namespace spongecake

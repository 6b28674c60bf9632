#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "spongecake/albedo.hpp"
#include "spongecake/errors.hpp"
#include "spongecake/mc_oracle.hpp"
#include "spongecake/multiscatter.hpp"
#include "support/oracles.hpp"

using namespace spongecake;

namespace {

LayerSpec flake(PhaseKind kind, double alpha, double thickness, double albedo = 1.0,
                Vec3 orientation = {0, 0, 1}) {
  LayerSpec l;
  l.kind = kind;
  l.roughness = alpha;
  l.thickness = thickness;
  l.albedo = Spectrum(albedo);
  l.orientation = orientation;
  return l;
}

LayerStack stack_of(std::vector<LayerSpec> layers) {
  LayerStack s;
  s.layers = std::move(layers);
  return s;
}

/// Range maps matching the documented output layout: per layer α, γ rgb, T, f0 rgb, then w1, w2.
std::vector<RangeMap> output_maps(std::size_t layers) {
  std::vector<RangeMap> maps;
  for (std::size_t k = 0; k < layers; ++k) {
    maps.insert(maps.end(), 4, RangeMap::sigmoid);
    maps.push_back(RangeMap::softplus);
    maps.insert(maps.end(), 3, RangeMap::sigmoid);
  }
  maps.push_back(RangeMap::softplus);
  maps.push_back(RangeMap::softplus);
  return maps;
}

MlpWeights network(std::uint32_t in_layers, std::uint32_t out_layers) {
  const std::uint32_t widths[] = {12 * in_layers, 128, 128, 128, 8 * out_layers + 2};
  return make_mlp(widths, Activation::relu, output_maps(out_layers));
}

void randomize(MlpWeights& net, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> normal(0.0f, 0.15f);
  for (DenseLayer& d : net.layers) {
    for (float& w : d.weights) w = normal(rng);
    for (float& b : d.bias) b = normal(rng);
  }
}

Vec3 random_direction(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return spherical_direction(2.0 * u(rng) - 1.0, 2.0 * kPi * u(rng));
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("spongecake_" + name);
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

BsdfTable constant_table(const DirectionGrid& grid, double reflect, double transmit) {
  BsdfTable t;
  t.grid = grid;
  t.mode = TransportMode::multiple_only;
  t.resize();
  for (std::size_t i = 0; i < grid.wi_count(); ++i)
    for (std::size_t j = 0; j < grid.wo_count(); ++j)
      for (int c = 0; c < 3; ++c)
        t.at(i, j, c) = static_cast<float>(grid.wo_center(j).z > 0.0 ? reflect : transmit);
  return t;
}

}  // namespace

TEST(MlpInfer, ZeroNetworkYieldsRangeMapOfZero) {
  const LayerStack s = stack_of({flake(PhaseKind::fiber, 0.3, 2.0, 0.7, normalize(Vec3{1, 0, 1}))});
  const ThreeLobeParams p = mlp_infer(network(1, 1), s);
  ASSERT_EQ(p.modified_layers.size(), 1u);
  const LayerSpec& m = p.modified_layers[0];
  EXPECT_DOUBLE_EQ(m.roughness, 0.5);
  EXPECT_EQ(m.albedo, Spectrum(0.5));
  EXPECT_EQ(m.f0, Spectrum(0.5));
  EXPECT_DOUBLE_EQ(m.thickness, std::log(2.0));
  EXPECT_DOUBLE_EQ(p.w1, std::log(2.0));
  EXPECT_DOUBLE_EQ(p.w2, std::log(2.0));
  EXPECT_EQ(m.kind, PhaseKind::fiber);
  EXPECT_EQ(m.orientation, s.layers[0].orientation);
}

TEST(MlpInfer, DeterministicAndValid) {
  MlpWeights net = network(2, 2);
  randomize(net, 4);
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.6, 1.0, 0.9), flake(PhaseKind::fiber, 0.2, 3.0, 0.5)});
  const ThreeLobeParams a = mlp_infer(net, s);
  const ThreeLobeParams b = mlp_infer(net, s);
  EXPECT_EQ(a.modified_layers, b.modified_layers);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(a.w1), std::bit_cast<std::uint64_t>(b.w1));
  EXPECT_EQ(std::bit_cast<std::uint64_t>(a.w2), std::bit_cast<std::uint64_t>(b.w2));
  EXPECT_NO_THROW(a.validate_against(s));
  EXPECT_NE(a.modified_layers[0], s.layers[0]);
}

TEST(MlpInfer, BottomOnlyNetworkKeepsUpperLayers) {
  MlpWeights net = network(2, 1);
  randomize(net, 5);
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.6, 1.0, 0.9), flake(PhaseKind::fiber, 0.2, 3.0, 0.5)});
  const ThreeLobeParams p = mlp_infer(net, s);
  EXPECT_EQ(p.modified_layers[0], s.layers[0]);
  EXPECT_NE(p.modified_layers[1], s.layers[1]);
}

TEST(MlpInfer, RejectsMismatchedShapes) {
  const LayerStack one = stack_of({flake(PhaseKind::surface, 0.5, 1.0)});
  const LayerStack two = stack_of({flake(PhaseKind::surface, 0.5, 1.0), flake(PhaseKind::surface, 0.5, 1.0)});
  EXPECT_THROW(mlp_infer(network(1, 1), two), FormatError);
  EXPECT_THROW(mlp_infer(network(2, 2), one), FormatError);
  const std::uint32_t odd[] = {12, 16, 7};
  EXPECT_THROW(mlp_infer(make_mlp(odd, Activation::relu, std::vector<RangeMap>(7)), one), FormatError);
  LayerStack hg = one;
  hg.layers[0].kind = PhaseKind::hg;
  hg.layers[0].roughness = 0.3;
  EXPECT_THROW(mlp_infer(network(1, 1), hg), ParameterError);
  LayerStack semi = one;
  semi.layers[0].thickness = kSemiInfinite;
  EXPECT_THROW(mlp_infer(network(1, 1), semi), ParameterError);
}

TEST(MlpInfer, EncodesDocumentedInputLayout) {
  const LayerStack s = stack_of({flake(PhaseKind::fiber, 0.3, 2.5, 0.7, normalize(Vec3{0, 1, 1}))});
  const std::vector<double> x = encode_stack(s);
  ASSERT_EQ(x.size(), 12u);
  EXPECT_EQ(x[0], 0.3);
  EXPECT_EQ(x[1], 0.7);
  EXPECT_EQ(x[4], 2.5);
  EXPECT_EQ(x[5], 1.0);
  EXPECT_EQ(x[8], 0.0);
  EXPECT_NEAR(x[10], std::sqrt(0.5), 1e-15);
}

class WeightFile : public ::testing::Test {
 protected:
  void SetUp() override {
    net_ = network(1, 1);
    randomize(net_, 9);
    save_weights(net_, path_);
  }
  void TearDown() override { std::filesystem::remove(path_); }

  /// Offset of the first weight of the first dense layer.
  static constexpr std::size_t kFirstWeight = 4 + 4 + 4 + 8;

  MlpWeights net_;
  std::filesystem::path path_ = temp_path("weights.spck");
};

TEST_F(WeightFile, RoundTripIsBitExact) {
  const MlpWeights back = load_weights(path_);
  EXPECT_EQ(back, net_);
  const std::filesystem::path again = temp_path("weights2.spck");
  save_weights(back, again);
  EXPECT_EQ(read_bytes(again), read_bytes(path_));
  std::filesystem::remove(again);
}

TEST_F(WeightFile, RejectsTruncation) {
  auto bytes = read_bytes(path_);
  for (std::size_t keep : {std::size_t{2}, std::size_t{10}, kFirstWeight + 5, bytes.size() - 1}) {
    write_bytes(path_, {bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep)});
    EXPECT_THROW(load_weights(path_), FormatError) << keep;
  }
}

TEST_F(WeightFile, RejectsNonFiniteWeights) {
  auto bytes = read_bytes(path_);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + kFirstWeight, &nan, 4);
  write_bytes(path_, bytes);
  EXPECT_THROW(load_weights(path_), FormatError);
  net_.layers[1].bias[3] = std::numeric_limits<float>::infinity();
  EXPECT_THROW(save_weights(net_, temp_path("bad.spck")), FormatError);
}

TEST_F(WeightFile, RejectsVersionMagicAndTags) {
  const auto good = read_bytes(path_);
  auto bytes = good;
  bytes[4] = 2;
  write_bytes(path_, bytes);
  EXPECT_THROW(load_weights(path_), FormatError);
  bytes = good;
  bytes[1] = 'Q';
  write_bytes(path_, bytes);
  EXPECT_THROW(load_weights(path_), FormatError);
  bytes = good;
  bytes.back() = 9;
  write_bytes(path_, bytes);
  EXPECT_THROW(load_weights(path_), FormatError);
  bytes = good;
  bytes.push_back(0);
  write_bytes(path_, bytes);
  EXPECT_THROW(load_weights(path_), FormatError);
  EXPECT_THROW(load_weights(temp_path("does-not-exist.spck")), IoError);
}

TEST(EvalFull, ZeroWeightsEqualSingleExactly) {
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.4, 1.0, 0.8), flake(PhaseKind::fiber, 0.7, 2.0)});
  const ThreeLobeParams p = zero_lobes(s);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 200; ++k) {
    const Vec3 wi = random_direction(rng), wo = random_direction(rng);
    EXPECT_EQ(eval_full(s, p, wi, wo), eval_stack_single(s, wi, wo));
  }
}

TEST(EvalFull, LambertLobeAddsOneOverPiPerUnitWeight) {
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.4, 1.0)});
  ThreeLobeParams p = zero_lobes(s);
  p.w2 = kPi;
  const Vec3 wi = normalize(Vec3{0.2, 0.1, 0.9});
  const Vec3 up = normalize(Vec3{-0.5, 0.3, 0.6});
  const Vec3 down = normalize(Vec3{0.4, 0.3, -0.7});
  EXPECT_NEAR((eval_full(s, p, wi, up) - eval_stack_single(s, wi, up)).r, 1.0, 1e-12);
  EXPECT_EQ(eval_full(s, p, wi, down), eval_stack_single(s, wi, down));
  const LobeOptions with_transmission{true};
  EXPECT_NEAR((eval_full(s, p, wi, down, with_transmission) - eval_stack_single(s, wi, down)).g, 1.0, 1e-12);

  LayerStack opaque = s;
  opaque.substrate = {SubstrateKind::lambertian, Spectrum(0.5)};
  ThreeLobeParams q = zero_lobes(opaque);
  q.w1 = 2.0;
  q.w2 = 1.0;
  EXPECT_EQ(eval_full(opaque, q, wi, down, with_transmission), Spectrum(0.0));
  EXPECT_EQ(eval_full(opaque, q, -wi, up, with_transmission), Spectrum(0.0));
}

TEST(EvalFull, ReciprocalAndAboveSingle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    LayerStack s;
    const int n = 1 + static_cast<int>(u(rng) * 2.0);
    for (int l = 0; l < n; ++l)
      s.layers.push_back(flake(u(rng) < 0.5 ? PhaseKind::fiber : PhaseKind::surface,
                               0.05 + 0.95 * u(rng), 0.1 + 4.0 * u(rng), u(rng),
                               random_direction(rng)));
    ThreeLobeParams p = zero_lobes(s);
    for (LayerSpec& m : p.modified_layers) {
      m.roughness = 0.05 + 0.95 * u(rng);
      m.thickness = 0.1 + 4.0 * u(rng);
      m.albedo = Spectrum(u(rng), u(rng), u(rng));
    }
    p.w1 = 2.0 * u(rng);
    p.w2 = u(rng);
    const LobeOptions opt{u(rng) < 0.5};
    const Vec3 wi = random_direction(rng), wo = random_direction(rng);
    const Spectrum f = eval_full(s, p, wi, wo, opt);
    const Spectrum r = eval_full(s, p, wo, wi, opt);
    const Spectrum single = eval_stack_single(s, wi, wo);
    for (int c = 0; c < 3; ++c) {
      EXPECT_GE(f[c], single[c]);
      if (f[c] > 1e-300) {
        EXPECT_LE(oracle::relative_error(r[c], f[c]), 1e-6) << k;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 1500);
}

TEST(EvalFull, ParamsMustMatchStack) {
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.4, 1.0)});
  const Vec3 wi{0, 0, 1}, wo = normalize(Vec3{1, 0, 1});
  ThreeLobeParams p = zero_lobes(s);
  p.w1 = -0.1;
  EXPECT_THROW(eval_full(s, p, wi, wo), ParameterError);
  p = zero_lobes(s);
  p.modified_layers[0].kind = PhaseKind::fiber;
  EXPECT_THROW(eval_full(s, p, wi, wo), ParameterError);
  p = zero_lobes(s);
  p.modified_layers[0].orientation = normalize(Vec3{0, 1, 1});
  EXPECT_THROW(eval_full(s, p, wi, wo), ParameterError);
  p = zero_lobes(s);
  p.modified_layers.push_back(s.layers[0]);
  EXPECT_THROW(eval_full(s, p, wi, wo), ParameterError);
  p = zero_lobes(s);
  p.modified_layers[0].roughness = 1.5;
  EXPECT_THROW(eval_full(s, p, wi, wo), ParameterError);
}

TEST(FitDirect, ZeroTargetNeedsNoLobes) {
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.5, 1.0, 0.8)});
  const FitResult r = fit_direct(s, constant_table({4, 4}, 0.0, 0.0));
  EXPECT_EQ(r.params.w1, 0.0);
  EXPECT_EQ(r.params.w2, 0.0);
  EXPECT_EQ(r.mae, 0.0);
  EXPECT_EQ(r.baseline_mae, 0.0);
  EXPECT_TRUE(r.converged);
}

TEST(FitDirect, LambertTargetIsSpannedByLambertLobe) {
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.5, 1.0, 0.8)});
  const FitResult r = fit_direct(s, constant_table({4, 4}, 0.2 / kPi, 0.0));
  EXPECT_NEAR(r.params.w2, 0.2, 1e-3);
  EXPECT_LT(r.params.w1, 1e-3);
  EXPECT_LT(r.mae, 1e-3);
  EXPECT_NEAR(lobe_table_mae(s, r.params, constant_table({4, 4}, 0.2 / kPi, 0.0)), r.mae, 1e-12);
}

TEST(FitDirect, BudgetExhaustionReturnsBestSoFar) {
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.8, 2.0, 0.9)});
  BsdfTable target = constant_table({4, 4}, 0.03, 0.02);
  FitOptions opt;
  opt.max_evaluations = 5;
  const FitResult r = fit_direct(s, target, opt);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.mae, r.baseline_mae);
  EXPECT_NO_THROW(r.params.validate_against(s));
  opt.max_evaluations = 0;
  EXPECT_THROW(fit_direct(s, target, opt), ParameterError);
}

TEST(FitDirect, FurnaceBandForConservativeStack) {
  const LayerStack s = stack_of({flake(PhaseKind::surface, 0.8, 2.0)});
  TabulateOptions opt;
  opt.grid = {6, 6};
  opt.samples_per_wi = 10'000;
  opt.mode = TransportMode::multiple_only;
  const FitResult fit = fit_direct(s, tabulate(s, opt));
  const ThreeLobeModel model(s, fit.params);
  const CompiledStack& exact = model.exact();
  const QuadratureOptions quad{256, 128, 0};
  for (double degrees : {0.0, 25.0, 50.0, 75.0}) {
    const Vec3 wi = oracle::direction_at(degrees * kPi / 180.0, 0.3);
    const Spectrum albedo = integrate_projected(
        [&](const Vec3& a, const Vec3& b) { return model.eval(a, b); }, wi, quad) +
        exact.delta_transmittance(wi);
    EXPECT_GE(albedo.r, 0.7) << degrees;
    EXPECT_LE(albedo.r, 1.1) << degrees;
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "spongecake/errors.hpp"
#include "spongecake/material_io.hpp"
#include "spongecake/bsdf_table.hpp"
#include "spongecake/mc_oracle.hpp"
#include "spongecake/single_scatter.hpp"
#include "spongecake_tools/dataset.hpp"
#include "spongecake_tools/image.hpp"
#include "spongecake_tools/lobe.hpp"
#include "spongecake_tools/params_io.hpp"
#include "spongecake_tools/render.hpp"
#include "spongecake_tools/sample_test.hpp"

using namespace spongecake;
using namespace spongecake::tools;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("spongecake_tools_" + name);
}

LayerStack material(const std::string& name) {
  return load_material(std::filesystem::path(SPONGECAKE_TEST_DATA) / name);
}

LayerStack single_layer(double alpha, double thickness, double albedo) {
  LayerStack s;
  LayerSpec l;
  l.kind = PhaseKind::surface;
  l.roughness = alpha;
  l.thickness = thickness;
  l.albedo = Spectrum(albedo);
  s.layers = {l};
  return s;
}

}  // namespace

TEST(Image, PfmRoundTripIsBitExact) {
  Image img(5, 3);
  for (std::size_t k = 0; k < img.rgb.size(); ++k) img.rgb[k] = 0.37f * static_cast<float>(k) + 1e-7f;
  img.rgb[4] = std::numeric_limits<float>::denorm_min();
  const auto path = temp_path("round.pfm");
  write_pfm(img, path);
  EXPECT_EQ(read_pfm(path), img);
  std::filesystem::remove(path);
}

TEST(Image, PfmStoresRowsBottomUp) {
  Image img(1, 2);
  img.set(0, 0, Spectrum(1.0));  // top row
  const auto path = temp_path("order.pfm");
  write_pfm(img, path);
  std::ifstream in(path, std::ios::binary);
  std::string header((std::istreambuf_iterator<char>(in)), {});
  const std::size_t raster = header.size() - 2 * 3 * 4;
  float first;
  std::memcpy(&first, header.data() + raster, 4);
  EXPECT_EQ(first, 0.0f);
  std::filesystem::remove(path);
}

TEST(Image, RejectsMalformedPfm) {
  const auto path = temp_path("bad.pfm");
  std::ofstream(path) << "P6\n1 1\n255\n";
  EXPECT_THROW(read_pfm(path), FormatError);
  std::ofstream(path) << "PF\n2 2\n-1.0\n" << std::string(10, '\0');
  EXPECT_THROW(read_pfm(path), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(read_pfm(path), IoError);
}

TEST(Image, TonemapIsFixed) {
  EXPECT_EQ(tonemap_8bit(0.0f), 0);
  EXPECT_EQ(tonemap_8bit(1.0f), static_cast<int>(std::lround(std::pow(0.5, 1.0 / 2.2) * 255.0)));
  EXPECT_EQ(tonemap_8bit(1e30f), 255);
  EXPECT_EQ(tonemap_8bit(-3.0f), 0);
  Image img(4, 2);
  const auto path = temp_path("preview.png");
  write_png_preview(img, path);
  EXPECT_GT(std::filesystem::file_size(path), 8u);
  std::filesystem::remove(path);
}

TEST(Lobe, IsotropicHalfSpaceIsAzimuthSymmetric) {
  const LayerStack s = material("chandrasekhar.yaml");
  const CompiledStack compiled(s);
  const FixedIncidenceGrid grid{24, 36};
  const Image img = fixed_incidence_lobe(
      [&](const Vec3& a, const Vec3& b) { return compiled.eval_single(a, b); }, incidence(0.3), grid);
  ASSERT_EQ(img.width, 36u);
  ASSERT_EQ(img.height, 24u);
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 1; c < grid.cols; ++c)
      EXPECT_NEAR(img.at(r, c, 0), img.at(r, 0, 0), 1e-6 * img.at(r, 0, 0) + 1e-30) << r << "," << c;
}

TEST(Lobe, AnalyticMatchesOracle) {
  const LayerStack s = single_layer(0.6, 1.0, 0.9);
  const CompiledStack compiled(s);
  const FixedIncidenceGrid grid{16, 16};
  const Vec3 wi = incidence(0.5);
  const Image exact = fixed_incidence_lobe(
      [&](const Vec3& a, const Vec3& b) { return compiled.eval_single(a, b); }, wi, grid, 8);
  const Image mc = fixed_incidence_oracle(s, wi, grid, 2'000'000, TransportMode::single_only, 3, 0);
  double err = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < exact.rgb.size(); k += 3) {
    if (exact.rgb[k] <= 0.0f) continue;
    err += std::abs(mc.rgb[k] - exact.rgb[k]) / exact.rgb[k];
    ++n;
  }
  ASSERT_GT(n, 200);
  EXPECT_LT(err / n, 0.05);
}

TEST(Lobe, GridGeometry) {
  const FixedIncidenceGrid grid{10, 20};
  double total = 0.0;
  for (std::size_t r = 0; r < grid.rows; ++r) total += grid.projected_solid_angle(r) * grid.cols;
  EXPECT_NEAR(total, 2.0 * kPi, 1e-12);
  for (std::size_t r = 0; r < grid.rows; ++r)
    for (std::size_t c = 0; c < grid.cols; ++c) EXPECT_EQ(grid.index(grid.center(r, c)), r * grid.cols + c);
  EXPECT_LT(grid.index({0, 0, 1}), grid.cols);
}

TEST(Lobe, FullMatrixReshapesTable) {
  BsdfTable t;
  t.grid = {2, 3};
  t.resize();
  t.at(4, 7, 1) = 2.5f;
  const Image img = full_matrix_image(t);
  EXPECT_EQ(img.width, t.grid.wo_count());
  EXPECT_EQ(img.height, t.grid.wi_count());
  EXPECT_EQ(img.at(4, 7, 1), 2.5f);
}

TEST(Render, StrategiesAgree) {
  const LayerStack s = material("slab.yaml");
  RenderOptions opt;
  opt.width = 24;
  opt.height = 18;
  opt.spp = 1024;
  opt.strategy = Strategy::mis;
  const Image mis = render(s, std::nullopt, opt).radiance;
  opt.strategy = Strategy::light;
  EXPECT_LT(relative_l1(render(s, std::nullopt, opt).radiance, mis), 0.01);
  opt.strategy = Strategy::bsdf;
  EXPECT_LT(relative_l1(render(s, std::nullopt, opt).radiance, mis), 0.03);
}

TEST(Render, ZeroAlbedoSphereIsBlack) {
  const RenderResult r = render(single_layer(0.5, 2.0, 0.0), std::nullopt, {32, 24, 16, Strategy::mis, 0, 0});
  int sphere = 0;
  double plane = 0.0;
  for (std::size_t k = 0; k < r.primary.size(); ++k) {
    if (r.primary[k] == Surface::sphere) {
      // Interior sphere pixels only.
      const bool interior = k % 32 > 0 && k % 32 < 31 && r.primary[k - 1] == Surface::sphere &&
                            r.primary[k + 1] == Surface::sphere && r.primary[k - 32] == Surface::sphere &&
                            r.primary[k + 32] == Surface::sphere;
      if (!interior) continue;
      ++sphere;
      for (int c = 0; c < 3; ++c) EXPECT_EQ(r.radiance.rgb[k * 3 + c], 0.0f);
    } else if (r.primary[k] == Surface::plane) {
      plane += r.radiance.rgb[k * 3];
    }
  }
  EXPECT_GT(sphere, 50);
  EXPECT_GT(plane, 0.0);
}

TEST(Render, MisVarianceNoWorseThanEitherStrategy) {
  const LayerStack glossy = single_layer(0.15, 3.0, 0.9);
  RenderOptions opt{32, 24, 64, Strategy::bsdf, 5, 0};
  const double bsdf = render(glossy, std::nullopt, opt).mean_variance();
  opt.strategy = Strategy::light;
  const double light = render(glossy, std::nullopt, opt).mean_variance();
  opt.strategy = Strategy::mis;
  const double mis = render(glossy, std::nullopt, opt).mean_variance();
  EXPECT_LE(mis, 1.05 * std::min(bsdf, light));
}

TEST(Render, DeterministicAcrossThreads) {
  const LayerStack s = material("fabric.yaml");
  RenderOptions opt{16, 12, 16, Strategy::mis, 9, 1};
  const RenderResult a = render(s, std::nullopt, opt);
  opt.threads = 3;
  const RenderResult b = render(s, std::nullopt, opt);
  EXPECT_EQ(a.radiance, b.radiance);
  EXPECT_EQ(a.variance, b.variance);
  EXPECT_THROW(strategy_from_string("path"), ParameterError);
}

TEST(Dataset, RandomLayersStayInDocumentedRanges) {
  RandomSource rng(4);
  int fibers = 0;
  for (int k = 0; k < 2000; ++k) {
    const LayerSpec l = random_layer(rng);
    ASSERT_NO_THROW(l.validate());
    ASSERT_GE(l.roughness, 0.05);
    ASSERT_LE(l.roughness, 1.0);
    ASSERT_GE(l.thickness, 0.1);
    ASSERT_LE(l.thickness, 8.0);
    ASSERT_GT(l.orientation.z, 0.0);
    ASSERT_NEAR(length(l.orientation), 1.0, 1e-12);
    fibers += l.kind == PhaseKind::fiber;
  }
  EXPECT_NEAR(fibers, 1000, 150);
}

TEST(Dataset, WritesTablesAndReparsableManifest) {
  const auto dir = temp_path("dataset");
  std::filesystem::remove_all(dir);
  DatasetOptions opt;
  opt.count = 3;
  opt.layers = 2;
  opt.resolution = 2;
  opt.samples_per_wi = 50;
  opt.seed = 12;
  const auto entries = write_dataset(opt, dir);
  ASSERT_EQ(entries.size(), 3u);
  std::ifstream in(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  ASSERT_EQ(manifest["entries"].size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& e = manifest["entries"][k];
    const LayerStack parsed = parse_material(e["material"].get<std::string>());
    EXPECT_EQ(parsed, entries[k].stack);
    for (std::size_t l = 0; l < 2; ++l) EXPECT_EQ(layer_from_json(e["layers"][l]), parsed.layers[l]);
    const BsdfTable t = load_table(dir / e["file"].get<std::string>());
    EXPECT_EQ(t.mode, TransportMode::multiple_only);
    EXPECT_EQ(parse_material(t.material), parsed);
  }
  std::filesystem::remove_all(dir);
}

TEST(ParamsIo, RoundTrip) {
  ThreeLobeParams p;
  LayerSpec l;
  l.kind = PhaseKind::fiber;
  l.roughness = 0.123456789012345;
  l.thickness = kSemiInfinite;
  l.orientation = normalize(Vec3{1, 2, 3});
  p.modified_layers = {l};
  p.w1 = 0.1;
  p.w2 = 1.0 / 3.0;
  const ThreeLobeParams back = params_from_json(params_to_json(p));
  EXPECT_EQ(back.modified_layers, p.modified_layers);
  EXPECT_EQ(back.w1, p.w1);
  EXPECT_EQ(back.w2, p.w2);
}

TEST(SampleTest, PassesForCorrectSampler) {
  SampleTestOptions opt;
  opt.samples = 100'000;
  opt.seed = 2;
  LayerStack s = single_layer(0.5, 1.0, 0.8);
  s.include_delta = true;
  const SampleTestResult r = run_sample_test(s, incidence(0.6), opt);
  EXPECT_GT(r.p_value, 0.01);
  EXPECT_GT(r.dof, 100);
  EXPECT_TRUE(r.passed);
}

#include "spongecake_tools/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "spongecake/errors.hpp"
#include "spongecake/material_io.hpp"
#include "spongecake/mc_oracle.hpp"
#include "spongecake_tools/params_io.hpp"

namespace spongecake::tools {

LayerSpec random_layer(UniformSource& u) {
  LayerSpec l;
  l.kind = u.next() < 0.5 ? PhaseKind::fiber : PhaseKind::surface;
  l.roughness = 0.05 + 0.95 * u.next();
  for (int c = 0; c < 3; ++c) l.albedo[c] = u.next();
  l.thickness = 0.1 + 7.9 * u.next();
  for (int c = 0; c < 3; ++c) l.f0[c] = u.next();
  const double cos_theta = 1.0 - u.next();  // (0, 1]
  l.orientation = spherical_direction(cos_theta, 2.0 * kPi * u.next());
  return l;
}

std::vector<DatasetEntry> write_dataset(const DatasetOptions& options, const std::filesystem::path& dir) {
  if (options.layers < 1) throw ParameterError("dataset layer count must be at least 1");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json manifest;
  manifest["format"] = "spongecake-dataset";
  manifest["version"] = 1;
  manifest["seed"] = options.seed;
  manifest["layers"] = options.layers;
  manifest["resolution"] = options.resolution;
  manifest["samples_per_wi"] = options.samples_per_wi;
  manifest["mode"] = std::string(to_string(TransportMode::multiple_only));
  manifest["entries"] = nlohmann::json::array();

  std::vector<DatasetEntry> entries;
  for (std::uint32_t k = 0; k < options.count; ++k) {
    RandomSource rng(options.seed, k);
    DatasetEntry e;
    for (std::uint32_t l = 0; l < options.layers; ++l) e.stack.layers.push_back(random_layer(rng));
    char name[32];
    std::snprintf(name, sizeof name, "table_%05u.sptb", k);
    e.file = name;

    TabulateOptions t;
    t.grid = {options.resolution, options.resolution};
    t.samples_per_wi = options.samples_per_wi;
    t.mode = TransportMode::multiple_only;
    t.seed = mix_seed(options.seed + 1, k);
    t.threads = options.threads;
    save_table(tabulate(e.stack, t), dir / e.file);

    nlohmann::json j;
    j["file"] = e.file;
    j["material"] = serialize_material(e.stack);
    j["layers"] = nlohmann::json::array();
    for (const LayerSpec& l : e.stack.layers) j["layers"].push_back(layer_to_json(l));
    manifest["entries"].push_back(std::move(j));
    entries.push_back(std::move(e));
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest in " + dir.string());
  return entries;
}

}  // namespace spongecake::tools

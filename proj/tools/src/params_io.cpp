#include "spongecake_tools/params_io.hpp"

#include <fstream>

#include "spongecake/errors.hpp"

namespace spongecake::tools {

namespace {

nlohmann::json triple(double a, double b, double c) { return nlohmann::json::array({a, b, c}); }

Spectrum spectrum_from(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

nlohmann::json layer_to_json(const LayerSpec& l) {
  nlohmann::json j;
  j["kind"] = std::string(to_string(l.kind));
  j["albedo"] = triple(l.albedo.r, l.albedo.g, l.albedo.b);
  j["roughness"] = l.roughness;
  j["f0"] = triple(l.f0.r, l.f0.g, l.f0.b);
  if (l.semi_infinite()) j["thickness"] = "inf";
  else j["thickness"] = l.thickness;
  j["orientation"] = triple(l.orientation.x, l.orientation.y, l.orientation.z);
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec l;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fiber") l.kind = PhaseKind::fiber;
  else if (kind == "surface") l.kind = PhaseKind::surface;
  else if (kind == "hg") l.kind = PhaseKind::hg;
  else throw ParameterError("unknown layer kind '" + kind + "'");
  l.albedo = spectrum_from(j.at("albedo"));
  l.roughness = j.at("roughness").get<double>();
  l.f0 = spectrum_from(j.at("f0"));
  const auto& t = j.at("thickness");
  l.thickness = t.is_string() && t.get<std::string>() == "inf" ? kSemiInfinite : t.get<double>();
  const auto& o = j.at("orientation");
  l.orientation = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
  return l;
}

nlohmann::json params_to_json(const ThreeLobeParams& p) {
  nlohmann::json j;
  j["w1"] = p.w1;
  j["w2"] = p.w2;
  j["modified_layers"] = nlohmann::json::array();
  for (const LayerSpec& l : p.modified_layers) j["modified_layers"].push_back(layer_to_json(l));
  return j;
}

ThreeLobeParams params_from_json(const nlohmann::json& j) {
  ThreeLobeParams p;
  p.w1 = j.at("w1").get<double>();
  p.w2 = j.at("w2").get<double>();
  for (const auto& l : j.at("modified_layers")) p.modified_layers.push_back(layer_from_json(l));
  return p;
}

void save_params(const FitResult& fit, const std::filesystem::path& path) {
  nlohmann::json j = params_to_json(fit.params);
  j["mae"] = fit.mae;
  j["baseline_mae"] = fit.baseline_mae;
  j["converged"] = fit.converged;
  j["evaluations"] = fit.evaluations;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

ThreeLobeParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace spongecake::tools

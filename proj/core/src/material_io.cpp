#include "spongecake/material_io.hpp"

#include <yaml-cpp/yaml.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "spongecake/errors.hpp"

namespace spongecake {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) throw ParseError(what);
  throw ParseError(what, mark.line + 1, mark.column + 1);
}

void reject_unknown_keys(const YAML::Node& map, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) fail(kv.first, path + ": unknown key '" + key + "'");
  }
}

const YAML::Node require(const YAML::Node& map, const char* key, const std::string& path) {
  const YAML::Node node = map[key];
  if (!node) fail(map, path + ": missing required key '" + key + "'");
  return node;
}

double to_number(const YAML::Node& node, const std::string& path, bool allow_inf = false) {
  if (!node.IsScalar()) fail(node, path + ": expected a number");
  const std::string& text = node.Scalar();
  if (allow_inf && (text == "inf" || text == ".inf")) return kSemiInfinite;
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value))
    fail(node, path + ": '" + text + "' is not a finite number");
  return value;
}

bool to_bool(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) {
    if (node.Scalar() == "true") return true;
    if (node.Scalar() == "false") return false;
  }
  fail(node, path + ": expected true or false");
}

std::array<double, 3> to_triple(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() != 3) fail(node, path + ": expected a list of 3 numbers");
  return {to_number(node[0], path + "[0]"), to_number(node[1], path + "[1]"),
          to_number(node[2], path + "[2]")};
}

Spectrum to_spectrum(const YAML::Node& node, const std::string& path) {
  const auto t = to_triple(node, path);
  return {t[0], t[1], t[2]};
}

LayerSpec to_layer(const YAML::Node& node, const std::string& path) {
  if (!node.IsMap()) fail(node, path + ": expected a mapping");
  reject_unknown_keys(node, {"kind", "albedo", "roughness", "f0", "thickness", "orientation"}, path);
  LayerSpec layer;
  const YAML::Node kind = require(node, "kind", path);
  const std::string kind_text = kind.IsScalar() ? kind.Scalar() : std::string();
  if (kind_text == "fiber")
    layer.kind = PhaseKind::fiber;
  else if (kind_text == "surface")
    layer.kind = PhaseKind::surface;
  else if (kind_text == "hg")
    layer.kind = PhaseKind::hg;
  else
    fail(kind, path + ".kind: expected fiber, surface or hg");
  layer.albedo = to_spectrum(require(node, "albedo", path), path + ".albedo");
  layer.roughness = to_number(require(node, "roughness", path), path + ".roughness");
  layer.f0 = to_spectrum(require(node, "f0", path), path + ".f0");
  layer.thickness = to_number(require(node, "thickness", path), path + ".thickness", true);
  const auto o = to_triple(require(node, "orientation", path), path + ".orientation");
  layer.orientation = {o[0], o[1], o[2]};
  try {
    layer.validate(path);
  } catch (const ParameterError& e) {
    fail(node, e.what());
  }
  return layer;
}

std::string format_number(double v) {
  if (v == kSemiInfinite) return "inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_triple(double a, double b, double c) {
  return "[" + format_number(a) + ", " + format_number(b) + ", " + format_number(c) + "]";
}

}  // namespace

LayerStack parse_material(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError("syntax error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) throw ParseError("material document must be a mapping");
  reject_unknown_keys(root, {"layers", "delta_transmission", "substrate"}, "material");

  LayerStack stack;
  const YAML::Node layers = require(root, "layers", "material");
  if (!layers.IsSequence()) fail(layers, "layers: expected a list");
  for (std::size_t i = 0; i < layers.size(); ++i)
    stack.layers.push_back(to_layer(layers[i], "layers[" + std::to_string(i) + "]"));

  if (const YAML::Node delta = root["delta_transmission"])
    stack.include_delta = to_bool(delta, "delta_transmission");

  if (const YAML::Node sub = root["substrate"]) {
    if (!sub.IsMap()) fail(sub, "substrate: expected a mapping");
    reject_unknown_keys(sub, {"kind", "albedo"}, "substrate");
    const YAML::Node kind = require(sub, "kind", "substrate");
    const std::string k = kind.IsScalar() ? kind.Scalar() : std::string();
    if (k == "lambertian") {
      stack.substrate.kind = SubstrateKind::lambertian;
      stack.substrate.albedo = to_spectrum(require(sub, "albedo", "substrate"), "substrate.albedo");
    } else if (k == "none") {
      stack.substrate.kind = SubstrateKind::none;
      // Accepted for symmetry with lambertian but has no effect.
      if (const YAML::Node albedo = sub["albedo"]) to_spectrum(albedo, "substrate.albedo");
    } else {
      fail(kind, "substrate.kind: expected lambertian or none");
    }
  }

  try {
    stack.validate();
  } catch (const ParameterError& e) {
    fail(root, e.what());
  }
  return stack;
}

LayerStack load_material(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open material file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_material(buf.str());
}

std::string serialize_material(const LayerStack& stack) {
  std::ostringstream out;
  out << "delta_transmission: " << (stack.include_delta ? "true" : "false") << "\n";
  if (stack.substrate.present()) {
    const Spectrum& a = stack.substrate.albedo;
    out << "substrate:\n  kind: lambertian\n  albedo: " << format_triple(a.r, a.g, a.b) << "\n";
  }
  out << "layers:\n";
  for (const auto& l : stack.layers) {
    out << "  - kind: " << to_string(l.kind) << "\n";
    out << "    albedo: " << format_triple(l.albedo.r, l.albedo.g, l.albedo.b) << "\n";
    out << "    roughness: " << format_number(l.roughness) << "\n";
    out << "    f0: " << format_triple(l.f0.r, l.f0.g, l.f0.b) << "\n";
    out << "    thickness: " << format_number(l.thickness) << "\n";
    out << "    orientation: "
        << format_triple(l.orientation.x, l.orientation.y, l.orientation.z) << "\n";
  }
  return out.str();
}

}  // namespace spongecake

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "spongecake/layer.hpp"

namespace spongecake {

/// Parses a YAML material document into a validated stack.
///
/// Grammar (see docs/material-format.md): top-level keys `layers` (required, non-empty
/// sequence), `delta_transmission` (bool, default false) and `substrate` (optional mapping with
/// `kind: lambertian|none` and `albedo`). Each layer needs exactly `kind`, `albedo`, `roughness`,
/// `f0`, `thickness` and `orientation`; `thickness` also accepts `inf`. Unknown keys are
/// rejected. Errors carry 1-based line/column positions and the field path.
LayerStack parse_material(std::string_view text);

LayerStack load_material(const std::filesystem::path& path);

/// Canonical text form. Numbers use the shortest representation that round-trips exactly, so
/// parse(serialize(s)) == s bit for bit.
std::string serialize_material(const LayerStack& stack);

}  // namespace spongecake

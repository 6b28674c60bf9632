#pragma once

#include <filesystem>

#include <json.hpp>

#include "spongecake/multiscatter.hpp"

namespace spongecake::tools {

nlohmann::json layer_to_json(const LayerSpec& layer);
LayerSpec layer_from_json(const nlohmann::json& j);

/// {"w1", "w2", "modified_layers": [...]} plus optional fit diagnostics.
nlohmann::json params_to_json(const ThreeLobeParams& params);
ThreeLobeParams params_from_json(const nlohmann::json& j);

void save_params(const FitResult& fit, const std::filesystem::path& path);
ThreeLobeParams load_params(const std::filesystem::path& path);

}  // namespace spongecake::tools

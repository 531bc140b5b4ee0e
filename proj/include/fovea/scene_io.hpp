#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "fovea/core.hpp"
#include "fovea/enhance.hpp"

namespace fovea {

/// Scene JSON: height, width, dim, scales, data (flat, scale-major then row-major), boxes, domain, seed,
/// classes.
nlohmann::json scene_to_json(const Scene& scene);
/// Scene JSON plus `enhanced: true` and the config under `enhancement_config`.
nlohmann::json enhanced_scene_to_json(const Scene& scene, const EnhancementConfig& config);
/// Throws MalformedScene on missing fields or violated invariants.
Scene scene_from_json(const nlohmann::json& doc);

void save_json(const nlohmann::json& doc, const std::filesystem::path& path);
/// Throws DataError with the path on I/O or parse failure.
nlohmann::json load_json(const std::filesystem::path& path);

void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

}  // namespace fovea

#include "fovea/scene_io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {

using nlohmann::json;

json scene_to_json(const Scene& scene) {
    json doc;
    doc["height"] = scene.height();
    doc["width"] = scene.width();
    doc["dim"] = scene.dim();
    doc["scales"] = scene.scales();
    std::vector<double> flat;
    flat.reserve(scene.scales() * scene.map().data().size());
    for (const auto& m : scene.maps()) flat.insert(flat.end(), m.data().begin(), m.data().end());
    doc["data"] = std::move(flat);
    json boxes = json::array();
    for (const auto& b : scene.boxes()) {
        boxes.push_back({{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max},
                         {"class_id", b.class_id}});
    }
    doc["boxes"] = std::move(boxes);
    doc["classes"] = scene.classes();
    doc["domain"] = to_string(scene.domain());
    doc["seed"] = scene.seed();
    return doc;
}

json enhanced_scene_to_json(const Scene& scene, const EnhancementConfig& config) {
    json doc = scene_to_json(scene);
    doc["enhanced"] = true;
    doc["enhancement_config"] = to_json(config);
    return doc;
}

Scene scene_from_json(const json& doc) {
    try {
        const auto height = doc.at("height").get<std::size_t>();
        const auto width = doc.at("width").get<std::size_t>();
        const auto dim = doc.at("dim").get<std::size_t>();
        const auto scales = doc.value("scales", std::size_t{1});
        const auto flat = doc.at("data").get<std::vector<double>>();
        const std::size_t per_scale = height * width * dim;
        if (scales == 0 || flat.size() != scales * per_scale) {
            throw MalformedScene(fmt::format("scene data has {} values, expected {} scales x {}", flat.size(),
                                             scales, per_scale));
        }
        std::vector<FeatureMap> maps;
        for (std::size_t s = 0; s < scales; ++s) {
            auto first = flat.begin() + static_cast<std::ptrdiff_t>(s * per_scale);
            maps.emplace_back(height, width, dim, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(per_scale)),
                              static_cast<int>(s));
        }
        std::vector<BBox> boxes;
        for (const auto& b : doc.at("boxes")) {
            boxes.push_back({b.at("x_min").get<double>(), b.at("y_min").get<double>(), b.at("x_max").get<double>(),
                             b.at("y_max").get<double>(), b.at("class_id").get<int>()});
        }
        std::vector<std::string> classes;
        if (doc.contains("classes")) {
            classes = doc["classes"].get<std::vector<std::string>>();
        } else {
            int max_class = -1;
            for (const auto& b : boxes) max_class = std::max(max_class, b.class_id);
            for (int c = 0; c <= max_class; ++c) classes.push_back(fmt::format("class{}", c));
        }
        return Scene(std::move(maps), std::move(boxes), std::move(classes),
                     domain_from_string(doc.at("domain").get<std::string>()), doc.value("seed", std::uint64_t{0}));
    } catch (const json::exception& e) {
        throw MalformedScene(fmt::format("malformed scene document: {}", e.what()));
    }
}

void save_json(const json& doc, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
    out << doc.dump() << '\n';
    if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(fmt::format("'{}': {}", path.string(), e.what()));
    }
}

void save_scene(const Scene& scene, const std::filesystem::path& path) { save_json(scene_to_json(scene), path); }

Scene load_scene(const std::filesystem::path& path) {
    try {
        return scene_from_json(load_json(path));
    } catch (const MalformedScene& e) {
        throw MalformedScene(fmt::format("'{}': {}", path.string(), e.what()));
    }
}

}  // namespace fovea

#include <fmt/format.h>

#include "fovea/attention.hpp"
#include "fovea/errors.hpp"
#include "fovea/scene_io.hpp"

namespace fovea {

using nlohmann::json;

std::vector<AttentionLayer> attention_dump_from_json(const json& doc) {
    if (!doc.is_array()) throw MalformedAttention("attention dump must be a JSON array");
    std::vector<AttentionLayer> out;
    for (std::size_t idx = 0; idx < doc.size(); ++idx) {
        const auto& e = doc[idx];
        const auto field = [&](const char* name) -> const json& {
            if (!e.is_object() || !e.contains(name)) {
                throw MalformedAttention(fmt::format("dump entry {}: missing field '{}'", idx, name));
            }
            return e[name];
        };
        try {
            AttentionLayer layer;
            layer.label = field("label").get<std::string>();
            const auto n = field("n").get<std::size_t>();
            const auto heads = e.value("heads", std::size_t{1});
            std::vector<Position> positions;
            for (const auto& p : field("positions")) {
                if (!p.is_array() || p.size() != 2) {
                    throw MalformedAttention(fmt::format("dump entry {} ('{}'): positions must be [y, x] pairs", idx,
                                                         layer.label));
                }
                positions.push_back({p[0].get<double>(), p[1].get<double>()});
            }
            const auto weights = field("weights").get<std::vector<double>>();
            if (heads == 0 || weights.size() != heads * n * n) {
                throw MalformedAttention(fmt::format("dump entry {} ('{}'): weights has {} values, expected {}", idx,
                                                     layer.label, weights.size(), heads * n * n));
            }
            for (std::size_t h = 0; h < heads; ++h) {
                AttentionMatrix m;
                m.n = n;
                m.label = layer.label;
                m.positions = positions;
                auto first = weights.begin() + static_cast<std::ptrdiff_t>(h * n * n);
                m.weights.assign(first, first + static_cast<std::ptrdiff_t>(n * n));
                m.validate();
                layer.heads.push_back(std::move(m));
            }
            out.push_back(std::move(layer));
        } catch (const json::exception& ex) {
            throw MalformedAttention(fmt::format("dump entry {}: {}", idx, ex.what()));
        }
    }
    return out;
}

json attention_dump_to_json(std::span<const AttentionLayer> dump) {
    json doc = json::array();
    for (const auto& layer : dump) {
        if (layer.heads.empty()) continue;
        const auto& first = layer.heads.front();
        json positions = json::array();
        for (const auto& p : first.positions) positions.push_back({p[0], p[1]});
        std::vector<double> weights;
        for (const auto& h : layer.heads) weights.insert(weights.end(), h.weights.begin(), h.weights.end());
        json e = {{"label", layer.label}, {"n", first.n}, {"positions", std::move(positions)},
                  {"weights", std::move(weights)}};
        if (layer.heads.size() > 1) e["heads"] = layer.heads.size();
        doc.push_back(std::move(e));
    }
    return doc;
}

std::vector<AttentionLayer> load_attention_dump(const std::filesystem::path& path) {
    const auto doc = load_json(path);
    try {
        return attention_dump_from_json(doc);
    } catch (const MalformedAttention& e) {
        throw MalformedAttention(fmt::format("'{}': {}", path.string(), e.what()));
    }
}

}  // namespace fovea

#include "fovea/enhance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {

void EnhancementConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw InvalidArgument(what);
    };
    require(tau_fg > -1.0 && tau_fg <= 1.0, "tau_fg must lie in (-1, 1]");
    require(tau_bg > -1.0 && tau_bg <= 1.0, "tau_bg must lie in (-1, 1]");
    require(gamma_fg >= 0.0 && std::isfinite(gamma_fg), "gamma_fg must be >= 0");
    require(gamma_bg >= 0.0 && std::isfinite(gamma_bg), "gamma_bg must be >= 0");
    require(temperature > 0.0 && std::isfinite(temperature), "temperature must be > 0");
    require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be > 0");
}

nlohmann::json to_json(const EnhancementConfig& c) {
    return {{"tau_fg", c.tau_fg},       {"tau_bg", c.tau_bg},           {"gamma_fg", c.gamma_fg},
            {"gamma_bg", c.gamma_bg},   {"temperature", c.temperature}, {"epsilon", c.epsilon}};
}

EnhancementConfig enhancement_config_from_json(const nlohmann::json& doc) {
    EnhancementConfig c;
    c.tau_fg = doc.value("tau_fg", c.tau_fg);
    c.tau_bg = doc.value("tau_bg", c.tau_bg);
    c.gamma_fg = doc.value("gamma_fg", c.gamma_fg);
    c.gamma_bg = doc.value("gamma_bg", c.gamma_bg);
    c.temperature = doc.value("temperature", c.temperature);
    c.epsilon = doc.value("epsilon", c.epsilon);
    return c;
}

double ChannelField::max_at(std::size_t cell) const {
    const auto row = this->cell(cell);
    return *std::max_element(row.begin(), row.end());
}

SimilarityField cosine_similarity_field(const FeatureMap& map, std::span<const Prototype> protos, double epsilon) {
    if (protos.empty()) throw InvalidArgument("cosine_similarity_field needs at least one prototype");
    const std::size_t dim = map.dim();
    const std::size_t n_protos = protos.size();
    for (const auto& p : protos) {
        if (p.vector.size() != dim) {
            throw InvalidArgument(fmt::format("prototype dim {} does not match map dim {}", p.vector.size(), dim));
        }
    }

    // Channel-major prototype table so the inner loop runs over prototypes.
    std::vector<double> table(dim * n_protos);
    std::vector<double> proto_norm(n_protos);
    for (std::size_t c = 0; c < n_protos; ++c) {
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            table[k * n_protos + c] = protos[c].vector[k];
            sq += protos[c].vector[k] * protos[c].vector[k];
        }
        proto_norm[c] = std::sqrt(sq);
    }

    SimilarityField out{map.height(), map.width(), n_protos, std::vector<double>(map.cells() * n_protos)};
    std::vector<double> dots(n_protos);
    for (std::size_t i = 0; i < map.cells(); ++i) {
        const auto f = map.cell(i);
        std::fill(dots.begin(), dots.end(), 0.0);
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double fk = f[k];
            sq += fk * fk;
            const double* row = table.data() + k * n_protos;
            for (std::size_t c = 0; c < n_protos; ++c) dots[c] += fk * row[c];
        }
        const double f_norm = std::sqrt(sq);
        double* dst = out.values.data() + i * n_protos;
        for (std::size_t c = 0; c < n_protos; ++c) dst[c] = dots[c] / (f_norm * proto_norm[c] + epsilon);
    }
    return out;
}

WeightField class_weights(const SimilarityField& sim, double temperature) {
    if (sim.channels == 0) throw InvalidArgument("class_weights needs at least one channel");
    if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
    WeightField out{sim.height, sim.width, sim.channels, std::vector<double>(sim.values.size())};
    const std::size_t n = sim.channels;
    for (std::size_t i = 0; i < sim.height * sim.width; ++i) {
        const double* s = sim.values.data() + i * n;
        double* w = out.values.data() + i * n;
        double top = s[0] / temperature;
        for (std::size_t c = 1; c < n; ++c) top = std::max(top, s[c] / temperature);
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            w[c] = std::exp(s[c] / temperature - top);
            total += w[c];
        }
        for (std::size_t c = 0; c < n; ++c) w[c] /= total;
    }
    return out;
}

RegionMask threshold_mask(const SimilarityField& sim, double tau) {
    RegionMask mask(sim.height, sim.width);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.set(i, sim.max_at(i) > tau);
    return mask;
}

BranchResult apply_ppr(const FeatureMap& map, const PrototypeRepository& repo, const EnhancementConfig& config) {
    config.validate();
    const auto protos = repo.foreground_at(map.scale_id());
    auto sim = cosine_similarity_field(map, protos, config.epsilon);
    const auto weights = class_weights(sim, config.temperature);
    auto mask = threshold_mask(sim, config.tau_fg);

    const std::size_t dim = map.dim();
    FeatureMap out(map.height(), map.width(), dim, map.scale_id());
    std::vector<double> blend(dim);
    for (std::size_t i = 0; i < map.cells(); ++i) {
        if (!mask.at(i)) continue;
        std::fill(blend.begin(), blend.end(), 0.0);
        const auto w = weights.cell(i);
        for (std::size_t c = 0; c < protos.size(); ++c) {
            const auto& p = protos[c].vector;
            for (std::size_t k = 0; k < dim; ++k) blend[k] += w[c] * p[k];
        }
        const auto f = map.cell(i);
        auto dst = out.cell(i);
        for (std::size_t k = 0; k < dim; ++k) dst[k] = f[k] + config.gamma_fg * blend[k];
    }
    return {std::move(out), std::move(mask), std::move(sim)};
}

BranchResult apply_ncm(const FeatureMap& map, const PrototypeRepository& repo, const EnhancementConfig& config) {
    config.validate();
    const auto& bg = repo.background_at(map.scale_id());
    auto sim = cosine_similarity_field(map, std::span<const Prototype>(&bg, 1), config.epsilon);
    auto mask = threshold_mask(sim, config.tau_bg);

    const std::size_t dim = map.dim();
    FeatureMap out(map.height(), map.width(), dim, map.scale_id());
    for (std::size_t i = 0; i < map.cells(); ++i) {
        if (!mask.at(i)) continue;
        const auto f = map.cell(i);
        auto dst = out.cell(i);
        for (std::size_t k = 0; k < dim; ++k) dst[k] = f[k] + config.gamma_bg * bg.vector[k];
    }
    return {std::move(out), std::move(mask), std::move(sim)};
}

FeatureMap fuse(const FeatureMap& map, const BranchResult& positive, const BranchResult& negative) {
    const auto same_shape = [&](const FeatureMap& m) {
        return m.height() == map.height() && m.width() == map.width() && m.dim() == map.dim();
    };
    if (!same_shape(positive.contribution) || !same_shape(negative.contribution) ||
        positive.mask.size() != map.cells() || negative.mask.size() != map.cells()) {
        throw InvalidArgument("fuse: branch shapes do not match the feature map");
    }
    FeatureMap out = map;
    for (std::size_t i = 0; i < map.cells(); ++i) {
        const bool fg = positive.mask.at(i);
        const bool bg = negative.mask.at(i);
        if (!fg && !bg) continue;
        const bool take_fg = fg && (!bg || positive.similarity.max_at(i) >= negative.similarity.max_at(i));
        const auto src = (take_fg ? positive : negative).contribution.cell(i);
        std::copy(src.begin(), src.end(), out.cell(i).begin());
    }
    return out;
}

FeatureMap enhance(const FeatureMap& map, const PrototypeRepository& repo, const EnhancementConfig& config) {
    return fuse(map, apply_ppr(map, repo, config), apply_ncm(map, repo, config));
}

Scene enhance_scene(const Scene& scene, const PrototypeRepository& repo, const EnhancementConfig& config) {
    std::vector<FeatureMap> maps;
    maps.reserve(scene.scales());
    for (const auto& m : scene.maps()) maps.push_back(enhance(m, repo, config));
    return scene.with_maps(std::move(maps));
}

}  // namespace fovea

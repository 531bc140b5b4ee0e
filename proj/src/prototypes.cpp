#include "fovea/prototypes.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {
namespace {

void check_mask_dims(const FeatureMap& map, const RegionMask& mask) {
    if (mask.height() != map.height() || mask.width() != map.width()) {
        throw InvalidArgument(fmt::format("mask {}x{} does not match map {}x{}", mask.height(), mask.width(),
                                          map.height(), map.width()));
    }
}

// Adds the features of every set cell into `sum`; returns the number of cells added.
std::size_t accumulate_cells(const FeatureMap& map, const RegionMask& mask, std::vector<double>& sum) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < map.cells(); ++i) {
        if (!mask.at(i)) continue;
        const auto f = map.cell(i);
        for (std::size_t k = 0; k < f.size(); ++k) sum[k] += f[k];
        ++n;
    }
    return n;
}

std::vector<double> divide(std::vector<double> sum, std::size_t n) {
    const auto denom = static_cast<double>(n);
    for (auto& v : sum) v /= denom;
    return sum;
}

}  // namespace

Prototype extract_foreground_prototype(const FeatureMap& map, const RegionMask& mask, int class_id) {
    check_mask_dims(map, mask);
    std::vector<double> sum(map.dim(), 0.0);
    const std::size_t n = accumulate_cells(map, mask, sum);
    if (n == 0) {
        throw EmptySupportRegion(fmt::format("class {} has no support cells at scale {}", class_id, map.scale_id()));
    }
    return {divide(std::move(sum), n), PrototypeKind::Foreground, class_id, map.scale_id(), n};
}

Prototype extract_background_prototype(const FeatureMap& map, std::span<const BBox> boxes) {
    const auto mask = region_mask_from_boxes(map.height(), map.width(), boxes, MaskMode::background());
    std::vector<double> sum(map.dim(), 0.0);
    const std::size_t n = accumulate_cells(map, mask, sum);
    if (n == 0) {
        throw EmptyBackground(fmt::format("boxes cover the whole {}x{} grid", map.height(), map.width()));
    }
    return {divide(std::move(sum), n), PrototypeKind::Background, -1, map.scale_id(), n};
}

void PrototypeRepository::insert(Prototype proto) {
    if (proto.kind == PrototypeKind::Foreground &&
        (proto.class_id < 0 || static_cast<std::size_t>(proto.class_id) >= classes_.size())) {
        throw InvalidArgument(fmt::format("foreground class {} is not in the vocabulary", proto.class_id));
    }
    if (proto.kind == PrototypeKind::Background) proto.class_id = -1;
    if (proto.support_count == 0) throw InvalidArgument("prototype support_count must be at least 1");
    for (double v : proto.vector) {
        if (!std::isfinite(v)) throw InvalidArgument("prototype has non-finite components");
    }
    const auto key = key_of(proto);
    if (entries_.contains(key)) {
        throw InvalidArgument(fmt::format("duplicate repository entry (class {}, scale {})", proto.class_id,
                                          proto.scale_id));
    }
    entries_.emplace(key, std::move(proto));
}

const Prototype* PrototypeRepository::foreground(int class_id, int scale_id) const {
    auto it = entries_.find(Key{0, class_id, scale_id});
    return it == entries_.end() ? nullptr : &it->second;
}

const Prototype* PrototypeRepository::background(int scale_id) const {
    auto it = entries_.find(Key{1, -1, scale_id});
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<Prototype> PrototypeRepository::foreground_at(int scale_id) const {
    if (classes_.empty()) throw MissingPrototype("repository has an empty class vocabulary");
    std::vector<Prototype> out;
    out.reserve(classes_.size());
    for (std::size_t c = 0; c < classes_.size(); ++c) {
        const auto* p = foreground(static_cast<int>(c), scale_id);
        if (p == nullptr) {
            throw MissingPrototype(fmt::format("no foreground prototype for class '{}' at scale {}", classes_[c],
                                               scale_id));
        }
        out.push_back(*p);
    }
    return out;
}

const Prototype& PrototypeRepository::background_at(int scale_id) const {
    const auto* p = background(scale_id);
    if (p == nullptr) throw MissingPrototype(fmt::format("no background prototype at scale {}", scale_id));
    return *p;
}

std::vector<int> PrototypeRepository::scales() const {
    std::vector<int> out;
    for (const auto& [key, p] : entries_) {
        if (std::find(out.begin(), out.end(), p.scale_id) == out.end()) out.push_back(p.scale_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Prototype> PrototypeRepository::entries() const {
    std::vector<Prototype> out;
    out.reserve(entries_.size());
    for (const auto& [key, p] : entries_) out.push_back(p);
    return out;
}

std::size_t PrototypeRepository::stored_values() const {
    std::size_t n = 0;
    for (const auto& [key, p] : entries_) n += p.vector.size();
    return n;
}

namespace {

// Sum of masked cells over all scenes. Per-scene partial sums are sorted per component before adding,
// so the result depends only on the multiset of scenes, and a duplicated scene contributes exactly 2x.
std::vector<double> pooled_sum(std::span<const Scene> scenes, std::size_t scale, MaskMode mode, std::size_t& count) {
    const std::size_t dim = scenes.front().dim();
    std::vector<std::vector<double>> partials(dim);
    count = 0;
    for (const auto& s : scenes) {
        const auto& map = s.map(scale);
        const auto mask = region_mask_from_boxes(map.height(), map.width(), s.boxes(), mode);
        std::vector<double> partial(dim, 0.0);
        const std::size_t n = accumulate_cells(map, mask, partial);
        if (n == 0) continue;
        count += n;
        for (std::size_t k = 0; k < dim; ++k) partials[k].push_back(partial[k]);
    }
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
        std::sort(partials[k].begin(), partials[k].end());
        for (double v : partials[k]) out[k] += v;
    }
    return out;
}

}  // namespace

PrototypeRepository accumulate_from_support(std::span<const Scene> scenes, std::uint64_t seed,
                                            std::optional<std::size_t> shots) {
    if (scenes.empty()) throw InvalidArgument("support set is empty");
    const auto& first = scenes.front();
    const auto& classes = first.classes();
    const std::size_t n_scales = first.scales();
    const std::size_t dim = first.dim();
    for (const auto& s : scenes) {
        if (s.classes() != classes) throw InvalidArgument("support scenes disagree on the class vocabulary");
        if (s.scales() != n_scales || s.dim() != dim) {
            throw InvalidArgument("support scenes disagree on scale count or feature dim");
        }
    }

    std::size_t k = 0;
    if (shots) {
        k = *shots;
    } else {
        std::vector<std::size_t> instances(classes.size(), 0);
        for (const auto& s : scenes)
            for (const auto& b : s.boxes()) ++instances[static_cast<std::size_t>(b.class_id)];
        k = instances.empty() ? 0 : *std::min_element(instances.begin(), instances.end());
    }

    PrototypeRepository repo(classes, {seed, k});
    for (std::size_t scale = 0; scale < n_scales; ++scale) {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const auto mode = MaskMode::foreground_of_class(static_cast<int>(c));
            std::size_t n = 0;
            std::vector<double> pooled = pooled_sum(scenes, scale, mode, n);
            if (n == 0) {
                throw EmptySupportRegion(fmt::format("class '{}' has no support cells at scale {}", classes[c], scale));
            }
            repo.insert({divide(std::move(pooled), n), PrototypeKind::Foreground, static_cast<int>(c),
                         static_cast<int>(scale), n});
        }

        std::size_t n = 0;
        std::vector<double> pooled = pooled_sum(scenes, scale, MaskMode::background(), n);
        if (n == 0) throw EmptyBackground(fmt::format("support set has no background cells at scale {}", scale));
        repo.insert({divide(std::move(pooled), n), PrototypeKind::Background, -1, static_cast<int>(scale), n});
    }
    return repo;
}

}  // namespace fovea

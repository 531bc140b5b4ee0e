#include "fovea/core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t dim, int scale_id)
    : height_(height), width_(width), dim_(dim), scale_id_(scale_id), data_(height * width * dim, 0.0) {
    validate();
}

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> data,
                       int scale_id)
    : height_(height), width_(width), dim_(dim), scale_id_(scale_id), data_(std::move(data)) {
    validate();
}

void FeatureMap::validate() const {
    if (height_ == 0 || width_ == 0 || dim_ == 0) {
        throw MalformedScene(fmt::format("feature map dims must be positive, got {}x{}x{}", height_, width_, dim_));
    }
    if (data_.size() != height_ * width_ * dim_) {
        throw MalformedScene(fmt::format("feature map data has {} values, expected {}", data_.size(),
                                         height_ * width_ * dim_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw MalformedScene(fmt::format("feature map value {} is not finite", i));
        }
    }
}

void validate_box(const BBox& box, std::size_t height, std::size_t width) {
    if (!(box.x_min < box.x_max) || !(box.y_min < box.y_max)) {
        throw MalformedScene(fmt::format("degenerate box ({}, {}, {}, {})", box.x_min, box.y_min, box.x_max,
                                         box.y_max));
    }
    if (box.class_id < 0) {
        throw MalformedScene(fmt::format("box class_id {} is negative", box.class_id));
    }
    const bool outside = box.x_max <= 0.0 || box.y_max <= 0.0 || box.x_min >= static_cast<double>(width) ||
                         box.y_min >= static_cast<double>(height);
    if (outside) {
        throw MalformedScene(fmt::format("box ({}, {}, {}, {}) lies entirely outside the {}x{} grid", box.x_min,
                                         box.y_min, box.x_max, box.y_max, height, width));
    }
}

std::size_t RegionMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

RegionMask region_mask_from_boxes(std::size_t height, std::size_t width, std::span<const BBox> boxes,
                                  MaskMode mode) {
    if (height == 0 || width == 0) {
        throw InvalidArgument("mask dims must be positive");
    }
    for (const auto& box : boxes) validate_box(box, height, width);

    const bool background = mode.kind == MaskMode::Kind::Background;
    RegionMask mask(height, width, background);
    for (std::size_t y = 0; y < height; ++y) {
        const double cy = static_cast<double>(y) + 0.5;
        for (std::size_t x = 0; x < width; ++x) {
            const double cx = static_cast<double>(x) + 0.5;
            for (const auto& box : boxes) {
                if (!box.contains(cx, cy)) continue;
                if (background) {
                    mask.set(y, x, false);
                    break;
                }
                if (box.class_id == mode.class_id) {
                    mask.set(y, x, true);
                    break;
                }
            }
        }
    }
    return mask;
}

double iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::string to_string(DomainTag tag) { return tag == DomainTag::Source ? "source" : "target"; }

DomainTag domain_from_string(const std::string& name) {
    if (name == "source") return DomainTag::Source;
    if (name == "target") return DomainTag::Target;
    throw MalformedScene(fmt::format("unknown domain tag '{}'", name));
}

Scene::Scene(std::vector<FeatureMap> maps, std::vector<BBox> boxes, std::vector<std::string> classes,
             DomainTag domain, std::uint64_t seed)
    : maps_(std::move(maps)), boxes_(std::move(boxes)), classes_(std::move(classes)), domain_(domain), seed_(seed) {
    validate();
}

Scene Scene::with_maps(std::vector<FeatureMap> maps) const {
    return Scene(std::move(maps), boxes_, classes_, domain_, seed_);
}

void Scene::validate() const {
    if (maps_.empty()) throw MalformedScene("scene has no feature maps");
    const auto& first = maps_.front();
    for (std::size_t s = 0; s < maps_.size(); ++s) {
        const auto& m = maps_[s];
        m.validate();
        if (m.height() != first.height() || m.width() != first.width() || m.dim() != first.dim()) {
            throw MalformedScene(fmt::format("scale {} dims differ from scale 0", s));
        }
        if (m.scale_id() != static_cast<int>(s)) {
            throw MalformedScene(fmt::format("scale {} carries scale_id {}", s, m.scale_id()));
        }
    }
    for (const auto& box : boxes_) {
        validate_box(box, first.height(), first.width());
        if (static_cast<std::size_t>(box.class_id) >= classes_.size()) {
            throw MalformedScene(fmt::format("box class_id {} is not in the {}-class vocabulary", box.class_id,
                                             classes_.size()));
        }
    }
}

}  // namespace fovea

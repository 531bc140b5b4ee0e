#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fovea {

/// Dense H x W x D grid of feature vectors at one scale, row-major by (y, x, channel).
class FeatureMap {
public:
    FeatureMap() = default;
    /// Zero-filled map.
    FeatureMap(std::size_t height, std::size_t width, std::size_t dim, int scale_id = 0);
    /// Takes ownership of `data`; throws MalformedScene on size mismatch or non-finite values.
    FeatureMap(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> data,
               int scale_id = 0);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t cells() const noexcept { return height_ * width_; }
    int scale_id() const noexcept { return scale_id_; }

    std::span<double> cell(std::size_t y, std::size_t x) noexcept {
        return {data_.data() + (y * width_ + x) * dim_, dim_};
    }
    std::span<const double> cell(std::size_t y, std::size_t x) const noexcept {
        return {data_.data() + (y * width_ + x) * dim_, dim_};
    }
    /// Cell by flat index y * width + x.
    std::span<double> cell(std::size_t index) noexcept { return {data_.data() + index * dim_, dim_}; }
    std::span<const double> cell(std::size_t index) const noexcept {
        return {data_.data() + index * dim_, dim_};
    }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    /// Throws MalformedScene when any invariant fails.
    void validate() const;

    bool operator==(const FeatureMap&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t dim_ = 0;
    int scale_id_ = 0;
    std::vector<double> data_;
};

/// Axis-aligned box in feature-grid units.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    int class_id = 0;

    double area() const noexcept { return (x_max - x_min) * (y_max - y_min); }
    /// Half-open containment: [x_min, x_max) x [y_min, y_max).
    bool contains(double x, double y) const noexcept {
        return x >= x_min && x < x_max && y >= y_min && y < y_max;
    }
    bool operator==(const BBox&) const = default;
};

/// Throws MalformedScene if the box is degenerate, has a negative class, or misses the grid.
void validate_box(const BBox& box, std::size_t height, std::size_t width);

class RegionMask {
public:
    RegionMask() = default;
    RegionMask(std::size_t height, std::size_t width, bool fill = false)
        : height_(height), width_(width), flags_(height * width, fill ? 1 : 0) {}

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return flags_.size(); }

    bool at(std::size_t y, std::size_t x) const noexcept { return flags_[y * width_ + x] != 0; }
    bool at(std::size_t index) const noexcept { return flags_[index] != 0; }
    void set(std::size_t index, bool value) noexcept { flags_[index] = value ? 1 : 0; }
    void set(std::size_t y, std::size_t x, bool value) noexcept { set(y * width_ + x, value); }

    std::size_t count() const noexcept;
    bool operator==(const RegionMask&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> flags_;
};

/// Selects which cells region_mask_from_boxes marks.
struct MaskMode {
    enum class Kind { ForegroundOfClass, Background };
    Kind kind = Kind::Background;
    int class_id = -1;

    static MaskMode foreground_of_class(int c) { return {Kind::ForegroundOfClass, c}; }
    static MaskMode background() { return {Kind::Background, -1}; }
};

/// Cell (y, x) belongs to a box when its center (x + 0.5, y + 0.5) lies inside it.
RegionMask region_mask_from_boxes(std::size_t height, std::size_t width, std::span<const BBox> boxes,
                                  MaskMode mode);

/// Intersection over union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

enum class DomainTag { Source, Target };

std::string to_string(DomainTag tag);
DomainTag domain_from_string(const std::string& name);

/// Synthetic annotated image analogue. One feature map per scale.
class Scene {
public:
    Scene() = default;
    Scene(std::vector<FeatureMap> maps, std::vector<BBox> boxes, std::vector<std::string> classes,
          DomainTag domain, std::uint64_t seed);

    const std::vector<FeatureMap>& maps() const noexcept { return maps_; }
    const FeatureMap& map(std::size_t scale = 0) const { return maps_.at(scale); }
    const std::vector<BBox>& boxes() const noexcept { return boxes_; }
    const std::vector<std::string>& classes() const noexcept { return classes_; }
    DomainTag domain() const noexcept { return domain_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::size_t height() const { return maps_.front().height(); }
    std::size_t width() const { return maps_.front().width(); }
    std::size_t dim() const { return maps_.front().dim(); }
    std::size_t scales() const noexcept { return maps_.size(); }

    /// Same annotations and tag, different features (e.g. after enhancement).
    Scene with_maps(std::vector<FeatureMap> maps) const;

    bool operator==(const Scene&) const = default;

private:
    void validate() const;

    std::vector<FeatureMap> maps_;
    std::vector<BBox> boxes_;
    std::vector<std::string> classes_;
    DomainTag domain_ = DomainTag::Source;
    std::uint64_t seed_ = 0;
};

}  // namespace fovea

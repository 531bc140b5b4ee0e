#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fovea/core.hpp"
#include "fovea/errors.hpp"
#include "fovea/scene_io.hpp"
#include "test_support.hpp"

using namespace fovea;

namespace {

// Rasterize both boxes on a fine grid and count covered sub-cells.
double raster_iou(const BBox& a, const BBox& b, int per_unit) {
    const double lo = std::min({a.x_min, a.y_min, b.x_min, b.y_min});
    const double hi = std::max({a.x_max, a.y_max, b.x_max, b.y_max});
    const int n = static_cast<int>(std::ceil((hi - lo) * per_unit));
    long inter = 0, uni = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x = lo + (i + 0.5) / per_unit;
            const double y = lo + (j + 0.5) / per_unit;
            const bool in_a = a.contains(x, y);
            const bool in_b = b.contains(x, y);
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

TEST(FeatureMap, RejectsBadShapes) {
    EXPECT_THROW(FeatureMap(0, 2, 2), MalformedScene);
    EXPECT_THROW(FeatureMap(2, 2, 0), MalformedScene);
    EXPECT_THROW(FeatureMap(2, 2, 1, std::vector<double>(3)), MalformedScene);
}

TEST(FeatureMap, RejectsNonFinite) {
    std::vector<double> data(4, 1.0);
    data[2] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(FeatureMap(2, 2, 1, data), MalformedScene);
    data[2] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(FeatureMap(2, 2, 1, data), MalformedScene);
}

TEST(FeatureMap, RowMajorLayout) {
    std::vector<double> data(2 * 3 * 2);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(i);
    const FeatureMap m(2, 3, 2, data);
    EXPECT_EQ(m.cells(), 6u);
    EXPECT_EQ(m.cell(1, 2)[0], 10.0);
    EXPECT_EQ(m.cell(1, 2)[1], 11.0);
    EXPECT_EQ(m.cell(4)[0], 8.0);
}

TEST(BBox, Validation) {
    EXPECT_NO_THROW(validate_box({0, 0, 1, 1, 0}, 4, 4));
    EXPECT_THROW(validate_box({1, 0, 1, 1, 0}, 4, 4), MalformedScene);
    EXPECT_THROW(validate_box({0, 2, 1, 1, 0}, 4, 4), MalformedScene);
    EXPECT_THROW(validate_box({0, 0, 1, 1, -1}, 4, 4), MalformedScene);
    EXPECT_THROW(validate_box({5, 5, 7, 7, 0}, 4, 4), MalformedScene);
    EXPECT_THROW(validate_box({-3, 0, -1, 2, 0}, 4, 4), MalformedScene);
    EXPECT_NO_THROW(validate_box({-1, -1, 0.5, 0.5, 0}, 4, 4));
}

TEST(RegionMask, NoBoxesBackgroundIsFull) {
    const auto m = region_mask_from_boxes(4, 4, {}, MaskMode::background());
    EXPECT_EQ(m.count(), 16u);
}

TEST(RegionMask, FullCoverBackgroundIsEmpty) {
    const BBox full{0, 0, 4, 4, 0};
    const auto m = region_mask_from_boxes(4, 4, std::span(&full, 1), MaskMode::background());
    EXPECT_EQ(m.count(), 0u);
}

TEST(RegionMask, ForegroundMatchesCenterOracle) {
    const BBox box{0, 0, 2, 2, 0};
    const auto m = region_mask_from_boxes(4, 4, std::span(&box, 1), MaskMode::foreground_of_class(0));
    EXPECT_EQ(m.count(), 4u);
    for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 4; ++x) {
            const double cx = x + 0.5, cy = y + 0.5;
            const bool inside = cx >= 0 && cx < 2 && cy >= 0 && cy < 2;
            EXPECT_EQ(m.at(y, x), inside) << y << "," << x;
        }
    }
    const auto other = region_mask_from_boxes(4, 4, std::span(&box, 1), MaskMode::foreground_of_class(1));
    EXPECT_EQ(other.count(), 0u);
}

TEST(RegionMask, CenterRuleOnFractionalBoxes) {
    // Covers the center of cell x=1 (1.5) but not of x=2 (2.5).
    const BBox box{1.4, 0.0, 2.5, 1.0, 0};
    const auto m = region_mask_from_boxes(1, 4, std::span(&box, 1), MaskMode::foreground_of_class(0));
    EXPECT_FALSE(m.at(0, 0));
    EXPECT_TRUE(m.at(0, 1));
    EXPECT_FALSE(m.at(0, 2));
}

TEST(RegionMask, OverlappingClassesShareCells) {
    const std::vector<BBox> boxes = {{0, 0, 2, 2, 0}, {1, 1, 3, 3, 1}};
    const auto a = region_mask_from_boxes(4, 4, boxes, MaskMode::foreground_of_class(0));
    const auto b = region_mask_from_boxes(4, 4, boxes, MaskMode::foreground_of_class(1));
    EXPECT_TRUE(a.at(1, 1));
    EXPECT_TRUE(b.at(1, 1));
}

TEST(RegionMask, PartitionWithDisjointBoxes) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> pos(0, 7);
        std::vector<BBox> boxes;
        // Non-overlapping by construction: each class gets its own column band.
        for (int c = 0; c < 3; ++c) {
            const double x0 = c * 3;
            const double y0 = pos(rng) % 6;
            boxes.push_back({x0, y0, x0 + 2, y0 + 1 + pos(rng) % 3, c});
        }
        auto bg = region_mask_from_boxes(8, 9, boxes, MaskMode::background());
        std::vector<int> hits(72, 0);
        for (std::size_t i = 0; i < 72; ++i) hits[i] += bg.at(i);
        for (int c = 0; c < 3; ++c) {
            auto fg = region_mask_from_boxes(8, 9, boxes, MaskMode::foreground_of_class(c));
            for (std::size_t i = 0; i < 72; ++i) hits[i] += fg.at(i);
        }
        for (int h : hits) ASSERT_EQ(h, 1);
    }
}

TEST(Iou, Examples) {
    const BBox a{0, 0, 2, 2, 0};
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, {3, 3, 4, 4, 0}), 0.0);
    EXPECT_EQ(iou(a, {2, 0, 4, 2, 0}), 0.0);
    EXPECT_NEAR(iou(a, {1, 1, 3, 3, 0}), 1.0 / 7.0, 1e-15);
    EXPECT_NEAR(raster_iou(a, {1, 1, 3, 3, 0}, 64), 1.0 / 7.0, 1e-12);
}

TEST(Iou, SymmetricBoundedAndMatchesRaster) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coord(0, 8);
    for (int trial = 0; trial < 300; ++trial) {
        auto make = [&] {
            const int x0 = coord(rng), y0 = coord(rng);
            return BBox{double(x0), double(y0), double(x0 + 1 + coord(rng) % 4), double(y0 + 1 + coord(rng) % 4), 0};
        };
        const BBox a = make(), b = make();
        const double v = iou(a, b);
        EXPECT_EQ(v, iou(b, a));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        // Integer boxes rasterize exactly at one sample per unit.
        EXPECT_NEAR(v, raster_iou(a, b, 1), 1e-12);
    }
}

TEST(Domain, StringRoundTrip) {
    EXPECT_EQ(domain_from_string(to_string(DomainTag::Source)), DomainTag::Source);
    EXPECT_EQ(domain_from_string(to_string(DomainTag::Target)), DomainTag::Target);
    EXPECT_THROW(domain_from_string("elsewhere"), Error);
}

TEST(Scene, ValidatesClassesAndScales) {
    std::mt19937_64 rng(1);
    auto map = testkit::random_map(rng, 4, 4, 2);
    EXPECT_THROW(Scene({map}, {{0, 0, 2, 2, 1}}, {"a"}, DomainTag::Source, 0), MalformedScene);
    EXPECT_THROW(Scene({map}, {{9, 9, 12, 12, 0}}, {"a"}, DomainTag::Source, 0), MalformedScene);
    EXPECT_THROW(Scene({}, {}, {"a"}, DomainTag::Source, 0), MalformedScene);
    auto other = testkit::random_map(rng, 4, 5, 2, -1, 1, 1);
    EXPECT_THROW(Scene({map, other}, {}, {"a"}, DomainTag::Source, 0), MalformedScene);
    auto wrong_id = testkit::random_map(rng, 4, 4, 2, -1, 1, 0);
    EXPECT_THROW(Scene({map, wrong_id}, {}, {"a"}, DomainTag::Source, 0), MalformedScene);
    EXPECT_NO_THROW(Scene({map}, {{0, 0, 2, 2, 0}}, {"a"}, DomainTag::Target, 5));
}

TEST(Scene, WithMapsKeepsAnnotations) {
    std::mt19937_64 rng(2);
    const Scene s({testkit::random_map(rng, 3, 3, 2)}, {{0, 0, 1, 1, 0}}, {"a"}, DomainTag::Target, 9);
    const Scene t = s.with_maps({testkit::random_map(rng, 3, 3, 2)});
    EXPECT_EQ(t.boxes(), s.boxes());
    EXPECT_EQ(t.domain(), DomainTag::Target);
    EXPECT_EQ(t.seed(), 9u);
    EXPECT_NE(t.map(), s.map());
}

TEST(SceneJson, RoundTripIsExact) {
    std::mt19937_64 rng(4);
    const Scene s({testkit::random_map(rng, 3, 4, 3, -1e3, 1e3, 0), testkit::random_map(rng, 3, 4, 3, -1, 1, 1)},
                  {{0.25, 0.5, 2.75, 3.0, 1}, {1, 1, 2, 2, 0}}, {"a", "b"}, DomainTag::Target, 77);
    const Scene back = scene_from_json(nlohmann::json::parse(scene_to_json(s).dump()));
    EXPECT_EQ(back, s);
}

TEST(SceneJson, EnhancedFlagAndConfig) {
    std::mt19937_64 rng(5);
    const Scene s({testkit::random_map(rng, 2, 2, 2)}, {}, {"a"}, DomainTag::Source, 0);
    EnhancementConfig cfg;
    cfg.tau_fg = 0.6;
    const auto doc = enhanced_scene_to_json(s, cfg);
    EXPECT_TRUE(doc.at("enhanced").get<bool>());
    EXPECT_EQ(enhancement_config_from_json(doc.at("enhancement_config")), cfg);
    EXPECT_EQ(scene_from_json(doc), s);
}

TEST(SceneJson, MalformedDocuments) {
    EXPECT_THROW(scene_from_json(nlohmann::json::parse(R"({"height":2})")), MalformedScene);
    EXPECT_THROW(scene_from_json(nlohmann::json::parse(
                     R"({"height":1,"width":1,"dim":1,"data":[1,2],"boxes":[],"domain":"source"})")),
                 MalformedScene);
    const auto ok = nlohmann::json::parse(R"({"height":1,"width":2,"dim":1,"data":[1,2],"boxes":[],"domain":"source"})");
    EXPECT_EQ(scene_from_json(ok).width(), 2u);
}

#include <gtest/gtest.h>

#include "fovea/census.hpp"
#include "fovea/errors.hpp"

using namespace fovea;

namespace {

ParameterCensus sample_census(std::size_t text_dim = 64, std::size_t shared_dim = 32) {
    ShiftSpec shift;
    shift.seed = 1;
    const auto ep = generate_episode(shift, EpisodeGeometry{});
    const auto repo = accumulate_from_support(ep.support);
    const auto enc = make_toy_encoder(16, 0);
    const auto state = initialize_alignment(16, text_dim, shared_dim, 0);
    return parameter_census(EnhancementConfig{}, repo, enc, state);
}

}  // namespace

TEST(Census, OnlyProjectionsAreTrainable) {
    const auto census = sample_census();
    for (const auto& e : census.entries) {
        if (e.component == "tsa.proj_v" || e.component == "tsa.proj_t") {
            EXPECT_GT(e.trainable, 0u) << e.component;
        } else {
            EXPECT_EQ(e.trainable, 0u) << e.component;
        }
    }
    EXPECT_EQ(census.at("ppr").trainable, 0u);
    EXPECT_EQ(census.at("ncm").trainable, 0u);
    EXPECT_EQ(census.at("repository").trainable, 0u);
    EXPECT_EQ(census.at("encoder").trainable, 0u);
    EXPECT_EQ(census.at("tsa.proj_v").trainable, 16u * 32u);
    EXPECT_EQ(census.at("tsa.proj_t").trainable, 64u * 32u);
    EXPECT_EQ(census.trainable(), 16u * 32u + 64u * 32u);
}

TEST(Census, FrozenCounts) {
    const auto census = sample_census(8, 4);
    EXPECT_EQ(census.at("encoder").frozen, 2u * 2u * 16u * 16u);
    // Three class prototypes plus background, each 16 values.
    EXPECT_EQ(census.at("repository").frozen, 4u * 16u);
    EXPECT_EQ(census.at("ppr").frozen, 0u);
    EXPECT_THROW(census.at("nonexistent"), InvalidArgument);
}

TEST(Census, Csv) {
    const auto csv = census_csv(sample_census(8, 4));
    EXPECT_EQ(csv.rfind("component,trainable,frozen\n", 0), 0u);
    EXPECT_NE(csv.find("tsa.proj_t,32,0\n"), std::string::npos);
    EXPECT_NE(csv.find("ppr,0,0\n"), std::string::npos);
}

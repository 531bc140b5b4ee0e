#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "fovea/enhance.hpp"
#include "fovea/errors.hpp"
#include "reference_enhance.hpp"
#include "test_support.hpp"

using namespace fovea;

namespace {

PrototypeRepository single_class_repo(std::vector<double> fg, std::vector<double> bg) {
    PrototypeRepository repo({"x"}, {0, 1});
    repo.insert({std::move(fg), PrototypeKind::Foreground, 0, 0, 1});
    repo.insert({std::move(bg), PrototypeKind::Background, -1, 0, 1});
    return repo;
}

SimilarityField field(std::size_t h, std::size_t w, std::size_t c, std::vector<double> v) {
    return {h, w, c, std::move(v)};
}

}  // namespace

TEST(EnhancementConfig, Validation) {
    EXPECT_NO_THROW(EnhancementConfig{}.validate());
    EnhancementConfig c;
    c.tau_fg = -1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.tau_bg = 1.5;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.gamma_fg = -0.1;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.temperature = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.epsilon = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.tau_fg = 1.0;
    EXPECT_NO_THROW(c.validate());
}

TEST(EnhancementConfig, DefaultsAndJson) {
    const EnhancementConfig c;
    EXPECT_EQ(c.tau_fg, 0.75);
    EXPECT_EQ(c.tau_bg, 0.75);
    EXPECT_EQ(c.gamma_fg, 0.5);
    EXPECT_EQ(c.gamma_bg, 0.5);
    EXPECT_EQ(c.temperature, 1.0);
    EXPECT_EQ(c.epsilon, 1e-8);
    EnhancementConfig d;
    d.tau_fg = 0.6;
    d.gamma_bg = 0.25;
    EXPECT_EQ(enhancement_config_from_json(nlohmann::json::parse(to_json(d).dump())), d);
}

TEST(Cosine, Examples) {
    const FeatureMap m(1, 3, 2, {3, 4, 1, 0, 3, 4});
    const std::vector<Prototype> protos = {{{4, 3}, PrototypeKind::Foreground, 0, 0, 1},
                                           {{0, 1}, PrototypeKind::Foreground, 1, 0, 1},
                                           {{3, 4}, PrototypeKind::Foreground, 2, 0, 1}};
    const auto sim = cosine_similarity_field(m, protos);
    EXPECT_NEAR(sim.at(0, 0), 0.96, 1e-9);
    EXPECT_EQ(sim.at(0, 0), 24.0 / (25.0 + 1e-8));
    EXPECT_EQ(sim.at(1, 1), 0.0);
    EXPECT_EQ(sim.at(2, 2), 25.0 / (25.0 + 1e-8));
    EXPECT_LT(sim.at(2, 2), 1.0);
}

TEST(Cosine, ZeroPrototypeGivesZero) {
    const FeatureMap m(1, 1, 2, {1, 2});
    const std::vector<Prototype> protos = {{{0, 0}, PrototypeKind::Background, -1, 0, 1}};
    EXPECT_EQ(cosine_similarity_field(m, protos).at(0, 0), 0.0);
}

TEST(Cosine, MatchesNaiveAndBounded) {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = testkit::random_map(rng, 5, 4, 6, -3, 3);
        const auto repo = testkit::random_repository(rng, 4, 6);
        const auto protos = repo.foreground_at(0);
        const auto sim = cosine_similarity_field(m, protos);
        for (std::size_t i = 0; i < m.cells(); ++i) {
            for (std::size_t c = 0; c < protos.size(); ++c) {
                EXPECT_NEAR(sim.at(i, c), testkit::naive_cosine(m.cell(i), protos[c].vector), 1e-14);
                EXPECT_LE(std::abs(sim.at(i, c)), 1.0 + 1e-6);
            }
        }
    }
}

TEST(Cosine, DimMismatch) {
    const FeatureMap m(1, 1, 2, {1, 2});
    const std::vector<Prototype> protos = {{{1, 2, 3}, PrototypeKind::Foreground, 0, 0, 1}};
    EXPECT_THROW(cosine_similarity_field(m, protos), InvalidArgument);
    EXPECT_THROW(cosine_similarity_field(m, {}), InvalidArgument);
}

TEST(ClassWeights, Examples) {
    const auto single = class_weights(field(1, 2, 1, {0.3, -0.7}), 1.0);
    EXPECT_EQ(single.values, (std::vector<double>{1.0, 1.0}));
    const auto equal = class_weights(field(1, 1, 2, {0.4, 0.4}), 1.0);
    EXPECT_EQ(equal.values, (std::vector<double>{0.5, 0.5}));
    const auto w = class_weights(field(1, 1, 2, {0.9, 0.1}), 0.2);
    const double a = std::exp(4.5), b = std::exp(0.5);
    EXPECT_NEAR(w.values[0], a / (a + b), 1e-15);
    EXPECT_NEAR(w.values[1], b / (a + b), 1e-15);
    EXPECT_NEAR(w.values[0], 0.982, 5e-4);
    EXPECT_NEAR(w.values[1], 0.018, 5e-4);
    EXPECT_THROW(class_weights(field(1, 1, 1, {0.0}), 0.0), InvalidArgument);
}

TEST(ThresholdMask, Examples) {
    const auto m = threshold_mask(field(1, 2, 1, {0.8, 0.7}), 0.75);
    EXPECT_TRUE(m.at(0));
    EXPECT_FALSE(m.at(1));
    EXPECT_EQ(threshold_mask(field(1, 3, 1, {0.75, 0.75, 0.75}), 0.75).count(), 0u);
    EXPECT_EQ(threshold_mask(field(1, 3, 2, {0.1, -0.5, 0.0, 0.3, -0.99, -0.2}), -1.0).count(), 3u);
    // Max over channels decides.
    EXPECT_TRUE(threshold_mask(field(1, 1, 2, {0.1, 0.9}), 0.75).at(0));
}

TEST(Ppr, SingleClassAlgebra) {
    const auto repo = single_class_repo({0, 1}, {-1, 0});
    EnhancementConfig cfg;
    cfg.tau_fg = -0.5;  // f=(1,0) has cosine 0 with p=(0,1)
    const FeatureMap m(1, 1, 2, {1, 0});
    const auto r = apply_ppr(m, repo, cfg);
    EXPECT_TRUE(r.mask.at(0));
    EXPECT_EQ(r.contribution.data()[0], 1.0);
    EXPECT_EQ(r.contribution.data()[1], 0.5);
}

TEST(Ppr, ZeroGammaKeepsMaskedAndZeroesRest) {
    std::mt19937_64 rng(42);
    const auto repo = testkit::random_repository(rng, 3, 4);
    EnhancementConfig cfg;
    cfg.gamma_fg = 0.0;
    cfg.tau_fg = 0.2;
    const auto m = testkit::random_map(rng, 6, 6, 4);
    const auto r = apply_ppr(m, repo, cfg);
    ASSERT_GT(r.mask.count(), 0u);
    ASSERT_LT(r.mask.count(), 36u);
    for (std::size_t i = 0; i < 36; ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            EXPECT_EQ(r.contribution.cell(i)[k], r.mask.at(i) ? m.cell(i)[k] : 0.0);
        }
    }
}

TEST(Ncm, Algebra) {
    const auto repo = single_class_repo({0, 1}, {1, 1});
    EnhancementConfig cfg;
    cfg.gamma_bg = 1.0;
    cfg.tau_bg = 0.5;  // cosine((2,0),(1,1)) ~ 0.707
    const FeatureMap m(1, 1, 2, {2, 0});
    const auto r = apply_ncm(m, repo, cfg);
    EXPECT_TRUE(r.mask.at(0));
    EXPECT_EQ(r.contribution.data()[0], 3.0);
    EXPECT_EQ(r.contribution.data()[1], 1.0);
}

TEST(Ncm, ZeroGamma) {
    std::mt19937_64 rng(43);
    const auto repo = testkit::random_repository(rng, 2, 4);
    EnhancementConfig cfg;
    cfg.gamma_bg = 0.0;
    cfg.tau_bg = 0.1;
    const auto m = testkit::random_map(rng, 6, 6, 4);
    const auto r = apply_ncm(m, repo, cfg);
    for (std::size_t i = 0; i < 36; ++i)
        for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(r.contribution.cell(i)[k], r.mask.at(i) ? m.cell(i)[k] : 0.0);
}

TEST(Enhancers, MissingPrototypes) {
    PrototypeRepository empty({"x"}, {0, 1});
    const FeatureMap m(2, 2, 2);
    EXPECT_THROW(apply_ppr(m, empty, {}), MissingPrototype);
    EXPECT_THROW(apply_ncm(m, empty, {}), MissingPrototype);
    std::mt19937_64 rng(44);
    const auto repo = testkit::random_repository(rng, 2, 2, 1);  // only scale 1
    EXPECT_THROW(enhance(m, repo, {}), MissingPrototype);
}

TEST(Enhancers, MatchNaiveReferenceExactly) {
    std::mt19937_64 rng(45);
    std::uniform_real_distribution<double> tau(-0.5, 0.9), gamma(0.0, 2.0), temp(0.05, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = testkit::random_map(rng, 6, 6, 4);
        const auto repo = testkit::random_repository(rng, 1 + trial % 4, 4);
        EnhancementConfig cfg;
        cfg.tau_fg = tau(rng);
        cfg.tau_bg = tau(rng);
        cfg.gamma_fg = gamma(rng);
        cfg.gamma_bg = gamma(rng);
        cfg.temperature = temp(rng);
        const auto ppr = apply_ppr(m, repo, cfg);
        const auto ncm = apply_ncm(m, repo, cfg);
        const auto rp = testkit::reference_ppr(m, repo, cfg);
        const auto rn = testkit::reference_ncm(m, repo, cfg);
        for (std::size_t i = 0; i < 36; ++i) {
            ASSERT_EQ(ppr.mask.at(i), rp.mask[i] != 0);
            ASSERT_EQ(ncm.mask.at(i), rn.mask[i] != 0);
        }
        for (std::size_t j = 0; j < rp.out.size(); ++j) {
            ASSERT_EQ(ppr.contribution.data()[j], rp.out[j]);
            ASSERT_EQ(ncm.contribution.data()[j], rn.out[j]);
        }
    }
}

TEST(Fuse, BothMasksEmptyIsPassthrough) {
    std::mt19937_64 rng(46);
    const auto repo = testkit::random_repository(rng, 3, 4);
    EnhancementConfig cfg;
    cfg.tau_fg = cfg.tau_bg = 1.0;  // cosine never exceeds 1 - eps
    const auto m = testkit::random_map(rng, 5, 5, 4);
    EXPECT_EQ(enhance(m, repo, cfg), m);
}

TEST(Fuse, RuleTable) {
    // One cell per (fg mask, bg mask, which similarity is higher) combination.
    const FeatureMap map(1, 8, 1, {1, 2, 3, 4, 5, 6, 7, 8});
    BranchResult pos{FeatureMap(1, 8, 1, std::vector<double>(8, 100.0)), RegionMask(1, 8), {1, 8, 1, {}}};
    BranchResult neg{FeatureMap(1, 8, 1, std::vector<double>(8, -100.0)), RegionMask(1, 8), {1, 8, 1, {}}};
    struct Row {
        bool fg, bg;
        double sfg, sbg;
        double expected_tag;  // 0 = original, 1 = positive, -1 = negative
    };
    const Row rows[8] = {{false, false, 0.9, 0.9, 0}, {true, false, 0.1, 0.9, 1},  {false, true, 0.9, 0.1, -1},
                         {true, true, 0.9, 0.8, 1},   {true, true, 0.8, 0.9, -1}, {true, true, 0.85, 0.85, 1},
                         {false, false, 0.0, 0.0, 0}, {true, true, -0.2, -0.3, 1}};
    for (std::size_t i = 0; i < 8; ++i) {
        pos.mask.set(i, rows[i].fg);
        neg.mask.set(i, rows[i].bg);
        pos.similarity.values.push_back(rows[i].sfg);
        neg.similarity.values.push_back(rows[i].sbg);
    }
    const auto out = fuse(map, pos, neg);
    for (std::size_t i = 0; i < 8; ++i) {
        const double want = rows[i].expected_tag == 0 ? map.data()[i] : 100.0 * rows[i].expected_tag;
        EXPECT_EQ(out.data()[i], want) << "row " << i;
    }
}

TEST(Fuse, DisjointMasksCoveringGridIsSum) {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = testkit::random_map(rng, 4, 4, 3);
        const auto repo = testkit::random_repository(rng, 2, 3);
        EnhancementConfig cfg;
        cfg.tau_fg = 0.0;
        cfg.tau_bg = 0.0;
        auto pos = apply_ppr(m, repo, cfg);
        auto neg = apply_ncm(m, repo, cfg);
        // Make the masks a partition: drop overlap cells from the negative branch.
        RegionMask nm(4, 4);
        FeatureMap nc(4, 4, 3);
        for (std::size_t i = 0; i < 16; ++i) {
            const bool keep = !pos.mask.at(i);
            nm.set(i, keep);
            if (keep) {
                const auto f = m.cell(i);
                for (std::size_t k = 0; k < 3; ++k) nc.cell(i)[k] = f[k] + cfg.gamma_bg * repo.background_at(0).vector[k];
            }
        }
        neg.mask = nm;
        neg.contribution = nc;
        const auto out = fuse(m, pos, neg);
        for (std::size_t j = 0; j < out.data().size(); ++j) {
            EXPECT_EQ(out.data()[j], pos.contribution.data()[j] + neg.contribution.data()[j]);
        }
    }
}

TEST(Fuse, ShapeMismatch) {
    const FeatureMap m(2, 2, 1);
    BranchResult ok{FeatureMap(2, 2, 1), RegionMask(2, 2), {2, 2, 1, std::vector<double>(4)}};
    BranchResult bad{FeatureMap(2, 3, 1), RegionMask(2, 3), {2, 3, 1, std::vector<double>(6)}};
    EXPECT_THROW(fuse(m, ok, bad), InvalidArgument);
}

TEST(Identity, ZeroStrengthIsBitExact) {
    std::mt19937_64 rng(48);
    EnhancementConfig cfg;
    cfg.gamma_fg = cfg.gamma_bg = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = testkit::random_map(rng, 6, 6, 4, -5, 5);
        const auto repo = testkit::random_repository(rng, 3, 4);
        const auto out = enhance(m, repo, cfg);
        ASSERT_EQ(std::memcmp(out.data().data(), m.data().data(), m.data().size() * sizeof(double)), 0);
    }
}

TEST(EnhanceScene, AllScalesAndAnnotationsKept) {
    std::mt19937_64 rng(49);
    std::vector<std::string> names = {"c0", "c1"};
    PrototypeRepository repo(names, {0, 1});
    for (int s = 0; s < 2; ++s) {
        for (int c = 0; c < 2; ++c) repo.insert({testkit::random_vector(rng, 3), PrototypeKind::Foreground, c, s, 1});
        repo.insert({testkit::random_vector(rng, 3), PrototypeKind::Background, -1, s, 1});
    }
    const Scene scene({testkit::random_map(rng, 4, 4, 3, -1, 1, 0), testkit::random_map(rng, 4, 4, 3, -1, 1, 1)},
                      {{0, 0, 2, 2, 1}}, names, DomainTag::Target, 3);
    EnhancementConfig cfg;
    cfg.tau_fg = cfg.tau_bg = 0.0;
    const auto out = enhance_scene(scene, repo, cfg);
    EXPECT_EQ(out.boxes(), scene.boxes());
    EXPECT_EQ(out.map(0), enhance(scene.map(0), repo, cfg));
    EXPECT_EQ(out.map(1), enhance(scene.map(1), repo, cfg));
}

#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fovea/core.hpp"
#include "fovea/prototypes.hpp"

namespace fovea {

/// Knobs for the foreground (PPR) and background (NCM) enhancers.
struct EnhancementConfig {
    double tau_fg = 0.75;
    double tau_bg = 0.75;
    double gamma_fg = 0.5;
    double gamma_bg = 0.5;
    double temperature = 1.0;
    double epsilon = 1e-8;

    /// Throws InvalidArgument when a field is outside its domain.
    void validate() const;
    bool operator==(const EnhancementConfig&) const = default;
};

nlohmann::json to_json(const EnhancementConfig& config);
/// Missing keys keep their defaults.
EnhancementConfig enhancement_config_from_json(const nlohmann::json& doc);

/// Per-cell, per-channel values laid out cell-major.
struct ChannelField {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<double> values;

    double at(std::size_t cell, std::size_t channel) const { return values[cell * channels + channel]; }
    std::span<const double> cell(std::size_t index) const { return {values.data() + index * channels, channels}; }
    double max_at(std::size_t cell) const;
};

using SimilarityField = ChannelField;
using WeightField = ChannelField;

/// sim = (f . p) / (|f| |p| + epsilon), one channel per prototype.
SimilarityField cosine_similarity_field(const FeatureMap& map, std::span<const Prototype> protos,
                                        double epsilon = 1e-8);

/// Softmax over channels of sim / temperature, per cell.
WeightField class_weights(const SimilarityField& sim, double temperature);

/// Cell is set iff its maximum similarity is strictly greater than tau.
RegionMask threshold_mask(const SimilarityField& sim, double tau);

/// One enhancer's output. `contribution` is zero outside `mask`.
struct BranchResult {
    FeatureMap contribution;
    RegionMask mask;
    SimilarityField similarity;
};

/// f_pos = f * M_fg + gamma_fg * sum_c w_c p_c * M_fg. Throws MissingPrototype.
BranchResult apply_ppr(const FeatureMap& map, const PrototypeRepository& repo, const EnhancementConfig& config);

/// f_neg = f * M_bg + gamma_bg * p_bg * M_bg. Throws MissingPrototype.
BranchResult apply_ncm(const FeatureMap& map, const PrototypeRepository& repo, const EnhancementConfig& config);

/// Cells in one mask take that branch; cells in neither keep the original feature; cells in both take
/// the branch with the higher max similarity (ties go to the foreground branch).
FeatureMap fuse(const FeatureMap& map, const BranchResult& positive, const BranchResult& negative);

/// fuse(apply_ppr, apply_ncm) on one map.
FeatureMap enhance(const FeatureMap& map, const PrototypeRepository& repo, const EnhancementConfig& config);

/// Enhances every scale of a scene; annotations are carried over unchanged.
Scene enhance_scene(const Scene& scene, const PrototypeRepository& repo, const EnhancementConfig& config);

}  // namespace fovea

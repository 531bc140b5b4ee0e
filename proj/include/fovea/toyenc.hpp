#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "fovea/attention.hpp"
#include "fovea/core.hpp"
#include "fovea/enhance.hpp"
#include "fovea/prototypes.hpp"

namespace fovea {

/// Synthetic source -> target domain shift.
struct ShiftSpec {
    std::vector<double> style_offset;  // added to every target-domain feature; empty means zero
    double clutter_level = 0.0;        // probability a background cell receives foreground-like noise
    double noise_sigma = 0.5;
    std::uint64_t seed = 0;

    void validate(std::size_t dim) const;
    /// Offset of the given magnitude along a direction drawn from `seed`.
    static std::vector<double> style_direction(std::size_t dim, double magnitude, std::uint64_t seed);
};

/// Grid and episode shape.
struct EpisodeGeometry {
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t dim = 16;
    std::size_t n_classes = 3;
    std::size_t shots = 5;
    std::size_t n_query = 4;
    std::size_t box_min = 3;  // box side lengths in cells
    std::size_t box_max = 5;
    double class_norm = 3.0;       // norm of class mean vectors
    double background_norm = 1.5;  // norm of the background mean
    double clutter_strength = 0.8; // fraction of a class mean added to cluttered cells

    void validate() const;
};

struct Episode {
    std::vector<Scene> support;
    std::vector<Scene> query;
    std::uint64_t seed = 0;
};

/// Class-conditional Gaussian blobs in boxes on a noise background. Support holds one object per scene
/// (n_classes * shots scenes); each query scene holds one object per class. Target-domain scenes also get
/// the style offset and clutter. All randomness comes from spec.seed. Throws InvalidArgument when boxes
/// cannot be placed.
Episode generate_episode(const ShiftSpec& spec, const EpisodeGeometry& geometry, DomainTag domain = DomainTag::Target);

/// Class names used for generated scenes.
std::vector<std::string> toy_class_names(std::size_t n_classes);

/// Frozen single-head attention stack. Query/key maps are fixed seeded random matrices.
struct ToyEncoder {
    std::size_t dim = 0;
    std::size_t key_dim = 0;
    std::vector<std::vector<double>> query_maps;  // per layer, dim x key_dim row-major
    std::vector<std::vector<double>> key_maps;
    double position_bias = 0.0;  // logit penalty per grid unit of token distance

    std::size_t n_layers() const noexcept { return query_maps.size(); }
    /// Total number of stored weights; all frozen.
    std::size_t frozen_parameters() const;
};

struct EncoderOptions {
    std::size_t n_layers = 2;
    std::size_t key_dim = 0;      // 0 means dim
    bool tied_query_key = true;   // key map equals query map
    double weight_scale = 1.0;    // entries ~ N(0, weight_scale^2 / dim)
    double position_bias = 0.0;
};

ToyEncoder make_toy_encoder(std::size_t dim, std::uint64_t seed, const EncoderOptions& options = {});

struct EncodeResult {
    FeatureMap output;
    std::vector<AttentionMatrix> attention;  // one per layer, labelled "L1", "L2", ...
};

/// Tokens are cells. Per layer: A = softmax_rows(q k^T / sqrt(key_dim) - bias * dist); output = A x.
EncodeResult encode_with_attention(const FeatureMap& map, const ToyEncoder& encoder);

/// Per-cell prediction: class id, or -1 for background.
struct CellPrediction {
    std::vector<int> labels;
    std::vector<double> confidence;
};

/// Argmax of class-prototype cosine; background when the background similarity beats every class.
/// Throws MissingPrototype.
CellPrediction prototype_score(const FeatureMap& map, const PrototypeRepository& repo);

/// Ground-truth label per cell from the scene's boxes (-1 outside every box).
std::vector<int> ground_truth_labels(const Scene& scene);

struct Confusion {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    Confusion& operator+=(const Confusion& o);
    /// 2TP / (2TP + FP + FN); 1 when there is nothing to find and nothing was predicted.
    double f1() const;
};

/// Micro-averaged over foreground classes.
Confusion cell_confusion(std::span<const int> predicted, std::span<const int> truth);

struct EpisodeMetrics {
    std::uint64_t seed = 0;
    double f1_baseline = 0.0;
    double f1_enhanced = 0.0;
    double dist_baseline = 0.0;
    double dist_enhanced = 0.0;
    DistanceProfile profile_baseline;  // mean over query images
    DistanceProfile profile_enhanced;
    std::vector<DistanceProfile> image_profiles_baseline;
    std::vector<DistanceProfile> image_profiles_enhanced;
};

/// Builds the repository from the support set, scores query scenes after the frozen encoder on raw and
/// (optionally) enhanced features, and profiles attention distance for both. When enhancement is off the
/// enhanced fields repeat the baseline.
EpisodeMetrics evaluate_episode(const Episode& episode, const EnhancementConfig& config, const ToyEncoder& encoder,
                                bool with_enhancement = true);

nlohmann::json to_json(const ShiftSpec& spec);
ShiftSpec shift_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const EpisodeGeometry& geometry);
EpisodeGeometry episode_geometry_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const EncoderOptions& options);
EncoderOptions encoder_options_from_json(const nlohmann::json& doc);

}  // namespace fovea

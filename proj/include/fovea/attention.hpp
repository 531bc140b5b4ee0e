#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fovea {

/// (y, x) in grid units.
using Position = std::array<double, 2>;

/// Row-stochastic N x N token attention with token positions.
struct AttentionMatrix {
    std::size_t n = 0;
    std::vector<double> weights;  // row-major N x N
    std::vector<Position> positions;
    std::string label;

    double at(std::size_t i, std::size_t j) const { return weights[i * n + j]; }
    std::span<const double> row(std::size_t i) const { return {weights.data() + i * n, n}; }

    /// Throws MalformedAttention naming the offending row or field.
    void validate(double row_tolerance = 1e-6) const;
};

/// One layer of attention; single-head layers hold one matrix.
struct AttentionLayer {
    std::string label;
    std::vector<AttentionMatrix> heads;
};

double euclidean(const Position& a, const Position& b);

/// d(i) = sum_j A_ij |p_i - p_j|.
double token_attention_distance(const AttentionMatrix& a, std::size_t i);

/// d_bar = (1/N) sum_i sum_j A_ij |p_i - p_j|. Validates first.
double mean_attention_distance(const AttentionMatrix& a);
/// Arithmetic mean of per-head d_bar.
double mean_attention_distance(std::span<const AttentionMatrix> heads);

/// Plain O(N^2) double loop with no precomputation; used as a cross-check.
double mean_attention_distance_naive(const AttentionMatrix& a);

struct LayerDistance {
    std::string label;
    double mean_distance = 0.0;
    bool operator==(const LayerDistance&) const = default;
};

struct DistanceProfile {
    std::vector<LayerDistance> per_layer;
    std::optional<std::vector<double>> per_token;

    /// Mean of the per-layer distances.
    double mean() const;
};

/// Ordered per-layer means. Throws EmptyProfile on an empty dump.
DistanceProfile layer_profile(std::span<const AttentionLayer> dump);
DistanceProfile layer_profile(std::span<const AttentionMatrix> dump);

/// Per-token distances for one layer (first head).
std::vector<double> token_distances(const AttentionMatrix& a);

/// Element-wise mean over profiles sharing labels and order. Throws ProfileMismatch / EmptyProfile.
DistanceProfile average_profiles(std::span<const DistanceProfile> profiles);

struct DeltaRow {
    std::string label;
    double before = 0.0;
    double after = 0.0;
    double delta = 0.0;
};

struct DistanceDelta {
    std::vector<DeltaRow> rows;
    double mean_delta = 0.0;
};

/// after - before per layer. Throws ProfileMismatch when labels or order differ.
DistanceDelta distance_delta(const DistanceProfile& before, const DistanceProfile& after);

/// JSON array of {label, n, positions: [[y, x], ...], weights: [...], heads?}.
std::vector<AttentionLayer> attention_dump_from_json(const nlohmann::json& doc);
nlohmann::json attention_dump_to_json(std::span<const AttentionLayer> dump);
std::vector<AttentionLayer> load_attention_dump(const std::filesystem::path& path);

/// CSV `layer,mean_distance`.
std::string profile_csv(const DistanceProfile& profile);
/// CSV `layer,before,after,delta`.
std::string delta_csv(const DistanceDelta& delta);

}  // namespace fovea

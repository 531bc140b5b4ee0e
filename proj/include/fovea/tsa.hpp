#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace fovea {

// ---------------------------------------------------------------------------
// Negative text bank
// ---------------------------------------------------------------------------

/// "not c1, not c2, ..." followed by "not ci" per class, in vocabulary order.
/// Output has |vocab| + 1 entries. Throws InvalidArgument on an empty vocabulary.
std::vector<std::string> generate_negative_descriptors(std::span<const std::string> vocab);

/// Background descriptions for one domain. Entries are deduplicated, first occurrence wins.
class TextBank {
public:
    TextBank(std::string domain, std::vector<std::string> classes, std::vector<std::string> entries);

    const std::string& domain() const noexcept { return domain_; }
    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const std::vector<std::string>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::string domain_;
    std::vector<std::string> classes_;
    std::vector<std::string> entries_;
};

inline constexpr std::size_t kDefaultBankSize = 200;

/// Names of the shipped domain families.
std::vector<std::string> builtin_bank_domains();
/// Builds a bank from the domain's context vocabulary: direct negations, alternative phrasings,
/// habitat/context descriptions and contextual negations, cycled until `size` unique entries exist.
/// `classes` overrides the domain's default class list when nonempty.
TextBank builtin_text_bank(const std::string& domain, std::vector<std::string> classes = {},
                           std::size_t size = kDefaultBankSize);

nlohmann::json to_json(const TextBank& bank);
TextBank text_bank_from_json(const nlohmann::json& doc);
TextBank load_text_bank(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Text embedding
// ---------------------------------------------------------------------------

/// Deterministic string -> vector map. Identical input must give bit-identical output.
class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Signed feature hashing of words, word bigrams and character trigrams.
class HashNgramEmbedder final : public TextEmbedder {
public:
    explicit HashNgramEmbedder(std::size_t dim = 64, std::uint64_t seed = 0);
    std::size_t dim() const override { return dim_; }
    std::vector<double> embed(std::string_view text) const override;

private:
    std::size_t dim_;
    std::uint64_t seed_;
};

/// One unit-norm row per bank entry. Throws NonFiniteValue if the embedder misbehaves.
Eigen::MatrixXd embed_text(const TextBank& bank, const TextEmbedder& embedder);
Eigen::MatrixXd embed_strings(std::span<const std::string> texts, const TextEmbedder& embedder);

/// Softmax over cosine(image_feature, text_i) / temperature.
Eigen::VectorXd select_background_texts(const Eigen::VectorXd& image_feature, const Eigen::MatrixXd& text_embeddings,
                                        double temperature);

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

/// Projection matrices of the visual and textual branches. These are the only trainable values.
struct AlignmentState {
    Eigen::MatrixXd proj_v;  // D_v x D_s
    Eigen::MatrixXd proj_t;  // D_t x D_s
    double tau_ctr = 0.1;
    double lambda_bg = 1e3;
    std::size_t step_count = 0;

    std::size_t trainable_parameters() const { return static_cast<std::size_t>(proj_v.size() + proj_t.size()); }
    void validate() const;
    bool operator==(const AlignmentState& o) const;
};

/// Uniform in [-1/sqrt(D_s), 1/sqrt(D_s)] from a seeded generator.
AlignmentState initialize_alignment(std::size_t visual_dim, std::size_t text_dim, std::size_t shared_dim,
                                    std::uint64_t seed, double tau_ctr = 0.1, double lambda_bg = 1e3);

/// S = (V proj_v)(T proj_t)^T.
Eigen::MatrixXd alignment_similarity(const Eigen::MatrixXd& visual, const Eigen::MatrixXd& text,
                                     const AlignmentState& state);

struct ContrastiveResult {
    double loss = 0.0;
    Eigen::MatrixXd grad;  // dL/dS
};

/// L = sum_k -log(exp(S_kk / tau) / sum_ij exp(S_ij / tau)), with a max-shifted log-sum-exp.
ContrastiveResult contrastive_loss(const Eigen::MatrixXd& similarity, double tau_ctr);

struct AlignmentGradient {
    double loss = 0.0;
    Eigen::MatrixXd grad_v;
    Eigen::MatrixXd grad_t;
};

AlignmentGradient alignment_loss_and_gradient(const AlignmentState& state, const Eigen::MatrixXd& visual,
                                              const Eigen::MatrixXd& text);

inline double total_loss(double detection_loss, double ctr_loss, double lambda_bg) {
    return detection_loss + lambda_bg * ctr_loss;
}

/// Plain gradient descent on proj_v and proj_t. Returns the loss before the first step and after each
/// step (steps + 1 values). Throws NonFiniteValue if the loss stops being finite.
std::vector<double> optimize_alignment(AlignmentState& state, const Eigen::MatrixXd& visual,
                                       const Eigen::MatrixXd& text, std::size_t steps, double learning_rate);

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-3);

/// Central differences of the alignment loss against the analytic projection gradients.
GradientCheckReport check_alignment_gradients(const AlignmentState& state, const Eigen::MatrixXd& visual,
                                              const Eigen::MatrixXd& text, double step = 1e-5);

nlohmann::json to_json(const AlignmentState& state);
AlignmentState alignment_state_from_json(const nlohmann::json& doc);

/// CSV `step,loss`.
std::string loss_trace_csv(std::span<const double> trace);

}  // namespace fovea

#include "fovea/tsa.hpp"

#include <cctype>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
    std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    // splitmix64 finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    h ^= h >> 31;
    return h;
}

std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '-') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

}  // namespace

HashNgramEmbedder::HashNgramEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim == 0) throw InvalidArgument("embedding dim must be positive");
}

std::vector<double> HashNgramEmbedder::embed(std::string_view text) const {
    std::vector<double> v(dim_, 0.0);
    auto add = [&](std::string_view feature, double weight) {
        const std::uint64_t h = fnv1a(feature, seed_);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        v[h % dim_] += sign * weight;
    };
    const auto words = words_of(text);
    for (std::size_t i = 0; i < words.size(); ++i) {
        add("w:" + words[i], 1.0);
        if (i + 1 < words.size()) add("b:" + words[i] + ' ' + words[i + 1], 0.7);
        const std::string padded = '^' + words[i] + '$';
        for (std::size_t k = 0; k + 3 <= padded.size(); ++k) add("c:" + padded.substr(k, 3), 0.35);
    }
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (double& x : v) x *= inv;
    }
    return v;
}

Eigen::MatrixXd embed_strings(std::span<const std::string> texts, const TextEmbedder& embedder) {
    const auto dim = static_cast<Eigen::Index>(embedder.dim());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), dim);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto v = embedder.embed(texts[i]);
        if (v.size() != embedder.dim()) {
            throw InvalidArgument(fmt::format("embedder returned {} values for '{}', expected {}", v.size(), texts[i],
                                              embedder.dim()));
        }
        double sq = 0.0;
        for (double x : v) {
            if (!std::isfinite(x)) throw NonFiniteValue(fmt::format("embedding of '{}' is not finite", texts[i]));
            sq += x * x;
        }
        if (sq == 0.0) throw NonFiniteValue(fmt::format("embedding of '{}' is the zero vector", texts[i]));
        const double norm = std::sqrt(sq);
        for (Eigen::Index k = 0; k < dim; ++k) out(static_cast<Eigen::Index>(i), k) = v[static_cast<std::size_t>(k)] / norm;
    }
    return out;
}

Eigen::MatrixXd embed_text(const TextBank& bank, const TextEmbedder& embedder) {
    return embed_strings(bank.entries(), embedder);
}

Eigen::VectorXd select_background_texts(const Eigen::VectorXd& image_feature, const Eigen::MatrixXd& text_embeddings,
                                        double temperature) {
    if (!(temperature > 0.0)) throw InvalidArgument("selection temperature must be > 0");
    if (text_embeddings.cols() != image_feature.size()) {
        throw InvalidArgument(fmt::format("image feature dim {} does not match text dim {}", image_feature.size(),
                                          text_embeddings.cols()));
    }
    if (text_embeddings.rows() == 0) throw InvalidArgument("no texts to select from");
    const double fnorm = image_feature.norm();
    Eigen::VectorXd logits(text_embeddings.rows());
    for (Eigen::Index i = 0; i < text_embeddings.rows(); ++i) {
        const double denom = fnorm * text_embeddings.row(i).norm() + 1e-8;
        logits(i) = text_embeddings.row(i).dot(image_feature) / denom / temperature;
    }
    const double top = logits.maxCoeff();
    Eigen::VectorXd w = (logits.array() - top).exp().matrix();
    return w / w.sum();
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

void AlignmentState::validate() const {
    if (!(tau_ctr > 0.0)) throw InvalidArgument("tau_ctr must be > 0");
    if (!(lambda_bg >= 0.0)) throw InvalidArgument("lambda_bg must be >= 0");
    if (proj_v.cols() != proj_t.cols()) {
        throw InvalidArgument(fmt::format("shared dims differ: proj_v has {} columns, proj_t {}", proj_v.cols(),
                                          proj_t.cols()));
    }
}

bool AlignmentState::operator==(const AlignmentState& o) const {
    return proj_v.rows() == o.proj_v.rows() && proj_v.cols() == o.proj_v.cols() && proj_t.rows() == o.proj_t.rows() &&
           proj_t.cols() == o.proj_t.cols() && proj_v == o.proj_v && proj_t == o.proj_t && tau_ctr == o.tau_ctr &&
           lambda_bg == o.lambda_bg && step_count == o.step_count;
}

AlignmentState initialize_alignment(std::size_t visual_dim, std::size_t text_dim, std::size_t shared_dim,
                                    std::uint64_t seed, double tau_ctr, double lambda_bg) {
    if (visual_dim == 0 || text_dim == 0 || shared_dim == 0) throw InvalidArgument("projection dims must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(shared_dim));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    AlignmentState s;
    s.proj_v.resize(static_cast<Eigen::Index>(visual_dim), static_cast<Eigen::Index>(shared_dim));
    s.proj_t.resize(static_cast<Eigen::Index>(text_dim), static_cast<Eigen::Index>(shared_dim));
    for (Eigen::Index i = 0; i < s.proj_v.rows(); ++i)
        for (Eigen::Index j = 0; j < s.proj_v.cols(); ++j) s.proj_v(i, j) = dist(rng);
    for (Eigen::Index i = 0; i < s.proj_t.rows(); ++i)
        for (Eigen::Index j = 0; j < s.proj_t.cols(); ++j) s.proj_t(i, j) = dist(rng);
    s.tau_ctr = tau_ctr;
    s.lambda_bg = lambda_bg;
    s.validate();
    return s;
}

Eigen::MatrixXd alignment_similarity(const Eigen::MatrixXd& visual, const Eigen::MatrixXd& text,
                                     const AlignmentState& state) {
    if (visual.cols() != state.proj_v.rows()) {
        throw InvalidArgument(fmt::format("visual dim {} does not match proj_v rows {}", visual.cols(), state.proj_v.rows()));
    }
    if (text.cols() != state.proj_t.rows()) {
        throw InvalidArgument(fmt::format("text dim {} does not match proj_t rows {}", text.cols(), state.proj_t.rows()));
    }
    state.validate();
    return (visual * state.proj_v) * (text * state.proj_t).transpose();
}

ContrastiveResult contrastive_loss(const Eigen::MatrixXd& s, double tau_ctr) {
    if (s.rows() != s.cols() || s.rows() == 0) {
        throw InvalidArgument(fmt::format("contrastive loss needs a nonempty square matrix, got {}x{}", s.rows(), s.cols()));
    }
    if (!(tau_ctr > 0.0)) throw InvalidArgument("tau_ctr must be > 0");
    const Eigen::MatrixXd scaled = s / tau_ctr;
    const double top = scaled.maxCoeff();
    const Eigen::MatrixXd shifted = (scaled.array() - top).exp().matrix();
    const double total = shifted.sum();
    const double lse = top + std::log(total);

    const Eigen::Index n = s.rows();
    ContrastiveResult out;
    for (Eigen::Index k = 0; k < n; ++k) out.loss += lse - scaled(k, k);
    // dL/dS = (n * softmax(S / tau) - I) / tau
    out.grad = (static_cast<double>(n) / total) * shifted;
    out.grad.diagonal().array() -= 1.0;
    out.grad /= tau_ctr;
    return out;
}

AlignmentGradient alignment_loss_and_gradient(const AlignmentState& state, const Eigen::MatrixXd& visual,
                                              const Eigen::MatrixXd& text) {
    if (visual.rows() != text.rows()) {
        throw InvalidArgument(fmt::format("visual batch {} and text batch {} differ in size", visual.rows(), text.rows()));
    }
    const Eigen::MatrixXd zv = visual * state.proj_v;
    const Eigen::MatrixXd zt = text * state.proj_t;
    state.validate();
    const auto ctr = contrastive_loss(zv * zt.transpose(), state.tau_ctr);
    AlignmentGradient g;
    g.loss = ctr.loss;
    g.grad_v = visual.transpose() * (ctr.grad * zt);
    g.grad_t = text.transpose() * (ctr.grad.transpose() * zv);
    return g;
}

std::vector<double> optimize_alignment(AlignmentState& state, const Eigen::MatrixXd& visual, const Eigen::MatrixXd& text,
                                       std::size_t steps, double learning_rate) {
    if (!(learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be >= 0");
    std::vector<double> trace;
    trace.reserve(steps + 1);
    auto g = alignment_loss_and_gradient(state, visual, text);
    trace.push_back(g.loss);
    for (std::size_t step = 0; step < steps; ++step) {
        if (!std::isfinite(g.loss) || !g.grad_v.allFinite() || !g.grad_t.allFinite()) {
            throw NonFiniteValue(fmt::format("alignment loss became non-finite at step {} (loss {})", state.step_count,
                                             g.loss));
        }
        state.proj_v -= learning_rate * g.grad_v;
        state.proj_t -= learning_rate * g.grad_t;
        ++state.step_count;
        g = alignment_loss_and_gradient(state, visual, text);
        trace.push_back(g.loss);
    }
    if (!std::isfinite(trace.back())) {
        throw NonFiniteValue(fmt::format("alignment loss is non-finite after {} steps", state.step_count));
    }
    return trace;
}

double relative_error(double analytic, double numeric, double floor) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

GradientCheckReport check_alignment_gradients(const AlignmentState& state, const Eigen::MatrixXd& visual,
                                              const Eigen::MatrixXd& text, double step) {
    const auto analytic = alignment_loss_and_gradient(state, visual, text);
    GradientCheckReport report;
    AlignmentState probe = state;
    auto sweep = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
        for (Eigen::Index i = 0; i < param.rows(); ++i) {
            for (Eigen::Index j = 0; j < param.cols(); ++j) {
                const double saved = param(i, j);
                param(i, j) = saved + step;
                const double up = alignment_loss_and_gradient(probe, visual, text).loss;
                param(i, j) = saved - step;
                const double down = alignment_loss_and_gradient(probe, visual, text).loss;
                param(i, j) = saved;
                const double numeric = (up - down) / (2.0 * step);
                report.max_relative_error = std::max(report.max_relative_error, relative_error(grad(i, j), numeric));
                ++report.checked;
            }
        }
    };
    sweep(probe.proj_v, analytic.grad_v);
    sweep(probe.proj_t, analytic.grad_t);
    return report;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
    const auto data = rows.get<std::vector<std::vector<double>>>();
    const auto r = static_cast<Eigen::Index>(data.size());
    const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(data.front().size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(data[static_cast<std::size_t>(i)].size()) != c) {
            throw DataError("ragged matrix in alignment state");
        }
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = data[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

}  // namespace

nlohmann::json to_json(const AlignmentState& s) {
    return {{"proj_v", matrix_to_json(s.proj_v)}, {"proj_t", matrix_to_json(s.proj_t)}, {"tau_ctr", s.tau_ctr},
            {"lambda_bg", s.lambda_bg},          {"step_count", s.step_count}};
}

AlignmentState alignment_state_from_json(const nlohmann::json& doc) {
    try {
        AlignmentState s;
        s.proj_v = matrix_from_json(doc.at("proj_v"));
        s.proj_t = matrix_from_json(doc.at("proj_t"));
        s.tau_ctr = doc.at("tau_ctr").get<double>();
        s.lambda_bg = doc.at("lambda_bg").get<double>();
        s.step_count = doc.at("step_count").get<std::size_t>();
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("malformed alignment state: {}", e.what()));
    }
}

std::string loss_trace_csv(std::span<const double> trace) {
    std::string out = "step,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) out += fmt::format("{},{:.17g}\n", i, trace[i]);
    return out;
}

}  // namespace fovea

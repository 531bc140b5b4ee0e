#include "fovea/toyenc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<double> random_direction(std::mt19937_64& rng, std::size_t dim, double norm) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    double sq = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        sq += x * x;
    }
    const double scale = norm / std::sqrt(sq);
    for (auto& x : v) x *= scale;
    return v;
}

bool overlaps(const BBox& a, const BBox& b) {
    return a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max;
}

// Places one box per requested class without overlap; integer-aligned.
std::vector<BBox> place_boxes(std::mt19937_64& rng, const EpisodeGeometry& g, std::span<const int> classes) {
    std::uniform_int_distribution<std::size_t> side(g.box_min, g.box_max);
    std::vector<BBox> boxes;
    constexpr int kAttempts = 200;
    for (int c : classes) {
        bool placed = false;
        for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
            const std::size_t w = side(rng);
            const std::size_t h = side(rng);
            std::uniform_int_distribution<std::size_t> px(0, g.width - w);
            std::uniform_int_distribution<std::size_t> py(0, g.height - h);
            const double x0 = static_cast<double>(px(rng));
            const double y0 = static_cast<double>(py(rng));
            const BBox box{x0, y0, x0 + static_cast<double>(w), y0 + static_cast<double>(h), c};
            if (std::none_of(boxes.begin(), boxes.end(), [&](const BBox& b) { return overlaps(b, box); })) {
                boxes.push_back(box);
                placed = true;
            }
        }
        if (!placed) {
            throw InvalidArgument(fmt::format("cannot place {} boxes of side {}..{} on a {}x{} grid", classes.size(),
                                              g.box_min, g.box_max, g.height, g.width));
        }
    }
    return boxes;
}

struct DomainModel {
    std::vector<std::vector<double>> class_means;
    std::vector<double> background_mean;
};

Scene render_scene(std::uint64_t scene_seed, const ShiftSpec& spec, const EpisodeGeometry& g, const DomainModel& model,
                   std::span<const int> classes, DomainTag domain) {
    std::mt19937_64 rng(scene_seed);
    auto boxes = place_boxes(rng, g, classes);
    FeatureMap map(g.height, g.width, g.dim, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_class(0, g.n_classes - 1);
    const bool target = domain == DomainTag::Target;

    for (std::size_t y = 0; y < g.height; ++y) {
        for (std::size_t x = 0; x < g.width; ++x) {
            auto f = map.cell(y, x);
            const double cx = static_cast<double>(x) + 0.5;
            const double cy = static_cast<double>(y) + 0.5;
            const BBox* owner = nullptr;
            for (const auto& b : boxes) {
                if (b.contains(cx, cy)) {
                    owner = &b;
                    break;
                }
            }
            const auto& mean = owner ? model.class_means[static_cast<std::size_t>(owner->class_id)] : model.background_mean;
            for (std::size_t k = 0; k < g.dim; ++k) f[k] = mean[k] + spec.noise_sigma * normal(rng);
            // Draw clutter unconditionally so source and null-shift target scenes consume the same stream.
            const double u = unit(rng);
            const std::size_t lure = pick_class(rng);
            if (target && owner == nullptr && u < spec.clutter_level) {
                const auto& lure_mean = model.class_means[lure];
                for (std::size_t k = 0; k < g.dim; ++k) f[k] += g.clutter_strength * lure_mean[k];
            }
            if (target && !spec.style_offset.empty()) {
                for (std::size_t k = 0; k < g.dim; ++k) f[k] += spec.style_offset[k];
            }
        }
    }
    std::vector<FeatureMap> maps;
    maps.push_back(std::move(map));
    return Scene(std::move(maps), std::move(boxes), toy_class_names(g.n_classes), domain, scene_seed);
}

}  // namespace

void ShiftSpec::validate(std::size_t dim) const {
    if (!(clutter_level >= 0.0 && clutter_level <= 1.0)) throw InvalidArgument("clutter_level must lie in [0, 1]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise_sigma must be >= 0");
    if (!style_offset.empty() && style_offset.size() != dim) {
        throw InvalidArgument(fmt::format("style_offset has {} components, feature dim is {}", style_offset.size(), dim));
    }
    for (double v : style_offset) {
        if (!std::isfinite(v)) throw InvalidArgument("style_offset must be finite");
    }
}

std::vector<double> ShiftSpec::style_direction(std::size_t dim, double magnitude, std::uint64_t seed) {
    if (magnitude == 0.0) return std::vector<double>(dim, 0.0);
    std::mt19937_64 rng(mix_seed(seed, 0x5747));
    return random_direction(rng, dim, magnitude);
}

void EpisodeGeometry::validate() const {
    if (height == 0 || width == 0 || dim == 0) throw InvalidArgument("grid dims must be positive");
    if (n_classes == 0) throw InvalidArgument("n_classes must be >= 1");
    if (shots == 0) throw InvalidArgument("shots must be >= 1");
    if (box_min == 0 || box_min > box_max) throw InvalidArgument("box sides need 1 <= box_min <= box_max");
    if (box_max > height || box_max > width) {
        throw InvalidArgument(fmt::format("boxes up to {} cells do not fit a {}x{} grid", box_max, height, width));
    }
    if (!(class_norm > 0.0) || !(background_norm >= 0.0) || !(clutter_strength >= 0.0)) {
        throw InvalidArgument("class_norm must be > 0; background_norm and clutter_strength >= 0");
    }
}

std::vector<std::string> toy_class_names(std::size_t n_classes) {
    static const std::vector<std::string> base = {"sphere", "cube", "cone", "torus", "prism"};
    std::vector<std::string> out;
    for (std::size_t c = 0; c < n_classes; ++c) {
        out.push_back(c < base.size() ? base[c] : fmt::format("shape{}", c));
    }
    return out;
}

Episode generate_episode(const ShiftSpec& spec, const EpisodeGeometry& g, DomainTag domain) {
    g.validate();
    spec.validate(g.dim);

    std::mt19937_64 rng(mix_seed(spec.seed, 0));
    DomainModel model;
    for (std::size_t c = 0; c < g.n_classes; ++c) model.class_means.push_back(random_direction(rng, g.dim, g.class_norm));
    model.background_mean = random_direction(rng, g.dim, g.background_norm);

    Episode ep;
    ep.seed = spec.seed;
    std::uint64_t stream = 1;
    for (std::size_t c = 0; c < g.n_classes; ++c) {
        for (std::size_t k = 0; k < g.shots; ++k) {
            const int cls[] = {static_cast<int>(c)};
            ep.support.push_back(render_scene(mix_seed(spec.seed, stream++), spec, g, model, cls, domain));
        }
    }
    std::vector<int> all(g.n_classes);
    for (std::size_t c = 0; c < g.n_classes; ++c) all[c] = static_cast<int>(c);
    for (std::size_t q = 0; q < g.n_query; ++q) {
        ep.query.push_back(render_scene(mix_seed(spec.seed, stream++), spec, g, model, all, domain));
    }
    return ep;
}

std::size_t ToyEncoder::frozen_parameters() const {
    std::size_t n = 0;
    for (const auto& m : query_maps) n += m.size();
    for (const auto& m : key_maps) n += m.size();
    return n;
}

ToyEncoder make_toy_encoder(std::size_t dim, std::uint64_t seed, const EncoderOptions& options) {
    if (dim == 0) throw InvalidArgument("encoder dim must be positive");
    ToyEncoder enc;
    enc.dim = dim;
    enc.key_dim = options.key_dim == 0 ? dim : options.key_dim;
    enc.position_bias = options.position_bias;
    std::mt19937_64 rng(mix_seed(seed, 0xe4c));
    std::normal_distribution<double> normal(0.0, options.weight_scale / std::sqrt(static_cast<double>(dim)));
    for (std::size_t l = 0; l < options.n_layers; ++l) {
        std::vector<double> q(dim * enc.key_dim);
        for (auto& v : q) v = normal(rng);
        std::vector<double> k = q;
        if (!options.tied_query_key) {
            for (auto& v : k) v = normal(rng);
        }
        enc.query_maps.push_back(std::move(q));
        enc.key_maps.push_back(std::move(k));
    }
    return enc;
}

EncodeResult encode_with_attention(const FeatureMap& map, const ToyEncoder& enc) {
    if (map.dim() != enc.dim) {
        throw InvalidArgument(fmt::format("encoder dim {} does not match map dim {}", enc.dim, map.dim()));
    }
    const std::size_t n = map.cells();
    const std::size_t d = enc.dim;
    const std::size_t dk = enc.key_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

    std::vector<Position> positions(n);
    for (std::size_t i = 0; i < n; ++i) {
        positions[i] = {static_cast<double>(i / map.width()), static_cast<double>(i % map.width())};
    }

    EncodeResult result{map, {}};
    std::vector<double> q(n * dk);
    std::vector<double> k(n * dk);
    for (std::size_t l = 0; l < enc.n_layers(); ++l) {
        const auto& wq = enc.query_maps[l];
        const auto& wk = enc.key_maps[l];
        const FeatureMap& x = result.output;
        for (std::size_t i = 0; i < n; ++i) {
            const auto f = x.cell(i);
            for (std::size_t j = 0; j < dk; ++j) {
                double sq = 0.0;
                double sk = 0.0;
                for (std::size_t c = 0; c < d; ++c) {
                    sq += f[c] * wq[c * dk + j];
                    sk += f[c] * wk[c * dk + j];
                }
                q[i * dk + j] = sq;
                k[i * dk + j] = sk;
            }
        }

        AttentionMatrix att;
        att.n = n;
        att.label = fmt::format("L{}", l + 1);
        att.positions = positions;
        att.weights.resize(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            double* row = att.weights.data() + i * n;
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dk; ++c) dot += q[i * dk + c] * k[j * dk + c];
                row[j] = dot * scale;
                if (enc.position_bias != 0.0) row[j] -= enc.position_bias * euclidean(positions[i], positions[j]);
                top = std::max(top, row[j]);
            }
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = std::exp(row[j] - top);
                total += row[j];
            }
            for (std::size_t j = 0; j < n; ++j) row[j] /= total;
        }

        FeatureMap next(map.height(), map.width(), d, map.scale_id());
        for (std::size_t i = 0; i < n; ++i) {
            auto out = next.cell(i);
            const double* row = att.weights.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const auto f = x.cell(j);
                for (std::size_t c = 0; c < d; ++c) out[c] += row[j] * f[c];
            }
        }
        result.output = std::move(next);
        result.attention.push_back(std::move(att));
    }
    return result;
}

CellPrediction prototype_score(const FeatureMap& map, const PrototypeRepository& repo) {
    auto protos = repo.foreground_at(map.scale_id());
    protos.push_back(repo.background_at(map.scale_id()));
    const auto sim = cosine_similarity_field(map, protos);
    const std::size_t n_fg = protos.size() - 1;
    CellPrediction out;
    out.labels.resize(map.cells());
    out.confidence.resize(map.cells());
    for (std::size_t i = 0; i < map.cells(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_fg; ++c) {
            if (sim.at(i, c) > sim.at(i, best)) best = c;
        }
        const double bg = sim.at(i, n_fg);
        if (bg > sim.at(i, best)) {
            out.labels[i] = -1;
            out.confidence[i] = bg;
        } else {
            out.labels[i] = static_cast<int>(best);
            out.confidence[i] = sim.at(i, best);
        }
    }
    return out;
}

std::vector<int> ground_truth_labels(const Scene& scene) {
    std::vector<int> labels(scene.height() * scene.width(), -1);
    for (std::size_t y = 0; y < scene.height(); ++y) {
        for (std::size_t x = 0; x < scene.width(); ++x) {
            for (const auto& b : scene.boxes()) {
                if (b.contains(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
                    labels[y * scene.width() + x] = b.class_id;
                    break;
                }
            }
        }
    }
    return labels;
}

Confusion& Confusion::operator+=(const Confusion& o) {
    true_positive += o.true_positive;
    false_positive += o.false_positive;
    false_negative += o.false_negative;
    return *this;
}

double Confusion::f1() const {
    const std::size_t denom = 2 * true_positive + false_positive + false_negative;
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<double>(true_positive) / static_cast<double>(denom);
}

Confusion cell_confusion(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw InvalidArgument("prediction and truth sizes differ");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int p = predicted[i];
        const int t = truth[i];
        if (p >= 0 && p == t) {
            ++c.true_positive;
            continue;
        }
        if (p >= 0) ++c.false_positive;
        if (t >= 0) ++c.false_negative;
    }
    return c;
}

namespace {

struct PathResult {
    double f1 = 0.0;
    double distance = 0.0;
    DistanceProfile profile;
    std::vector<DistanceProfile> image_profiles;
};

std::vector<Scene> encoded(std::span<const Scene> scenes, const ToyEncoder& enc) {
    std::vector<Scene> out;
    out.reserve(scenes.size());
    for (const auto& s : scenes) {
        std::vector<FeatureMap> maps{encode_with_attention(s.map(), enc).output};
        out.push_back(s.with_maps(std::move(maps)));
    }
    return out;
}

PathResult run_path(std::span<const Scene> support, std::span<const Scene> query, const ToyEncoder& enc,
                    std::uint64_t seed) {
    const auto encoded_support = encoded(support, enc);
    const auto head = accumulate_from_support(encoded_support, seed);
    PathResult r;
    Confusion total;
    for (const auto& q : query) {
        const auto out = encode_with_attention(q.map(), enc);
        r.image_profiles.push_back(layer_profile(std::span<const AttentionMatrix>(out.attention)));
        const auto pred = prototype_score(out.output, head);
        total += cell_confusion(pred.labels, ground_truth_labels(q));
    }
    r.f1 = total.f1();
    r.profile = average_profiles(r.image_profiles);
    r.distance = r.profile.mean();
    return r;
}

}  // namespace

EpisodeMetrics evaluate_episode(const Episode& episode, const EnhancementConfig& config, const ToyEncoder& encoder,
                                bool with_enhancement) {
    config.validate();
    if (episode.support.empty() || episode.query.empty()) throw InvalidArgument("episode needs support and query scenes");

    EpisodeMetrics m;
    m.seed = episode.seed;
    const auto base = run_path(episode.support, episode.query, encoder, episode.seed);
    m.f1_baseline = base.f1;
    m.dist_baseline = base.distance;
    m.profile_baseline = base.profile;
    m.image_profiles_baseline = base.image_profiles;

    if (!with_enhancement) {
        m.f1_enhanced = base.f1;
        m.dist_enhanced = base.distance;
        m.profile_enhanced = base.profile;
        m.image_profiles_enhanced = base.image_profiles;
        return m;
    }

    const auto repo = accumulate_from_support(episode.support, episode.seed);
    std::vector<Scene> support;
    std::vector<Scene> query;
    for (const auto& s : episode.support) support.push_back(enhance_scene(s, repo, config));
    for (const auto& s : episode.query) query.push_back(enhance_scene(s, repo, config));
    const auto enh = run_path(support, query, encoder, episode.seed);
    m.f1_enhanced = enh.f1;
    m.dist_enhanced = enh.distance;
    m.profile_enhanced = enh.profile;
    m.image_profiles_enhanced = enh.image_profiles;
    return m;
}

nlohmann::json to_json(const ShiftSpec& s) {
    return {{"style_offset", s.style_offset}, {"clutter_level", s.clutter_level}, {"noise_sigma", s.noise_sigma},
            {"seed", s.seed}};
}

ShiftSpec shift_spec_from_json(const nlohmann::json& doc) {
    ShiftSpec s;
    s.style_offset = doc.value("style_offset", s.style_offset);
    s.clutter_level = doc.value("clutter_level", s.clutter_level);
    s.noise_sigma = doc.value("noise_sigma", s.noise_sigma);
    s.seed = doc.value("seed", s.seed);
    return s;
}

nlohmann::json to_json(const EpisodeGeometry& g) {
    return {{"height", g.height},       {"width", g.width},
            {"dim", g.dim},             {"n_classes", g.n_classes},
            {"shots", g.shots},         {"n_query", g.n_query},
            {"box_min", g.box_min},     {"box_max", g.box_max},
            {"class_norm", g.class_norm}, {"background_norm", g.background_norm},
            {"clutter_strength", g.clutter_strength}};
}

EpisodeGeometry episode_geometry_from_json(const nlohmann::json& doc) {
    EpisodeGeometry g;
    g.height = doc.value("height", g.height);
    g.width = doc.value("width", g.width);
    g.dim = doc.value("dim", g.dim);
    g.n_classes = doc.value("n_classes", g.n_classes);
    g.shots = doc.value("shots", g.shots);
    g.n_query = doc.value("n_query", g.n_query);
    g.box_min = doc.value("box_min", g.box_min);
    g.box_max = doc.value("box_max", g.box_max);
    g.class_norm = doc.value("class_norm", g.class_norm);
    g.background_norm = doc.value("background_norm", g.background_norm);
    g.clutter_strength = doc.value("clutter_strength", g.clutter_strength);
    return g;
}

nlohmann::json to_json(const EncoderOptions& o) {
    return {{"n_layers", o.n_layers},         {"key_dim", o.key_dim}, {"tied_query_key", o.tied_query_key},
            {"weight_scale", o.weight_scale}, {"position_bias", o.position_bias}};
}

EncoderOptions encoder_options_from_json(const nlohmann::json& doc) {
    EncoderOptions o;
    o.n_layers = doc.value("n_layers", o.n_layers);
    o.key_dim = doc.value("key_dim", o.key_dim);
    o.tied_query_key = doc.value("tied_query_key", o.tied_query_key);
    o.weight_scale = doc.value("weight_scale", o.weight_scale);
    o.position_bias = doc.value("position_bias", o.position_bias);
    return o;
}

}  // namespace fovea

#include "fovea/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "fovea/attention.hpp"
#include "fovea/errors.hpp"
#include "fovea/prototypes.hpp"
#include "fovea/scene_io.hpp"
#include "fovea/tsa.hpp"

namespace fovea::cli {

using nlohmann::json;

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kEpisodeIndexName = "episode.json";
constexpr const char* kConfigEchoName = "run_config.json";

void require_known_keys(const json& doc, std::initializer_list<const char*> keys, const char* context) {
    if (!doc.is_object()) throw InvalidArgument(fmt::format("{} config must be a JSON object", context));
    for (const auto& item : doc.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
            throw InvalidArgument(fmt::format("unknown {} config key '{}'", context, item.key()));
        }
    }
}

template <typename F>
auto parse_config(const char* context, F&& body) {
    try {
        return body();
    } catch (const json::exception& e) {
        throw InvalidArgument(fmt::format("bad {} config: {}", context, e.what()));
    }
}

std::optional<fs::path> optional_path(const json& doc, const char* key) {
    if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
    return fs::path(doc.at(key).get<std::string>());
}

json path_or_null(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

void echo_config(const json& config, const fs::path& out) { write_text(out / kConfigEchoName, config.dump(2) + "\n"); }

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(fmt::format("{} must be a positive finite number", name));
}

std::string scene_file(const char* role, std::size_t i) { return fmt::format("{}_{:02}.json", role, i); }

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

void GenConfig::validate() const {
    if (episodes == 0) throw InvalidArgument("episodes must be >= 1");
    geometry.validate();
    if (!(style_magnitude >= 0.0) || !std::isfinite(style_magnitude)) throw InvalidArgument("style must be >= 0");
    shift_for(seed).validate(geometry.dim);
}

ShiftSpec GenConfig::shift_for(std::uint64_t episode_seed) const {
    ShiftSpec s;
    s.style_offset = ShiftSpec::style_direction(geometry.dim, style_magnitude, episode_seed);
    s.clutter_level = clutter_level;
    s.noise_sigma = noise_sigma;
    s.seed = episode_seed;
    return s;
}

json to_json(const GenConfig& c) {
    return {{"seed", c.seed},
            {"episodes", c.episodes},
            {"geometry", fovea::to_json(c.geometry)},
            {"clutter_level", c.clutter_level},
            {"style_magnitude", c.style_magnitude},
            {"noise_sigma", c.noise_sigma},
            {"domain", to_string(c.domain)}};
}

GenConfig gen_config_from_json(const json& doc) {
    return parse_config("gen", [&] {
        require_known_keys(doc, {"seed", "episodes", "geometry", "clutter_level", "style_magnitude", "noise_sigma", "domain"},
                           "gen");
        GenConfig c;
        c.seed = doc.value("seed", c.seed);
        c.episodes = doc.value("episodes", c.episodes);
        if (doc.contains("geometry")) c.geometry = episode_geometry_from_json(doc.at("geometry"));
        c.clutter_level = doc.value("clutter_level", c.clutter_level);
        c.style_magnitude = doc.value("style_magnitude", c.style_magnitude);
        c.noise_sigma = doc.value("noise_sigma", c.noise_sigma);
        if (doc.contains("domain")) c.domain = domain_from_string(doc.at("domain").get<std::string>());
        return c;
    });
}

void RunConfig::validate() const {
    if (episodes.empty()) throw InvalidArgument("run needs an episodes directory");
    enhancement.validate();
    if (encoder.n_layers == 0) throw InvalidArgument("encoder needs at least one layer");
    require_positive(encoder.weight_scale, "weight_scale");
    if (!(encoder.position_bias >= 0.0)) throw InvalidArgument("position_bias must be >= 0");
    if (!(lambda_bg >= 0.0)) throw InvalidArgument("lambda must be >= 0");
}

json to_json(const RunConfig& c) {
    return {{"seed", c.seed},
            {"episodes", c.episodes.string()},
            {"enhancement", fovea::to_json(c.enhancement)},
            {"encoder", fovea::to_json(c.encoder)},
            {"lambda_bg", c.lambda_bg},
            {"enhance", c.enhance}};
}

RunConfig run_config_from_json(const json& doc) {
    return parse_config("run", [&] {
        require_known_keys(doc, {"seed", "episodes", "enhancement", "encoder", "lambda_bg", "enhance"}, "run");
        RunConfig c;
        c.seed = doc.value("seed", c.seed);
        c.episodes = doc.value("episodes", std::string());
        if (doc.contains("enhancement")) c.enhancement = enhancement_config_from_json(doc.at("enhancement"));
        if (doc.contains("encoder")) c.encoder = encoder_options_from_json(doc.at("encoder"));
        c.lambda_bg = doc.value("lambda_bg", c.lambda_bg);
        c.enhance = doc.value("enhance", c.enhance);
        return c;
    });
}

void ExtractConfig::validate() const {
    if (scenes.empty()) throw InvalidArgument("extract needs at least one scene file or episode directory");
    if (shots && *shots == 0) throw InvalidArgument("shots must be >= 1");
}

json to_json(const ExtractConfig& c) {
    json scenes = json::array();
    for (const auto& p : c.scenes) scenes.push_back(p.string());
    return {{"seed", c.seed}, {"scenes", scenes}, {"shots", c.shots ? json(*c.shots) : json(nullptr)}};
}

ExtractConfig extract_config_from_json(const json& doc) {
    return parse_config("extract", [&] {
        require_known_keys(doc, {"seed", "scenes", "shots"}, "extract");
        ExtractConfig c;
        c.seed = doc.value("seed", c.seed);
        for (const auto& p : doc.value("scenes", json::array())) c.scenes.emplace_back(p.get<std::string>());
        if (doc.contains("shots") && !doc.at("shots").is_null()) c.shots = doc.at("shots").get<std::size_t>();
        return c;
    });
}

void AlignConfig::validate() const {
    if (episode.empty()) throw InvalidArgument("align needs an episode directory");
    if (bank_size == 0) throw InvalidArgument("bank_size must be >= 1");
    if (text_dim == 0 || shared_dim == 0) throw InvalidArgument("text_dim and shared_dim must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning_rate must be >= 0");
    require_positive(tau_ctr, "tau_ctr");
    if (!(lambda_bg >= 0.0) || !std::isfinite(lambda_bg)) throw InvalidArgument("lambda must be >= 0");
    require_positive(selection_temperature, "selection_temperature");
    require_positive(detection_temperature, "detection_temperature");
    require_positive(grad_tolerance, "grad_tolerance");
}

json to_json(const AlignConfig& c) {
    return {{"seed", c.seed},
            {"episode", c.episode.string()},
            {"repository", path_or_null(c.repository)},
            {"bank", path_or_null(c.bank)},
            {"bank_domain", c.bank_domain},
            {"bank_size", c.bank_size},
            {"text_dim", c.text_dim},
            {"shared_dim", c.shared_dim},
            {"steps", c.steps},
            {"learning_rate", c.learning_rate},
            {"tau_ctr", c.tau_ctr},
            {"lambda_bg", c.lambda_bg},
            {"selection_temperature", c.selection_temperature},
            {"detection_temperature", c.detection_temperature},
            {"check_grad", c.check_grad},
            {"grad_tolerance", c.grad_tolerance}};
}

AlignConfig align_config_from_json(const json& doc) {
    return parse_config("align", [&] {
        require_known_keys(doc,
                           {"seed", "episode", "repository", "bank", "bank_domain", "bank_size", "text_dim",
                            "shared_dim", "steps", "learning_rate", "tau_ctr", "lambda_bg", "selection_temperature",
                            "detection_temperature", "check_grad", "grad_tolerance"},
                           "align");
        AlignConfig c;
        c.seed = doc.value("seed", c.seed);
        c.episode = doc.value("episode", std::string());
        c.repository = optional_path(doc, "repository");
        c.bank = optional_path(doc, "bank");
        c.bank_domain = doc.value("bank_domain", c.bank_domain);
        c.bank_size = doc.value("bank_size", c.bank_size);
        c.text_dim = doc.value("text_dim", c.text_dim);
        c.shared_dim = doc.value("shared_dim", c.shared_dim);
        c.steps = doc.value("steps", c.steps);
        c.learning_rate = doc.value("learning_rate", c.learning_rate);
        c.tau_ctr = doc.value("tau_ctr", c.tau_ctr);
        c.lambda_bg = doc.value("lambda_bg", c.lambda_bg);
        c.selection_temperature = doc.value("selection_temperature", c.selection_temperature);
        c.detection_temperature = doc.value("detection_temperature", c.detection_temperature);
        c.check_grad = doc.value("check_grad", c.check_grad);
        c.grad_tolerance = doc.value("grad_tolerance", c.grad_tolerance);
        return c;
    });
}

void ProfileConfig::validate() const {
    if (dump.empty()) throw InvalidArgument("profile needs an attention dump");
}

json to_json(const ProfileConfig& c) {
    return {{"seed", c.seed}, {"dump", c.dump.string()}, {"after", path_or_null(c.after)}};
}

ProfileConfig profile_config_from_json(const json& doc) {
    return parse_config("profile", [&] {
        require_known_keys(doc, {"seed", "dump", "after"}, "profile");
        ProfileConfig c;
        c.seed = doc.value("seed", c.seed);
        c.dump = doc.value("dump", std::string());
        c.after = optional_path(doc, "after");
        return c;
    });
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw DataError(fmt::format("cannot create '{}': {}", path.parent_path().string(), ec.message()));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
    out << text;
    if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void save_episode(const Episode& episode, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
    json index = {{"seed", episode.seed}, {"support", json::array()}, {"query", json::array()}};
    for (std::size_t i = 0; i < episode.support.size(); ++i) {
        save_scene(episode.support[i], dir / scene_file("support", i));
        index["support"].push_back(scene_file("support", i));
    }
    for (std::size_t i = 0; i < episode.query.size(); ++i) {
        save_scene(episode.query[i], dir / scene_file("query", i));
        index["query"].push_back(scene_file("query", i));
    }
    save_json(index, dir / kEpisodeIndexName);
}

Episode load_episode(const fs::path& dir) {
    const json index = load_json(dir / kEpisodeIndexName);
    Episode ep;
    try {
        ep.seed = index.at("seed").get<std::uint64_t>();
        for (const auto& name : index.at("support")) ep.support.push_back(load_scene(dir / name.get<std::string>()));
        for (const auto& name : index.at("query")) ep.query.push_back(load_scene(dir / name.get<std::string>()));
    } catch (const json::exception& e) {
        throw DataError(fmt::format("'{}': bad episode index: {}", (dir / kEpisodeIndexName).string(), e.what()));
    }
    if (ep.support.empty()) throw DataError(fmt::format("'{}': episode has no support scenes", dir.string()));
    return ep;
}

std::vector<std::pair<std::uint64_t, fs::path>> manifest_episodes(const fs::path& dir) {
    const json manifest = load_json(dir / kManifestName);
    std::vector<std::pair<std::uint64_t, fs::path>> out;
    try {
        for (const auto& e : manifest.at("episodes")) {
            out.emplace_back(e.at("seed").get<std::uint64_t>(), dir / e.at("dir").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw DataError(fmt::format("'{}': bad manifest: {}", (dir / kManifestName).string(), e.what()));
    }
    return out;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "episode_seed,f1_baseline,f1_enhanced,dist_baseline,dist_enhanced\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.episode_seed, r.f1_baseline, r.f1_enhanced,
                           r.dist_baseline, r.dist_enhanced);
    }
    return out;
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "episode_seed,f1_baseline,f1_enhanced,dist_baseline,dist_enhanced") {
        throw DataError("metrics CSV has an unexpected header");
    }
    std::vector<MetricsRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw DataError(fmt::format("metrics CSV line {}: expected 5 fields", lineno));
        try {
            rows.push_back({std::stoull(cells[0]), std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3]),
                            std::stod(cells[4])});
        } catch (const std::exception&) {
            throw DataError(fmt::format("metrics CSV line {}: not a number", lineno));
        }
    }
    return rows;
}

double detection_proxy_loss(std::span<const Scene> scenes, const PrototypeRepository& repo, double temperature) {
    require_positive(temperature, "detection temperature");
    double total = 0.0;
    std::size_t cells = 0;
    for (const auto& scene : scenes) {
        const FeatureMap& map = scene.map();
        auto protos = repo.foreground_at(map.scale_id());
        protos.push_back(repo.background_at(map.scale_id()));
        const auto sim = cosine_similarity_field(map, protos);
        const auto truth = ground_truth_labels(scene);
        for (std::size_t i = 0; i < map.cells(); ++i) {
            std::size_t target = protos.size() - 1;
            for (std::size_t c = 0; c + 1 < protos.size(); ++c) {
                if (protos[c].class_id == truth[i]) target = c;
            }
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < protos.size(); ++c) top = std::max(top, sim.at(i, c) / temperature);
            double sum = 0.0;
            for (std::size_t c = 0; c < protos.size(); ++c) sum += std::exp(sim.at(i, c) / temperature - top);
            total += top + std::log(sum) - sim.at(i, target) / temperature;
            ++cells;
        }
    }
    if (cells == 0) throw InvalidArgument("detection loss needs at least one cell");
    return total / static_cast<double>(cells);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_gen(const GenConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    json manifest = {{"format", "fovea-episodes"}, {"config", to_json(config)}, {"episodes", json::array()}};
    for (std::size_t i = 0; i < config.episodes; ++i) {
        const std::uint64_t seed = config.seed + i;
        const ShiftSpec shift = config.shift_for(seed);
        const Episode ep = generate_episode(shift, config.geometry, config.domain);
        const std::string dir = fmt::format("episode_{:04}", seed);
        save_episode(ep, out / dir);
        manifest["episodes"].push_back({{"seed", seed},
                                        {"dir", dir},
                                        {"support", ep.support.size()},
                                        {"query", ep.query.size()},
                                        {"shift", fovea::to_json(shift)}});
    }
    write_text(out / kManifestName, manifest.dump(2) + "\n");
    echo_config(to_json(config), out);
    log << fmt::format("wrote {} episodes to {}\n", config.episodes, out.string());
    return 0;
}

int cmd_run(const RunConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    const auto episodes = manifest_episodes(config.episodes);
    echo_config(to_json(config), out);

    std::vector<MetricsRow> rows;
    std::vector<DistanceProfile> before;
    std::vector<DistanceProfile> after;
    std::string errors;
    int status = 0;
    for (const auto& [seed, dir] : episodes) {
        try {
            const Episode ep = load_episode(dir);
            const ToyEncoder encoder = make_toy_encoder(ep.support.front().dim(), config.seed, config.encoder);
            const EpisodeMetrics m = evaluate_episode(ep, config.enhancement, encoder, config.enhance);
            const std::string stem = fmt::format("profiles/episode_{:04}", seed);
            write_text(out / (stem + "_baseline.csv"), profile_csv(m.profile_baseline));
            write_text(out / (stem + "_enhanced.csv"), profile_csv(m.profile_enhanced));
            write_text(out / (stem + "_delta.csv"), delta_csv(distance_delta(m.profile_baseline, m.profile_enhanced)));
            std::string images = "image,layer,baseline,enhanced\n";
            for (std::size_t i = 0; i < m.image_profiles_baseline.size(); ++i) {
                const auto& b = m.image_profiles_baseline[i].per_layer;
                const auto& e = m.image_profiles_enhanced[i].per_layer;
                for (std::size_t l = 0; l < b.size(); ++l) {
                    images += fmt::format("{},{},{:.17g},{:.17g}\n", i, b[l].label, b[l].mean_distance, e[l].mean_distance);
                }
            }
            write_text(out / (stem + "_images.csv"), images);
            rows.push_back({seed, m.f1_baseline, m.f1_enhanced, m.dist_baseline, m.dist_enhanced});
            before.push_back(m.profile_baseline);
            after.push_back(m.profile_enhanced);
        } catch (const Error& e) {
            errors += fmt::format("episode {}: {}\n", seed, e.what());
            if (status == 0) status = static_cast<int>(e.category());
        }
    }
    write_text(out / "metrics.csv", metrics_csv(rows));
    write_text(out / "errors.log", errors);

    std::string summary = fmt::format("episodes {} ok {} failed {}\n", episodes.size(), rows.size(),
                                      episodes.size() - rows.size());
    if (!rows.empty()) {
        double f1b = 0.0, f1e = 0.0, db = 0.0, de = 0.0;
        std::size_t lower = 0, no_worse = 0;
        for (const auto& r : rows) {
            f1b += r.f1_baseline;
            f1e += r.f1_enhanced;
            db += r.dist_baseline;
            de += r.dist_enhanced;
            lower += r.dist_enhanced < r.dist_baseline;
            no_worse += r.f1_enhanced >= r.f1_baseline;
        }
        const double n = static_cast<double>(rows.size());
        const auto mean_before = average_profiles(before);
        const auto mean_after = average_profiles(after);
        write_text(out / "profile_baseline.csv", profile_csv(mean_before));
        write_text(out / "profile_enhanced.csv", profile_csv(mean_after));
        write_text(out / "delta.csv", delta_csv(distance_delta(mean_before, mean_after)));
        summary += fmt::format("f1 baseline {:.6f} enhanced {:.6f}\n", f1b / n, f1e / n);
        summary += fmt::format("distance baseline {:.6f} enhanced {:.6f} delta {:.6f}\n", db / n, de / n, (de - db) / n);
        summary += fmt::format("distance lower in {}/{} episodes, f1 not worse in {}/{}\n", lower, rows.size(),
                               no_worse, rows.size());
    }
    write_text(out / "summary.txt", summary);
    log << summary;
    if (!errors.empty()) log << errors;
    return status;
}

int cmd_extract(const ExtractConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    std::vector<Scene> scenes;
    for (const auto& p : config.scenes) {
        if (fs::is_directory(p)) {
            auto ep = load_episode(p);
            for (auto& s : ep.support) scenes.push_back(std::move(s));
        } else {
            scenes.push_back(load_scene(p));
        }
    }
    const auto repo = accumulate_from_support(scenes, config.seed, config.shots);
    save_repository(repo, out / "repository.json");
    echo_config(to_json(config), out);
    log << fmt::format("pooled {} scenes into {} prototypes\n", scenes.size(), repo.entries().size());
    return 0;
}

int cmd_align(const AlignConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    const Episode ep = load_episode(config.episode);
    const auto repo = config.repository ? load_repository(*config.repository)
                                        : accumulate_from_support(ep.support, config.seed);
    const TextBank bank = config.bank ? load_text_bank(*config.bank)
                                      : builtin_text_bank(config.bank_domain, ep.support.front().classes(),
                                                          config.bank_size);
    const HashNgramEmbedder embedder(config.text_dim, config.seed);
    const Eigen::MatrixXd bank_embeddings = embed_text(bank, embedder);

    std::vector<std::vector<double>> backgrounds;
    for (const auto& s : ep.support) backgrounds.push_back(extract_background_prototype(s.map(), s.boxes()).vector);
    const Eigen::MatrixXd visual = rows_to_matrix(backgrounds);

    AlignmentState state = initialize_alignment(static_cast<std::size_t>(visual.cols()), config.text_dim,
                                                config.shared_dim, config.seed, config.tau_ctr, config.lambda_bg);

    // Each image is paired with a blend of bank texts, weighted by how well they match the image in the
    // initial shared space. The weights stay fixed during optimization.
    const Eigen::MatrixXd projected_bank = bank_embeddings * state.proj_t;
    Eigen::MatrixXd text(visual.rows(), bank_embeddings.cols());
    for (Eigen::Index i = 0; i < visual.rows(); ++i) {
        const Eigen::VectorXd image = state.proj_v.transpose() * visual.row(i).transpose();
        const Eigen::VectorXd w = select_background_texts(image, projected_bank, config.selection_temperature);
        text.row(i) = w.transpose() * bank_embeddings;
    }

    json report = {{"lambda_bg", config.lambda_bg}, {"steps", config.steps}, {"bank_entries", bank.size()}};
    if (config.check_grad) {
        const auto check = check_alignment_gradients(state, visual, text);
        const bool ok = check.max_relative_error < config.grad_tolerance;
        report["grad_check"] = {{"max_relative_error", check.max_relative_error},
                                {"checked", check.checked},
                                {"tolerance", config.grad_tolerance},
                                {"passed", ok}};
        log << fmt::format("gradient check: max relative error {:.3e} over {} entries ({})\n",
                           check.max_relative_error, check.checked, ok ? "pass" : "FAIL");
        if (!ok) {
            echo_config(to_json(config), out);
            write_text(out / "report.json", report.dump(2) + "\n");
            return static_cast<int>(ErrorCategory::Invariant);
        }
    }

    const auto trace = optimize_alignment(state, visual, text, config.steps, config.learning_rate);
    const double detection = detection_proxy_loss(ep.support, repo, config.detection_temperature);
    report["detection_proxy"] = detection;
    report["ctr_initial"] = trace.front();
    report["ctr_final"] = trace.back();
    report["total_loss"] = total_loss(detection, trace.back(), config.lambda_bg);

    echo_config(to_json(config), out);
    write_text(out / "state.json", fovea::to_json(state).dump(2) + "\n");
    write_text(out / "loss_trace.csv", loss_trace_csv(trace));
    write_text(out / "report.json", report.dump(2) + "\n");
    log << fmt::format("contrastive loss {:.6g} -> {:.6g} after {} steps; total {:.6g}\n", trace.front(),
                       trace.back(), config.steps, report["total_loss"].get<double>());
    return 0;
}

int cmd_profile(const ProfileConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    const auto dump = load_attention_dump(config.dump);
    const auto profile = layer_profile(std::span<const AttentionLayer>(dump));
    std::optional<DistanceDelta> delta;
    std::optional<DistanceProfile> after_profile;
    if (config.after) {
        const auto after = load_attention_dump(*config.after);
        after_profile = layer_profile(std::span<const AttentionLayer>(after));
        delta = distance_delta(profile, *after_profile);
    }
    echo_config(to_json(config), out);
    write_text(out / "profile.csv", profile_csv(profile));
    log << fmt::format("{} layers, mean attention distance {:.6f}\n", profile.per_layer.size(), profile.mean());
    if (delta) {
        write_text(out / "profile_after.csv", profile_csv(*after_profile));
        write_text(out / "delta.csv", delta_csv(*delta));
        log << fmt::format("mean delta {:.6f}\n", delta->mean_delta);
    }
    return 0;
}

int cmd_bank(const std::string& domain, std::size_t size, const fs::path& out, std::ostream& log) {
    const TextBank bank = builtin_text_bank(domain, {}, size);
    const fs::path path = out / fmt::format("{}.json", domain);
    write_text(path, fovea::to_json(bank).dump(2) + "\n");
    log << fmt::format("wrote {} entries to {}\n", bank.size(), path.string());
    return 0;
}

}  // namespace fovea::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fovea/enhance.hpp"
#include "fovea/toyenc.hpp"

namespace fovea::cli {

namespace fs = std::filesystem;

// Each command config serializes to the JSON accepted by --config. Output directories are not part
// of the config, so an echoed config can be replayed into a different directory.

struct GenConfig {
    std::uint64_t seed = 0;       // first episode seed; episode i uses seed + i
    std::size_t episodes = 100;
    EpisodeGeometry geometry;
    double clutter_level = 0.3;
    double style_magnitude = 1.0;  // norm of the per-episode style offset
    double noise_sigma = 0.5;
    DomainTag domain = DomainTag::Target;

    void validate() const;
    ShiftSpec shift_for(std::uint64_t episode_seed) const;
};
nlohmann::json to_json(const GenConfig& c);
GenConfig gen_config_from_json(const nlohmann::json& doc);

struct RunConfig {
    std::uint64_t seed = 0;  // encoder seed
    fs::path episodes;       // directory written by gen
    EnhancementConfig enhancement;
    EncoderOptions encoder;
    double lambda_bg = 1e3;
    bool enhance = true;

    void validate() const;
};
nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& doc);

struct ExtractConfig {
    std::uint64_t seed = 0;
    std::vector<fs::path> scenes;  // scene files, or episode directories whose support sets are pooled
    std::optional<std::size_t> shots;

    void validate() const;
};
nlohmann::json to_json(const ExtractConfig& c);
ExtractConfig extract_config_from_json(const nlohmann::json& doc);

struct AlignConfig {
    std::uint64_t seed = 0;
    fs::path episode;               // one episode directory; its support set supplies the visual side
    std::optional<fs::path> repository;  // built from the support set when absent
    std::optional<fs::path> bank;        // text bank JSON; built-in bank when absent
    std::string bank_domain = "synthetic";
    std::size_t bank_size = 200;
    std::size_t text_dim = 64;
    std::size_t shared_dim = 32;
    std::size_t steps = 200;
    double learning_rate = 0.05;
    double tau_ctr = 0.1;
    double lambda_bg = 1e3;
    double selection_temperature = 1.0;
    double detection_temperature = 1.0;
    bool check_grad = false;
    double grad_tolerance = 1e-4;

    void validate() const;
};
nlohmann::json to_json(const AlignConfig& c);
AlignConfig align_config_from_json(const nlohmann::json& doc);

struct ProfileConfig {
    std::uint64_t seed = 0;
    fs::path dump;
    std::optional<fs::path> after;

    void validate() const;
};
nlohmann::json to_json(const ProfileConfig& c);
ProfileConfig profile_config_from_json(const nlohmann::json& doc);

/// Commands return the process exit code: 0 ok, 1 usage, 2 data, 3 invariant violation.
/// Failures that abort the whole command are thrown as fovea::Error.
int cmd_gen(const GenConfig& config, const fs::path& out, std::ostream& log);
int cmd_run(const RunConfig& config, const fs::path& out, std::ostream& log);
int cmd_extract(const ExtractConfig& config, const fs::path& out, std::ostream& log);
int cmd_align(const AlignConfig& config, const fs::path& out, std::ostream& log);
int cmd_profile(const ProfileConfig& config, const fs::path& out, std::ostream& log);
/// Exports a shipped text bank.
int cmd_bank(const std::string& domain, std::size_t size, const fs::path& out, std::ostream& log);

/// Episode directory layout produced by gen.
Episode load_episode(const fs::path& dir);
void save_episode(const Episode& episode, const fs::path& dir);
/// Seeds and subdirectories listed in a gen manifest, in manifest order.
std::vector<std::pair<std::uint64_t, fs::path>> manifest_episodes(const fs::path& dir);

struct MetricsRow {
    std::uint64_t episode_seed = 0;
    double f1_baseline = 0.0;
    double f1_enhanced = 0.0;
    double dist_baseline = 0.0;
    double dist_enhanced = 0.0;
};
/// CSV `episode_seed,f1_baseline,f1_enhanced,dist_baseline,dist_enhanced`, 17 significant digits.
std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

/// The detection-side stand-in for the alignment loss: mean per-cell cross-entropy of the
/// prototype classifier (softmax over class and background cosines) against the ground truth.
double detection_proxy_loss(std::span<const Scene> scenes, const PrototypeRepository& repo, double temperature);

/// Writes text to a file, creating parent directories. Throws DataError with the path on failure.
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace fovea::cli

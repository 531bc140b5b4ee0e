#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "fovea/core.hpp"

namespace fovea {

enum class PrototypeKind { Foreground, Background };

/// Mean feature vector over a labelled region. Stored unnormalized.
struct Prototype {
    std::vector<double> vector;
    PrototypeKind kind = PrototypeKind::Foreground;
    int class_id = -1;  // -1 for background
    int scale_id = 0;
    std::size_t support_count = 0;

    bool operator==(const Prototype&) const = default;
};

/// Mean of the features at set cells of `mask`. Throws EmptySupportRegion if no cell is set.
Prototype extract_foreground_prototype(const FeatureMap& map, const RegionMask& mask, int class_id);

/// Mean over cells outside every box. Throws EmptyBackground if the boxes cover the grid.
Prototype extract_background_prototype(const FeatureMap& map, std::span<const BBox> boxes);

struct RepositoryMetadata {
    std::uint64_t seed = 0;
    std::size_t shots = 0;
    bool operator==(const RepositoryMetadata&) const = default;
};

/// Per-(class, scale) foreground prototypes and one background prototype per scale.
/// Holds derived statistics only; nothing in here is trainable.
class PrototypeRepository {
public:
    PrototypeRepository() = default;
    PrototypeRepository(std::vector<std::string> classes, RepositoryMetadata metadata)
        : classes_(std::move(classes)), metadata_(metadata) {}

    /// Throws InvalidArgument on a duplicate key or an out-of-vocabulary class.
    void insert(Prototype proto);

    const Prototype* foreground(int class_id, int scale_id) const;
    const Prototype* background(int scale_id) const;
    /// Foreground prototypes for `scale_id` in class order; throws MissingPrototype if any class lacks one.
    std::vector<Prototype> foreground_at(int scale_id) const;
    /// Throws MissingPrototype.
    const Prototype& background_at(int scale_id) const;

    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const RepositoryMetadata& metadata() const noexcept { return metadata_; }
    std::vector<int> scales() const;
    std::size_t size() const noexcept { return entries_.size(); }
    /// Entries in key order: foreground (class, scale) first, then background per scale.
    std::vector<Prototype> entries() const;

    /// Number of stored scalar statistics (all frozen).
    std::size_t stored_values() const;

    bool operator==(const PrototypeRepository&) const = default;

private:
    using Key = std::tuple<int, int, int>;  // kind, class_id, scale_id
    static Key key_of(const Prototype& p) {
        return {p.kind == PrototypeKind::Foreground ? 0 : 1, p.class_id, p.scale_id};
    }

    std::vector<std::string> classes_;
    RepositoryMetadata metadata_;
    std::map<Key, Prototype> entries_;
};

/// Pools foreground cells per (class, scale) and background cells per scale across all scenes
/// (each cell counts once), then divides. Throws EmptySupportRegion naming a class with no cells.
PrototypeRepository accumulate_from_support(std::span<const Scene> scenes, std::uint64_t seed = 0,
                                            std::optional<std::size_t> shots = std::nullopt);

inline constexpr int kRepositoryFormatVersion = 1;

/// JSON with vectors written at 17 significant digits.
void save_repository(const PrototypeRepository& repo, const std::filesystem::path& path);
std::string repository_to_string(const PrototypeRepository& repo);
/// Throws CorruptRepository, VersionMismatch or MissingEntries.
PrototypeRepository load_repository(const std::filesystem::path& path);
PrototypeRepository repository_from_string(const std::string& text);

}  // namespace fovea

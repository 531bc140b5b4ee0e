#include <algorithm>
#include <map>
#include <optional>
#include <unordered_set>

#include <fmt/format.h>

#include "fovea/errors.hpp"
#include "fovea/scene_io.hpp"
#include "fovea/tsa.hpp"

namespace fovea {

std::vector<std::string> generate_negative_descriptors(std::span<const std::string> vocab) {
    if (vocab.empty()) throw InvalidArgument("negative descriptors need a nonempty vocabulary");
    std::vector<std::string> out;
    std::string combined;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        combined += fmt::format("{}not {}", i == 0 ? "" : ", ", vocab[i]);
    }
    out.push_back(std::move(combined));
    for (const auto& c : vocab) out.push_back("not " + c);
    return out;
}

TextBank::TextBank(std::string domain, std::vector<std::string> classes, std::vector<std::string> entries)
    : domain_(std::move(domain)), classes_(std::move(classes)) {
    std::unordered_set<std::string> seen;
    for (auto& e : entries) {
        if (e.empty()) continue;
        if (seen.insert(e).second) entries_.push_back(std::move(e));
    }
    if (entries_.empty()) throw InvalidArgument(fmt::format("text bank '{}' has no entries", domain_));
}

namespace {

struct DomainVocabulary {
    std::vector<std::string> classes;
    std::vector<std::string> contexts;  // habitat / scene descriptions
    std::vector<std::string> styles;    // surface or rendering qualifiers
};

const std::map<std::string, DomainVocabulary>& domain_vocabularies() {
    static const std::map<std::string, DomainVocabulary> vocab = {
        {"synthetic",
         {{"sphere", "cube", "cone", "torus", "prism"},
          {"noise field", "flat backdrop", "textured plane", "empty grid", "speckled surface", "gradient wash",
           "static pattern", "blank canvas", "uniform fill", "scattered dots"},
          {"plain", "noisy", "smooth", "grainy", "dim", "bright"}}},
        {"aquatic",
         {{"fish", "sea urchin", "scallop", "sea cucumber"},
          {"sandy seafloor", "rocky seabed", "open water", "coral reef", "seagrass bed", "murky water",
           "kelp forest", "underwater cave", "silt plume", "shallow lagoon"},
          {"murky", "clear", "turbid", "sunlit", "deep", "shallow"}}},
        {"industrial",
         {{"crazing", "inclusion", "patches", "pitted surface", "rolled-in scale", "scratches"},
          {"steel surface", "rolled sheet", "metal plate", "machined face", "polished strip", "coated panel",
           "cast billet", "ground finish", "cold-rolled coil", "galvanized sheet"},
          {"uniform", "clean", "matte", "glossy", "flawless", "standard"}}},
        {"cartoon",
         {{"person", "dog", "cat", "car", "bird", "boat", "chair", "sofa", "bottle", "horse"},
          {"speech bubble", "comic panel", "cartoon sky", "clipart room", "striped backdrop", "dotted pattern",
           "cartoon street", "drawn meadow", "empty stage", "mosaic wall"},
          {"flat", "outlined", "pastel", "bold", "sketched", "cel-shaded"}}},
        {"aerial",
         {{"airplane", "ship", "bridge", "vehicle", "stadium", "windmill", "harbor", "dam"},
          {"farmland", "forest canopy", "bare soil", "desert plain", "river bank", "coastline", "mountain ridge",
           "grassland", "lake surface", "rural road"},
          {"overhead", "satellite", "hazy", "cloud-free", "low-contrast", "sunlit"}}},
        {"arthropod",
         {{"spider", "beetle", "fly", "bee", "butterfly", "dragonfly", "true bug"},
          {"leaf surface", "tree bark", "forest floor", "flower petal", "meadow grass", "soil patch", "moss cushion",
           "plant stem", "rock face", "twig"},
          {"green", "mossy", "weathered", "dewy", "shaded", "dry"}}},
    };
    return vocab;
}

}  // namespace

std::vector<std::string> builtin_bank_domains() {
    std::vector<std::string> out;
    for (const auto& [name, v] : domain_vocabularies()) out.push_back(name);
    return out;
}

TextBank builtin_text_bank(const std::string& domain, std::vector<std::string> classes, std::size_t size) {
    const auto& all = domain_vocabularies();
    auto it = all.find(domain);
    if (it == all.end()) throw InvalidArgument(fmt::format("no built-in text bank for domain '{}'", domain));
    const auto& v = it->second;
    if (classes.empty()) classes = v.classes;
    if (size == 0) throw InvalidArgument("text bank size must be positive");

    // Each generator yields its i-th phrase or nothing once exhausted.
    using Generator = std::function<std::optional<std::string>(std::size_t)>;
    const std::size_t nc = classes.size();
    const std::size_t nx = v.contexts.size();
    const std::size_t ns = v.styles.size();
    static const std::vector<std::string> negators = {"not", "not a", "definitely not", "absolutely not",
                                                      "certainly not", "clearly not"};
    static const std::vector<std::string> absences = {"area without", "region with no", "space lacking",
                                                      "scene free of", "zone devoid of"};
    const std::vector<Generator> generators = {
        // direct negations
        [&](std::size_t i) -> std::optional<std::string> {
            if (i >= nc * negators.size()) return std::nullopt;
            return fmt::format("{} {}", negators[i / nc], classes[i % nc]);
        },
        // context descriptions
        [&](std::size_t i) -> std::optional<std::string> {
            if (i >= nx * (ns + 1)) return std::nullopt;
            const auto& ctx = v.contexts[i % nx];
            const std::size_t s = i / nx;
            return s == 0 ? ctx : fmt::format("{} {}", v.styles[s - 1], ctx);
        },
        // alternative phrasings of absence
        [&](std::size_t i) -> std::optional<std::string> {
            if (i >= nc * absences.size()) return std::nullopt;
            return fmt::format("{} {}", absences[i / nc], classes[i % nc]);
        },
        // contextual negations
        [&](std::size_t i) -> std::optional<std::string> {
            if (i >= nx * nc) return std::nullopt;
            return fmt::format("{} without {}", v.contexts[i % nx], classes[(i / nx + i) % nc]);
        },
        [&](std::size_t i) -> std::optional<std::string> {
            if (i >= nx * nc) return std::nullopt;
            return fmt::format("{} with no {} present", v.contexts[(i + 3) % nx], classes[i % nc]);
        },
        [&](std::size_t i) -> std::optional<std::string> {
            if (i >= nx * ns * nc) return std::nullopt;
            return fmt::format("{} {} without any {}", v.styles[i % ns], v.contexts[(i / ns) % nx],
                               classes[(i / (ns * nx)) % nc]);
        },
    };

    std::vector<std::string> entries = generate_negative_descriptors(classes);
    std::unordered_set<std::string> seen(entries.begin(), entries.end());
    std::vector<std::string> unique;
    for (auto& e : entries) {
        if (std::find(unique.begin(), unique.end(), e) == unique.end()) unique.push_back(e);
    }
    entries = std::move(unique);
    std::vector<std::size_t> cursor(generators.size(), 0);
    bool progressed = true;
    while (entries.size() < size && progressed) {
        progressed = false;
        for (std::size_t g = 0; g < generators.size() && entries.size() < size; ++g) {
            while (auto phrase = generators[g](cursor[g]++)) {
                if (seen.insert(*phrase).second) {
                    entries.push_back(std::move(*phrase));
                    progressed = true;
                    break;
                }
            }
        }
    }
    if (entries.size() > size) entries.resize(size);
    return TextBank(domain, std::move(classes), std::move(entries));
}

nlohmann::json to_json(const TextBank& bank) {
    return {{"domain", bank.domain()}, {"classes", bank.classes()}, {"entries", bank.entries()}};
}

TextBank text_bank_from_json(const nlohmann::json& doc) {
    try {
        return TextBank(doc.at("domain").get<std::string>(), doc.at("classes").get<std::vector<std::string>>(),
                        doc.at("entries").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("malformed text bank: {}", e.what()));
    }
}

TextBank load_text_bank(const std::filesystem::path& path) { return text_bank_from_json(load_json(path)); }

}  // namespace fovea

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fovea/errors.hpp"
#include "fovea/prototypes.hpp"

namespace fovea {

using nlohmann::json;

std::string repository_to_string(const PrototypeRepository& repo) {
    std::string out;
    out += fmt::format("{{\n  \"version\": {},\n  \"classes\": {},\n", kRepositoryFormatVersion,
                       json(repo.classes()).dump());
    out += fmt::format("  \"scales\": {},\n", json(repo.scales()).dump());
    out += fmt::format("  \"seed\": {},\n  \"shots\": {},\n", repo.metadata().seed, repo.metadata().shots);
    out += "  \"entries\": [";
    const auto entries = repo.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& p = entries[i];
        out += i == 0 ? "\n" : ",\n";
        if (p.kind == PrototypeKind::Foreground) {
            out += fmt::format("    {{\"kind\": \"foreground\", \"class_id\": {}, ", p.class_id);
        } else {
            out += "    {\"kind\": \"background\", ";
        }
        out += fmt::format("\"scale_id\": {}, \"support_count\": {}, \"vector\": [", p.scale_id, p.support_count);
        for (std::size_t k = 0; k < p.vector.size(); ++k) {
            out += fmt::format("{}{:.17g}", k == 0 ? "" : ", ", p.vector[k]);
        }
        out += "]}";
    }
    out += "\n  ]\n}\n";
    return out;
}

void save_repository(const PrototypeRepository& repo, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
    out << repository_to_string(repo);
    if (!out) throw DataError(fmt::format("failed writing '{}'", path.string()));
}

PrototypeRepository repository_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CorruptRepository(fmt::format("repository is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("version")) throw CorruptRepository("repository has no version field");
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kRepositoryFormatVersion) {
        throw VersionMismatch(fmt::format("repository format version {} is not supported (expected {})",
                                          doc["version"].dump(), kRepositoryFormatVersion));
    }
    try {
        PrototypeRepository repo(doc.at("classes").get<std::vector<std::string>>(),
                                 {doc.value("seed", std::uint64_t{0}), doc.value("shots", std::size_t{0})});
        for (const auto& e : doc.at("entries")) {
            Prototype p;
            const auto kind = e.at("kind").get<std::string>();
            if (kind == "foreground") {
                p.kind = PrototypeKind::Foreground;
                p.class_id = e.at("class_id").get<int>();
            } else if (kind == "background") {
                p.kind = PrototypeKind::Background;
            } else {
                throw CorruptRepository(fmt::format("unknown entry kind '{}'", kind));
            }
            p.scale_id = e.at("scale_id").get<int>();
            p.support_count = e.at("support_count").get<std::size_t>();
            p.vector = e.at("vector").get<std::vector<double>>();
            repo.insert(std::move(p));
        }
        std::size_t dim = 0;
        for (const auto& p : repo.entries()) {
            if (dim == 0) dim = p.vector.size();
            if (p.vector.empty() || p.vector.size() != dim) {
                throw CorruptRepository("repository vectors disagree on dimension");
            }
        }
        for (int scale : doc.at("scales").get<std::vector<int>>()) {
            for (std::size_t c = 0; c < repo.classes().size(); ++c) {
                if (repo.foreground(static_cast<int>(c), scale) == nullptr) {
                    throw MissingEntries(fmt::format("no foreground entry for class '{}' at scale {}",
                                                     repo.classes()[c], scale));
                }
            }
            if (repo.background(scale) == nullptr) {
                throw MissingEntries(fmt::format("no background entry at scale {}", scale));
            }
        }
        return repo;
    } catch (const json::exception& e) {
        throw CorruptRepository(fmt::format("malformed repository: {}", e.what()));
    } catch (const InvalidArgument& e) {
        throw CorruptRepository(fmt::format("invalid repository entry: {}", e.what()));
    }
}

PrototypeRepository load_repository(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return repository_from_string(buf.str());
}

}  // namespace fovea

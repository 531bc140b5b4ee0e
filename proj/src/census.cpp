#include "fovea/census.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fovea/errors.hpp"

namespace fovea {

std::size_t ParameterCensus::trainable() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.trainable;
    return n;
}

const CensusEntry& ParameterCensus::at(const std::string& component) const {
    auto it = std::find_if(entries.begin(), entries.end(), [&](const CensusEntry& e) { return e.component == component; });
    if (it == entries.end()) throw InvalidArgument("no census entry for " + component);
    return *it;
}

ParameterCensus parameter_census(const EnhancementConfig& config, const PrototypeRepository& repo,
                                 const ToyEncoder& encoder, const AlignmentState& alignment) {
    config.validate();
    ParameterCensus c;
    c.entries.push_back({"ppr", 0, 0});
    c.entries.push_back({"ncm", 0, 0});
    c.entries.push_back({"repository", 0, repo.stored_values()});
    c.entries.push_back({"encoder", 0, encoder.frozen_parameters()});
    c.entries.push_back({"tsa.proj_v", static_cast<std::size_t>(alignment.proj_v.size()), 0});
    c.entries.push_back({"tsa.proj_t", static_cast<std::size_t>(alignment.proj_t.size()), 0});
    return c;
}

std::string census_csv(const ParameterCensus& census) {
    std::string out = "component,trainable,frozen\n";
    for (const auto& e : census.entries) out += fmt::format("{},{},{}\n", e.component, e.trainable, e.frozen);
    return out;
}

}  // namespace fovea

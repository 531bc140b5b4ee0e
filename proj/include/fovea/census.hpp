#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fovea/enhance.hpp"
#include "fovea/prototypes.hpp"
#include "fovea/toyenc.hpp"
#include "fovea/tsa.hpp"

namespace fovea {

struct CensusEntry {
    std::string component;
    std::size_t trainable = 0;
    std::size_t frozen = 0;  // stored values that never receive gradients
};

struct ParameterCensus {
    std::vector<CensusEntry> entries;

    std::size_t trainable() const;
    const CensusEntry& at(const std::string& component) const;
};

/// Parameter counts for every component that takes part in a run. Enhancers are stateless; the
/// repository and encoder hold only frozen values; the alignment projections are the trainable part.
ParameterCensus parameter_census(const EnhancementConfig& config, const PrototypeRepository& repo,
                                 const ToyEncoder& encoder, const AlignmentState& alignment);

/// CSV `component,trainable,frozen`.
std::string census_csv(const ParameterCensus& census);

}  // namespace fovea

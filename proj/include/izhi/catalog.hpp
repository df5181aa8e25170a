#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "izhi/types.hpp"

namespace izhi::catalog {

// Closed set of recognized firing patterns.
enum class PatternId {
    TonicSpiking,
    PhasicSpiking,
    TonicBursting,
    PhasicBursting,
    MixedMode,
    SpikeFrequencyAdaptation,
    Class1Excitable,
    Class2Excitable,
    SpikeLatency,
    SubthresholdOscillation,
    Resonator,
    Integrator,
    ReboundSpike,
    ReboundBurst,
    ThresholdVariability,
    Bistability,
    Dap,
    Accommodation,
    InhibitionInducedSpiking,
    InhibitionInducedBursting,
};

inline constexpr std::size_t kPatternCount = 20;
std::array<PatternId, kPatternCount> all_patterns();

// Stable serialization names ("tonic_spiking", "dap", ...).
std::string_view pattern_name(PatternId id);
std::optional<PatternId> pattern_from_name(std::string_view name);

enum class Region { BLA, HIP };
std::string_view region_name(Region r);
std::optional<Region> region_from_name(std::string_view name);

struct PatternSpec {
    PatternId id = PatternId::TonicSpiking;
    std::optional<NeuronParams> original;   // reference quadruple, 8 patterns
    std::optional<NeuronParams> optimized;  // improved quadruple, same 8
    StimulusProtocol protocol;              // eliciting stimulus
    std::string descriptor;                 // short text of the expected response
};

struct RegionProfile {
    Region region = Region::BLA;
    std::vector<PatternId> possible;
};

class Catalog {
public:
    // Built-in catalog document (the same bytes as data/catalog.json).
    static const Catalog& builtin();

    static Catalog from_json_text(const std::string& text);
    static Catalog from_json_file(const std::string& path);
    std::string to_json_text() const;

    std::optional<NeuronParams> canonical_params(PatternId id) const;
    std::optional<NeuronParams> optimized_params(PatternId id) const;
    const StimulusProtocol& protocol_for(PatternId id) const;
    const PatternSpec& spec_for(PatternId id) const;

    bool region_allows(Region region, PatternId id) const;
    const RegionProfile& region_profile(Region region) const;

    const std::map<PatternId, PatternSpec>& patterns() const { return patterns_; }

private:
    std::map<PatternId, PatternSpec> patterns_;
    std::vector<RegionProfile> regions_;
};

// Raw text of the embedded catalog document.
std::string_view builtin_catalog_json();

}  // namespace izhi::catalog

#include "izhi/catalog.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace izhi::catalog {

using nlohmann::ordered_json;

namespace {

struct NameEntry {
    PatternId id;
    std::string_view name;
};

constexpr NameEntry kNames[kPatternCount] = {
    {PatternId::TonicSpiking, "tonic_spiking"},
    {PatternId::PhasicSpiking, "phasic_spiking"},
    {PatternId::TonicBursting, "tonic_bursting"},
    {PatternId::PhasicBursting, "phasic_bursting"},
    {PatternId::MixedMode, "mixed_mode"},
    {PatternId::SpikeFrequencyAdaptation, "spike_frequency_adaptation"},
    {PatternId::Class1Excitable, "class_1_excitable"},
    {PatternId::Class2Excitable, "class_2_excitable"},
    {PatternId::SpikeLatency, "spike_latency"},
    {PatternId::SubthresholdOscillation, "subthreshold_oscillation"},
    {PatternId::Resonator, "resonator"},
    {PatternId::Integrator, "integrator"},
    {PatternId::ReboundSpike, "rebound_spike"},
    {PatternId::ReboundBurst, "rebound_burst"},
    {PatternId::ThresholdVariability, "threshold_variability"},
    {PatternId::Bistability, "bistability"},
    {PatternId::Dap, "dap"},
    {PatternId::Accommodation, "accommodation"},
    {PatternId::InhibitionInducedSpiking, "inhibition_induced_spiking"},
    {PatternId::InhibitionInducedBursting, "inhibition_induced_bursting"},
};

NeuronParams params_from_json(const ordered_json& j) {
    NeuronParams p;
    p.a = j.at("a").get<double>();
    p.b = j.at("b").get<double>();
    p.c = j.at("c").get<double>();
    p.d = j.at("d").get<double>();
    return p;
}

ordered_json params_to_json(const NeuronParams& p) {
    return ordered_json{{"a", p.a}, {"b", p.b}, {"c", p.c}, {"d", p.d}};
}

StimulusProtocol protocol_from_json(const ordered_json& j) {
    StimulusProtocol p;
    p.duration_ms = j.at("duration_ms").get<double>();
    for (const auto& seg : j.at("segments")) {
        if (!seg.is_array() || seg.size() != 4)
            throw ValidationError("protocol segment must be [t_start, t_end, i_start, i_end]");
        p.segments.push_back({seg[0].get<double>(), seg[1].get<double>(), seg[2].get<double>(),
                              seg[3].get<double>()});
    }
    p.validate();
    return p;
}

ordered_json protocol_to_json(const StimulusProtocol& p) {
    ordered_json segs = ordered_json::array();
    for (const auto& s : p.segments)
        segs.push_back({s.t_start_ms, s.t_end_ms, s.i_start, s.i_end});
    return ordered_json{{"duration_ms", p.duration_ms}, {"segments", std::move(segs)}};
}

}  // namespace

std::array<PatternId, kPatternCount> all_patterns() {
    std::array<PatternId, kPatternCount> out{};
    for (std::size_t i = 0; i < kPatternCount; ++i) out[i] = kNames[i].id;
    return out;
}

std::string_view pattern_name(PatternId id) {
    for (const auto& e : kNames)
        if (e.id == id) return e.name;
    throw ValidationError("unknown pattern id");
}

std::optional<PatternId> pattern_from_name(std::string_view name) {
    for (const auto& e : kNames)
        if (e.name == name) return e.id;
    return std::nullopt;
}

std::string_view region_name(Region r) {
    return r == Region::BLA ? "BLA" : "HIP";
}

std::optional<Region> region_from_name(std::string_view name) {
    if (name == "BLA" || name == "bla") return Region::BLA;
    if (name == "HIP" || name == "hip") return Region::HIP;
    return std::nullopt;
}

const Catalog& Catalog::builtin() {
    static const Catalog instance = Catalog::from_json_text(std::string(builtin_catalog_json()));
    return instance;
}

Catalog Catalog::from_json_text(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("catalog JSON parse error: ") + e.what());
    }

    Catalog cat;
    for (const auto& [key, val] : doc.at("patterns").items()) {
        auto id = pattern_from_name(key);
        if (!id) throw ValidationError("catalog names unknown pattern '" + key + "'");
        PatternSpec spec;
        spec.id = *id;
        if (val.contains("original")) spec.original = params_from_json(val.at("original"));
        if (val.contains("optimized")) spec.optimized = params_from_json(val.at("optimized"));
        spec.protocol = protocol_from_json(val.at("protocol"));
        spec.descriptor = val.value("descriptor", "");
        cat.patterns_.emplace(*id, std::move(spec));
    }
    for (PatternId id : all_patterns())
        if (!cat.patterns_.count(id))
            throw ValidationError("catalog is missing pattern '" +
                                  std::string(pattern_name(id)) + "'");

    for (const auto& [key, val] : doc.at("regions").items()) {
        auto region = region_from_name(key);
        if (!region) throw ValidationError("catalog names unknown region '" + key + "'");
        RegionProfile profile;
        profile.region = *region;
        for (const auto& name : val) {
            auto id = pattern_from_name(name.get<std::string>());
            if (!id)
                throw ValidationError("region '" + key + "' lists unknown pattern");
            profile.possible.push_back(*id);
        }
        cat.regions_.push_back(std::move(profile));
    }
    return cat;
}

Catalog Catalog::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open catalog file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string Catalog::to_json_text() const {
    ordered_json patterns = ordered_json::object();
    for (const auto& [id, spec] : patterns_) {
        ordered_json entry = ordered_json::object();
        if (spec.original) entry["original"] = params_to_json(*spec.original);
        if (spec.optimized) entry["optimized"] = params_to_json(*spec.optimized);
        entry["protocol"] = protocol_to_json(spec.protocol);
        entry["descriptor"] = spec.descriptor;
        patterns[std::string(pattern_name(id))] = std::move(entry);
    }
    ordered_json regions = ordered_json::object();
    for (const auto& profile : regions_) {
        ordered_json names = ordered_json::array();
        for (PatternId id : profile.possible) names.push_back(std::string(pattern_name(id)));
        regions[std::string(region_name(profile.region))] = std::move(names);
    }
    ordered_json doc{{"schema_version", 1}, {"patterns", std::move(patterns)},
                     {"regions", std::move(regions)}};
    return doc.dump(2) + "\n";
}

std::optional<NeuronParams> Catalog::canonical_params(PatternId id) const {
    return spec_for(id).original;
}

std::optional<NeuronParams> Catalog::optimized_params(PatternId id) const {
    return spec_for(id).optimized;
}

const StimulusProtocol& Catalog::protocol_for(PatternId id) const {
    return spec_for(id).protocol;
}

const PatternSpec& Catalog::spec_for(PatternId id) const {
    auto it = patterns_.find(id);
    if (it == patterns_.end())
        throw ValidationError("catalog has no entry for pattern '" +
                              std::string(pattern_name(id)) + "'");
    return it->second;
}

bool Catalog::region_allows(Region region, PatternId id) const {
    const RegionProfile& profile = region_profile(region);
    for (PatternId p : profile.possible)
        if (p == id) return true;
    return false;
}

const RegionProfile& Catalog::region_profile(Region region) const {
    for (const auto& profile : regions_)
        if (profile.region == region) return profile;
    throw ValidationError("catalog has no profile for region '" +
                          std::string(region_name(region)) + "'");
}

}  // namespace izhi::catalog

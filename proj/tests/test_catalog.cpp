#include <doctest.h>

#include "izhi/catalog.hpp"

using namespace izhi;
using namespace izhi::catalog;

TEST_CASE("pattern names round-trip") {
    for (PatternId id : all_patterns()) {
        const auto name = pattern_name(id);
        const auto back = pattern_from_name(name);
        REQUIRE(back.has_value());
        CHECK(*back == id);
    }
    CHECK_FALSE(pattern_from_name("nonsense").has_value());
}

TEST_CASE("canonical quadruples match the reference table") {
    const auto& cat = Catalog::builtin();

    const auto tonic = cat.canonical_params(PatternId::TonicSpiking);
    REQUIRE(tonic.has_value());
    CHECK(tonic->a == 0.02);
    CHECK(tonic->b == 0.2);
    CHECK(tonic->c == -65.0);
    CHECK(tonic->d == 6.0);

    const auto iis = cat.canonical_params(PatternId::InhibitionInducedSpiking);
    REQUIRE(iis.has_value());
    CHECK(iis->a == -0.02);
    CHECK(iis->b == -1.0);
    CHECK(iis->c == -60.0);
    CHECK(iis->d == 8.0);

    CHECK_FALSE(cat.canonical_params(PatternId::Resonator).has_value());
}

TEST_CASE("optimized quadruples match the reference table") {
    const auto& cat = Catalog::builtin();

    const auto tonic = cat.optimized_params(PatternId::TonicSpiking);
    REQUIRE(tonic.has_value());
    CHECK(tonic->a == 0.01877);
    CHECK(tonic->b == 0.26801);
    CHECK(tonic->c == -66.3083);
    CHECK(tonic->d == 12.46620);

    const auto dap = cat.optimized_params(PatternId::Dap);
    REQUIRE(dap.has_value());
    CHECK(dap->a == 1.738625);
    CHECK(dap->b == 0.165259);
    CHECK(dap->c == -67.823);
    CHECK(dap->d == -4.4429);

    const auto tv = cat.optimized_params(PatternId::ThresholdVariability);
    REQUIRE(tv.has_value());
    CHECK(tv->a == 0.067733);
    CHECK(tv->b == 0.251266);
    CHECK(tv->c == -62.2565);
    CHECK(tv->d == 13.03464);
}

TEST_CASE("region possibility matrix") {
    const auto& cat = Catalog::builtin();
    CHECK(cat.region_allows(Region::BLA, PatternId::TonicSpiking));
    CHECK_FALSE(cat.region_allows(Region::HIP, PatternId::PhasicSpiking));
    CHECK(cat.region_allows(Region::HIP, PatternId::MixedMode));

    CHECK(cat.region_profile(Region::BLA).possible.size() == 7);
    CHECK(cat.region_profile(Region::HIP).possible.size() == 3);

    // every listed pattern is a member of the closed enumeration
    for (Region r : {Region::BLA, Region::HIP})
        for (PatternId id : cat.region_profile(r).possible)
            CHECK_NOTHROW((void)pattern_name(id));
}

TEST_CASE("optimized d exceeds original d on every covered pattern") {
    const auto& cat = Catalog::builtin();
    int covered = 0;
    for (PatternId id : all_patterns()) {
        const auto& spec = cat.spec_for(id);
        if (!spec.original) continue;
        REQUIRE(spec.optimized.has_value());
        CHECK(spec.optimized->d > spec.original->d);
        ++covered;
    }
    CHECK(covered == 8);
}

TEST_CASE("optimized reset voltages stay within the catalog envelope") {
    const auto& cat = Catalog::builtin();
    for (PatternId id : all_patterns()) {
        const auto opt = cat.optimized_params(id);
        if (!opt) continue;
        CHECK(opt->c >= -68.0);
        CHECK(opt->c <= -56.0);
    }
}

TEST_CASE("every pattern ships a valid protocol and descriptor") {
    const auto& cat = Catalog::builtin();
    for (PatternId id : all_patterns()) {
        const auto& spec = cat.spec_for(id);
        CHECK_NOTHROW(spec.protocol.validate());
        CHECK_FALSE(spec.descriptor.empty());
    }
}

TEST_CASE("catalog JSON round-trip is numerically exact") {
    const auto& cat = Catalog::builtin();
    const auto reloaded = Catalog::from_json_text(cat.to_json_text());
    for (PatternId id : all_patterns()) {
        const auto& a = cat.spec_for(id);
        const auto& b = reloaded.spec_for(id);
        CHECK(a.original == b.original);
        CHECK(a.optimized == b.optimized);
        CHECK(a.descriptor == b.descriptor);
        REQUIRE(a.protocol.segments.size() == b.protocol.segments.size());
        CHECK(a.protocol.duration_ms == b.protocol.duration_ms);
        for (std::size_t i = 0; i < a.protocol.segments.size(); ++i) {
            CHECK(a.protocol.segments[i].t_start_ms == b.protocol.segments[i].t_start_ms);
            CHECK(a.protocol.segments[i].t_end_ms == b.protocol.segments[i].t_end_ms);
            CHECK(a.protocol.segments[i].i_start == b.protocol.segments[i].i_start);
            CHECK(a.protocol.segments[i].i_end == b.protocol.segments[i].i_end);
        }
    }
    for (Region r : {Region::BLA, Region::HIP})
        CHECK(cat.region_profile(r).possible == reloaded.region_profile(r).possible);
}

TEST_CASE("malformed catalog documents are rejected") {
    CHECK_THROWS_AS((void)Catalog::from_json_text("{"), ValidationError);
    CHECK_THROWS_AS((void)Catalog::from_json_text(R"({"patterns": {}, "regions": {}})"),
                    ValidationError);  // missing patterns
}

#pragma once

#include <string>
#include <vector>

#include "izhi/catalog.hpp"
#include "izhi/types.hpp"

namespace izhi::compare {

// Spike pairing between a target train and a model train.
struct SpikeDeltas {
    std::vector<double> deltas_ms;  // model minus target, matched pairs
    std::size_t unmatched_target = 0;
    std::size_t unmatched_model = 0;

    double max_abs_delta() const;
};

// Aligned target / original-model / improved-model triple with pairwise MSE,
// the data behind a three-curve comparison plot.
struct CompareReport {
    catalog::PatternId pattern = catalog::PatternId::TonicSpiking;
    VoltageTrace target;
    VoltageTrace original;
    VoltageTrace improved;
    double mse_target_original = 0.0;
    double mse_target_improved = 0.0;
    SpikeDeltas deltas_original;
    SpikeDeltas deltas_improved;
};

// Simulates the catalog's original and optimized quadruples for the pattern
// under its protocol and aligns all three traces onto the coarsest grid.
CompareReport compare_report(const VoltageTrace& target, catalog::PatternId pattern,
                             const catalog::Catalog& cat = catalog::Catalog::builtin(),
                             double spike_match_window_ms = 5.0);

std::string report_to_csv(const CompareReport& report);
std::string report_to_json(const CompareReport& report);

// Static line plot of the three traces: target solid red, original dashed
// black, improved dash-dot blue.
std::string report_to_svg(const CompareReport& report);

}  // namespace izhi::compare

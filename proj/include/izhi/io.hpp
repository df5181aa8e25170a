#pragma once

#include <map>
#include <string>
#include <vector>

#include "izhi/ga.hpp"
#include "izhi/metrics.hpp"
#include "izhi/sort.hpp"
#include "izhi/types.hpp"

namespace izhi::io {

// Write-then-rename so failures never leave partial files behind.
void atomic_write(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

using Provenance = std::map<std::string, std::string>;

// CSV: header "time_ms,v_mV", one row per sample.
std::string trace_to_csv(const VoltageTrace& trace);
VoltageTrace trace_from_csv(const std::string& text);

// JSON envelope carrying dt, duration and provenance metadata.
std::string trace_to_json(const VoltageTrace& trace, const Provenance& provenance = {});
VoltageTrace trace_from_json(const std::string& text);

// CSV: header "spike_time_ms".
std::string train_to_csv(const SpikeTrain& train);
SpikeTrain train_from_csv(const std::string& text);
std::string train_to_json(const SpikeTrain& train, const Provenance& provenance = {});
SpikeTrain train_from_json(const std::string& text);

// CSV: header "bin_start_ms,count".
std::string histogram_to_csv(const metrics::Histogram& histogram);
std::string histogram_to_json(const metrics::Histogram& histogram);

std::string features_to_json(const metrics::PatternFeatures& features);

// GA config file (all fields optional; missing ones keep defaults).
ga::GaConfig ga_config_from_json(const std::string& text);
std::string ga_config_to_json(const ga::GaConfig& config);

std::string fit_result_to_json(const ga::FitResult& result);
// CSV: header "generation,best_mse,mean_mse".
std::string fit_history_to_csv(const ga::FitResult& result);

// Classifier thresholds from a config file section.
metrics::ClassifierConfig classifier_config_from_json(const std::string& text);

// Trace loader that accepts .csv or .json by extension.
VoltageTrace load_trace(const std::string& path);

// Recording I/O: flat little-endian binary (.f32 float32 / .i16 int16 with a
// JSON sidecar "<file>.json") or single-column CSV.
void save_recording(const std::string& path, const sorting::RawRecording& rec);
sorting::RawRecording load_recording(const std::string& path);

std::string sorted_units_to_json(const sorting::SortResult& result);
std::string unit_train_to_csv(const sorting::SortedUnit& unit);

// Number formatting used by every writer: shortest round-trip decimal.
std::string format_double(double value);

}  // namespace izhi::io

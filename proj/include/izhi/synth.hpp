#pragma once

#include <cstdint>
#include <vector>

#include "izhi/sort.hpp"
#include "izhi/types.hpp"

namespace izhi::synth {

// Generator settings for a ground-truthed extracellular recording: template
// spikes on refractory Poisson trains over band-limited Gaussian noise.
struct RecordingConfig {
    double sample_rate_hz = 50000.0;
    double duration_s = 60.0;
    int unit_count = 3;
    double firing_rate_hz = 8.0;
    double min_isi_ms = 2.5;        // per-unit refractory floor
    double cross_unit_gap_ms = 2.0; // drop spikes of different units closer than this
    double noise_sigma = 1.0;       // band-limited noise sigma, signal units
    double snr = 5.0;               // template trough depth over noise sigma
    double hum_amplitude = 0.0;     // optional mains hum (outside the analysis band)
    double hum_hz = 50.0;
    double band_low_hz = 300.0;     // noise shaping band
    double band_high_hz = 10000.0;
    std::uint64_t seed = 0;
    std::string region = "BLA";
};

struct GroundTruthRecording {
    sorting::RawRecording recording;
    std::vector<SpikeTrain> unit_trains;          // true trough times per unit
    std::vector<std::vector<double>> templates;   // the injected shapes
};

GroundTruthRecording make_recording(const RecordingConfig& config);

// Homogeneous Poisson train with an optional refractory floor.
SpikeTrain poisson_train(double rate_hz, double duration_ms, std::uint64_t seed,
                         double min_isi_ms = 0.0);

// Surrogate fit target: a simulated trace with additive Gaussian noise.
VoltageTrace noisy_trace(const VoltageTrace& clean, double noise_sigma_mv, std::uint64_t seed);

// Greedy matching of detected event times against ground truth within a
// tolerance window; used by recall/precision scoring.
struct MatchStats {
    std::size_t matched = 0;
    std::size_t truth_count = 0;
    std::size_t detected_count = 0;

    double recall() const {
        return truth_count == 0 ? 1.0 : static_cast<double>(matched) / truth_count;
    }
    double precision() const {
        return detected_count == 0 ? 1.0 : static_cast<double>(matched) / detected_count;
    }
};

MatchStats match_events(const std::vector<double>& truth_ms, const std::vector<double>& detected_ms,
                        double tolerance_ms = 0.5);

}  // namespace izhi::synth

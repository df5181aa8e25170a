#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "izhi/metrics.hpp"
#include "izhi/types.hpp"

namespace izhi::sorting {

struct RawRecording {
    double sample_rate_hz = 50000.0;
    std::vector<double> samples;
    std::string region;  // channel metadata
    std::string units = "uV";

    double duration_ms() const {
        return 1000.0 * static_cast<double>(samples.size()) / sample_rate_hz;
    }
    void validate() const;
};

// Zero-phase band-limited copy of the recording: a Butterworth bandpass
// (4th-order characteristic, biquad cascade) run forward and backward.
RawRecording bandpass(const RawRecording& rec, double low_hz = 300.0, double high_hz = 10000.0);

struct ThresholdSpec {
    enum class Mode { MadSigma, Absolute };
    Mode mode = Mode::MadSigma;
    double k = 4.5;            // multiplier on the MAD-based sigma estimate
    double absolute = 0.0;     // manual threshold level (signal units)
    bool negative_going = true;
    double dead_time_ms = 1.0;  // troughs closer than this merge into one event
};

struct DetectionResult {
    std::vector<double> event_times_ms;   // trough time per accepted excursion
    std::vector<std::size_t> event_samples;
    double threshold = 0.0;               // resolved absolute threshold magnitude
    double sigma = 0.0;                   // MAD-based noise estimate, median(|x|)/0.6745
};

DetectionResult detect(const RawRecording& rec, const ThresholdSpec& spec = {});

struct Waveform {
    std::vector<double> snippet;
    std::size_t alignment_index = 0;  // trough position inside the snippet
    double event_time_ms = 0.0;
    std::size_t event_sample = 0;
};

struct WaveformWindow {
    double pre_ms = 0.4;
    double post_ms = 1.0;
};

struct WaveformSet {
    std::vector<Waveform> waveforms;
    std::size_t skipped = 0;  // events too close to the recording edge
    double sample_rate_hz = 50000.0;
};

WaveformSet extract_waveforms(const RawRecording& rec, const DetectionResult& events,
                              const WaveformWindow& window = {});

struct FeatureVector {
    double pc1 = 0.0;
    double pc2 = 0.0;
    double pc3 = 0.0;
    double peak = 0.0;    // max snippet sample
    double valley = 0.0;  // min snippet sample

    std::array<double, 5> as_array() const { return {pc1, pc2, pc3, peak, valley}; }
};

struct PcaModel {
    std::vector<double> mean;                     // per-sample mean waveform
    std::vector<std::vector<double>> components;  // orthonormal rows, variance-ordered
    std::vector<double> explained_variance;
};

struct PcaResult {
    std::vector<FeatureVector> features;
    PcaModel model;
};

// Principal components of the mean-centered waveform matrix plus peak/valley
// amplitudes. Requires at least 4 waveforms.
PcaResult pca_features(const WaveformSet& waveforms);

struct ClusterResult {
    std::vector<int> assignments;
    std::vector<std::array<double, 5>> centroids;
    double inertia = 0.0;
};

// k-means over the 5-d feature vectors: k-means++ seeding, 20 restarts, best
// inertia kept. Deterministic for a fixed seed.
ClusterResult cluster(const std::vector<FeatureVector>& features, int k = 3,
                      std::uint64_t seed = 0, int restarts = 20);

struct SortedUnit {
    int unit_id = 0;
    SpikeTrain train;
    std::vector<double> mean_waveform;
    double isi_violation_rate = 0.0;  // fraction of ISIs below the refractory period
    bool valid = true;                // violation rate within tolerance
    std::size_t spike_count = 0;
};

// Per-cluster spike trains with ISI screening. Units whose violation rate
// exceeds max_violation_rate are flagged invalid; empty clusters are dropped.
std::vector<SortedUnit> validate_units(const std::vector<int>& assignments,
                                       const WaveformSet& waveforms, double refractory_ms = 1.0,
                                       double recording_duration_ms = 0.0,
                                       double max_violation_rate = 0.01);

struct UnitPairCorrelogram {
    int unit_a = 0;
    int unit_b = 0;
    metrics::Histogram histogram;
};

// Cross-correlograms between every unit pair, for drift/duplication review.
std::vector<UnitPairCorrelogram> unit_cross_correlograms(const std::vector<SortedUnit>& units,
                                                         double bin_width_ms = 1.0,
                                                         double window_ms = 50.0);

struct SortConfig {
    double band_low_hz = 300.0;
    double band_high_hz = 10000.0;
    ThresholdSpec threshold;
    WaveformWindow window;
    int cluster_count = 3;
    double refractory_ms = 1.0;
    std::uint64_t seed = 0;
};

struct SortResult {
    std::vector<SortedUnit> units;
    DetectionResult detection;
    std::size_t skipped_waveforms = 0;
    std::vector<UnitPairCorrelogram> cross_correlograms;
};

// The full chain: bandpass, detect, extract, PCA, cluster, validate.
SortResult sort_recording(const RawRecording& rec, const SortConfig& config = {});

}  // namespace izhi::sorting

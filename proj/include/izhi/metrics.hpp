#pragma once

#include <optional>
#include <string>
#include <vector>

#include "izhi/catalog.hpp"
#include "izhi/types.hpp"

namespace izhi::metrics {

struct Histogram {
    double bin_width_ms = 1.0;
    double start_ms = 0.0;
    std::vector<double> counts;

    double total() const;
    // Inclusive-start bins: bin i covers [start + i*w, start + (i+1)*w).
    std::optional<std::size_t> bin_index(double value) const;
};

// Linear interpolation of a trace onto a new uniform grid covering the
// overlapping time span. Errors when the overlap is empty.
VoltageTrace resample(const VoltageTrace& trace, double target_dt_ms);

// Mean squared sample difference (mV^2). Traces must share dt and length.
double trace_mse(const VoltageTrace& a, const VoltageTrace& b);

// One spike per maximal above-threshold excursion, timed at excursion onset.
SpikeTrain spikes_from_trace(const VoltageTrace& trace, double threshold_mv);

// Histogram of successive inter-spike intervals. Total mass = max(0, n-1).
Histogram isi_histogram(const SpikeTrain& train, double bin_width_ms);

// Counts of lags (t_b - t_a) within +/- window. When a and b are the same
// train the zero-lag self pairs are excluded (auto-correlogram).
Histogram correlogram(const SpikeTrain& a, const SpikeTrain& b, double bin_width_ms,
                      double window_ms);

// Spike counts per consecutive time bin over [0, duration].
Histogram firing_rate_histogram(const SpikeTrain& train, double bin_width_ms);

// Thresholds of the feature extractor and rule cascade. All configurable;
// the defaults are what the catalog protocols were tuned against.
struct ClassifierConfig {
    double transient_exclusion_ms = 5.0;   // ignore this much of the trace start
    double tonic_cv_max = 0.2;             // ISI CV bound for tonic spiking
    int tonic_min_spikes = 5;
    double burst_isi_ms = 10.0;            // ISI below this counts as in-burst
    double dap_bump_min_mv = 2.0;          // depolarizing bump height after a spike
    double dap_window_ms = 10.0;           // window after the spike to look for it
    double pulse_max_ms = 10.0;            // stimulus phases at most this long are pulses
    double pulse_group_gap_ms = 20.0;      // pulses closer than this form a group
    double response_window_ms = 20.0;      // spike within this of a pulse counts as response
    double rebound_window_ms = 50.0;       // spike within this of inhibition release
    double mixed_tail_cv_max = 0.3;        // regularity bound for the post-burst tail
    double phase_release_slack_ms = 10.0;  // spikes completing this soon after a phase count as inside
    double amplitude_eps = 1e-9;           // deviation from baseline below this is noise
};

// Response summary of one (train, trace, protocol) triple. The first block
// mirrors the generic spike statistics; the rest captures how the response
// lines up with the stimulus structure so the rule cascade can use it.
struct PatternFeatures {
    int spike_count = 0;
    double first_spike_latency_ms = -1.0;  // from the first stimulus change; -1 when no spike
    double mean_isi_ms = 0.0;
    double isi_cv = 0.0;
    double adaptation_index = 1.0;  // late ISI / early ISI
    double burst_fraction = 0.0;    // fraction of ISIs below burst_isi_ms
    bool rebound = false;           // first spike shortly after release of negative drive
    bool spikes_only_during_reduced_drive = false;

    int initial_burst_isis = 0;     // leading run of ISIs below burst_isi_ms
    double tail_isi_cv = 0.0;       // CV of the ISIs after that run
    int tail_spike_count = 0;
    double dap_bump_mv = 0.0;       // bump above the post-reset level after a lone spike
    bool sustained_drive_at_first_spike = false;

    bool has_pulse_group = false;   // protocol facts
    bool has_lone_pulse = false;
    bool has_post_inhibitory_pulse = false;
    bool has_reduced_drive_phase = false;
    bool responded_to_pulse_group = false;
    bool responded_to_lone_pulse = false;
    bool responded_to_post_inhibitory_pulse = false;
};

PatternFeatures extract_features(const SpikeTrain& train, const VoltageTrace& trace,
                                 const StimulusProtocol& protocol,
                                 const ClassifierConfig& config = {});

// Deterministic rule cascade over the extracted features. Returns one of the
// eight parameterized catalog patterns or nullopt (unclassified). Rules are
// checked in this order:
//   1. no spikes                                  -> unclassified
//   2. spikes confined to reduced-drive phases    -> inhibition_induced_spiking
//   3. pulse group fires, lone pulse does not     -> integrator
//   4. post-inhibitory pulse fires, lone does not -> threshold_variability
//   5. first spike follows inhibition release     -> rebound_spike
//   6. lone spike + depolarizing bump, no drive   -> dap
//   7. lone spike under sustained drive           -> phasic_spiking
//   8. leading burst then a regular tail          -> mixed_mode
//   9. many spikes, regular past the onset, under sustained drive
//                                                 -> tonic_spiking
// The tonic regularity test runs on the post-onset tail (at most one short
// leading interval is discounted as the onset transient); a genuine burst of
// two or more short leading intervals routes to mixed_mode instead.
std::optional<catalog::PatternId> classify(const PatternFeatures& features,
                                           const ClassifierConfig& config = {});

// simulate + extract_features + classify in one call.
std::optional<catalog::PatternId> classify_simulation(const NeuronParams& params,
                                                      const StimulusProtocol& protocol,
                                                      const SimConfig& sim,
                                                      const ClassifierConfig& config = {});

}  // namespace izhi::metrics

#include "izhi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "izhi/simulate.hpp"

namespace izhi::metrics {

namespace {

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double cv_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean_of(xs);
    if (mu == 0.0) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(xs.size())) / std::abs(mu);
}

}  // namespace

double Histogram::total() const {
    return std::accumulate(counts.begin(), counts.end(), 0.0);
}

std::optional<std::size_t> Histogram::bin_index(double value) const {
    if (counts.empty() || bin_width_ms <= 0.0) return std::nullopt;
    const double offset = (value - start_ms) / bin_width_ms;
    if (offset < 0.0) return std::nullopt;
    const auto idx = static_cast<std::size_t>(offset);
    if (idx >= counts.size()) return std::nullopt;
    return idx;
}

VoltageTrace resample(const VoltageTrace& trace, double target_dt_ms) {
    if (!(target_dt_ms > 0.0)) throw ValidationError("resample target dt must be positive");
    if (trace.samples_mv.empty()) throw ValidationError("cannot resample an empty trace");

    const double span = trace.end_time() - trace.t0_ms;
    const auto n_out = static_cast<std::size_t>(std::floor(span / target_dt_ms + 1e-9)) + 1;
    if (n_out == 0) throw ValidationError("resample produces empty overlap");

    VoltageTrace out;
    out.t0_ms = trace.t0_ms;
    out.dt_ms = target_dt_ms;
    out.samples_mv.reserve(n_out);
    const std::size_t last = trace.samples_mv.size() - 1;
    for (std::size_t i = 0; i < n_out; ++i) {
        const double pos = target_dt_ms * static_cast<double>(i) / trace.dt_ms;
        auto lo = static_cast<std::size_t>(std::floor(pos));
        if (lo >= last) {
            out.samples_mv.push_back(trace.samples_mv[last]);
            continue;
        }
        const double frac = pos - static_cast<double>(lo);
        if (frac == 0.0) {
            out.samples_mv.push_back(trace.samples_mv[lo]);
        } else {
            out.samples_mv.push_back(trace.samples_mv[lo] +
                                     frac * (trace.samples_mv[lo + 1] - trace.samples_mv[lo]));
        }
    }
    return out;
}

double trace_mse(const VoltageTrace& a, const VoltageTrace& b) {
    if (a.samples_mv.size() != b.samples_mv.size())
        throw ValidationError("trace_mse requires equal lengths");
    if (std::abs(a.dt_ms - b.dt_ms) > 1e-12 * std::max(a.dt_ms, b.dt_ms))
        throw ValidationError("trace_mse requires equal sample periods");
    if (a.samples_mv.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.samples_mv.size(); ++i) {
        const double diff = a.samples_mv[i] - b.samples_mv[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(a.samples_mv.size());
}

SpikeTrain spikes_from_trace(const VoltageTrace& trace, double threshold_mv) {
    SpikeTrain train;
    train.duration_ms = trace.end_time();
    bool above = false;
    for (std::size_t i = 0; i < trace.samples_mv.size(); ++i) {
        const bool now = trace.samples_mv[i] > threshold_mv;
        if (now && !above) train.times_ms.push_back(trace.time_at(i));
        above = now;
    }
    return train;
}

Histogram isi_histogram(const SpikeTrain& train, double bin_width_ms) {
    if (!(bin_width_ms > 0.0)) throw ValidationError("histogram bin width must be positive");
    Histogram h;
    h.bin_width_ms = bin_width_ms;
    h.start_ms = 0.0;
    const auto isis = train.intervals();
    if (isis.empty()) return h;
    const double max_isi = *std::max_element(isis.begin(), isis.end());
    const auto bins = static_cast<std::size_t>(std::floor(max_isi / bin_width_ms)) + 1;
    h.counts.assign(bins, 0.0);
    for (double isi : isis) {
        auto idx = static_cast<std::size_t>(isi / bin_width_ms);
        if (idx >= bins) idx = bins - 1;
        h.counts[idx] += 1.0;
    }
    return h;
}

Histogram correlogram(const SpikeTrain& a, const SpikeTrain& b, double bin_width_ms,
                      double window_ms) {
    if (!(bin_width_ms > 0.0)) throw ValidationError("correlogram bin width must be positive");
    if (!(window_ms > 0.0)) throw ValidationError("correlogram window must be positive");

    // Bins are centered on integer multiples of the width so that +lag and
    // -lag always land in mirror bins.
    const auto half_bins = static_cast<long>(std::floor(window_ms / bin_width_ms + 1e-9));
    Histogram h;
    h.bin_width_ms = bin_width_ms;
    h.start_ms = -(static_cast<double>(half_bins) + 0.5) * bin_width_ms;
    h.counts.assign(static_cast<std::size_t>(2 * half_bins + 1), 0.0);

    const bool auto_mode = (&a == &b) || a.times_ms == b.times_ms;
    for (std::size_t i = 0; i < a.times_ms.size(); ++i) {
        for (std::size_t j = 0; j < b.times_ms.size(); ++j) {
            if (auto_mode && i == j) continue;  // drop zero-lag self pairs
            const double lag = b.times_ms[j] - a.times_ms[i];
            if (std::abs(lag) > window_ms) continue;
            long idx = static_cast<long>(std::llround(lag / bin_width_ms));
            idx = std::clamp(idx, -half_bins, half_bins);
            h.counts[static_cast<std::size_t>(idx + half_bins)] += 1.0;
        }
    }
    return h;
}

Histogram firing_rate_histogram(const SpikeTrain& train, double bin_width_ms) {
    if (!(bin_width_ms > 0.0)) throw ValidationError("histogram bin width must be positive");
    Histogram h;
    h.bin_width_ms = bin_width_ms;
    h.start_ms = 0.0;
    const auto bins =
        static_cast<std::size_t>(std::ceil(std::max(train.duration_ms, bin_width_ms) /
                                           bin_width_ms - 1e-9));
    h.counts.assign(std::max<std::size_t>(bins, 1), 0.0);
    for (double t : train.times_ms) {
        auto idx = static_cast<std::size_t>(t / bin_width_ms);
        if (idx >= h.counts.size()) idx = h.counts.size() - 1;
        h.counts[idx] += 1.0;
    }
    return h;
}

namespace {

// A maximal stretch of the protocol whose amplitude deviates from baseline.
struct StimulusPhase {
    double t_on_ms = 0.0;
    double t_off_ms = 0.0;
    bool positive = false;  // sign of the deviation
    bool pulse = false;     // short enough to count as a pulse

    double duration() const { return t_off_ms - t_on_ms; }
};

std::vector<StimulusPhase> analyze_phases(const StimulusProtocol& protocol,
                                          const ClassifierConfig& cfg) {
    std::vector<StimulusPhase> phases;
    if (protocol.segments.empty()) return phases;
    const double baseline = protocol.segments.front().i_start;

    for (const auto& seg : protocol.segments) {
        const double dev_start = seg.i_start - baseline;
        const double dev_end = seg.i_end - baseline;
        const double dev = std::abs(dev_start) >= std::abs(dev_end) ? dev_start : dev_end;
        if (std::abs(dev) <= cfg.amplitude_eps) continue;
        const bool positive = dev > 0.0;
        if (!phases.empty() && phases.back().positive == positive &&
            std::abs(phases.back().t_off_ms - seg.t_start_ms) <= cfg.amplitude_eps) {
            phases.back().t_off_ms = seg.t_end_ms;  // merge contiguous same-sign segments
        } else {
            phases.push_back({seg.t_start_ms, seg.t_end_ms, positive, false});
        }
    }
    for (auto& ph : phases) ph.pulse = ph.duration() <= cfg.pulse_max_ms;
    return phases;
}

bool any_spike_in(const std::vector<double>& spikes, double from_ms, double to_ms) {
    for (double t : spikes)
        if (t >= from_ms && t <= to_ms) return true;
    return false;
}

}  // namespace

PatternFeatures extract_features(const SpikeTrain& train, const VoltageTrace& trace,
                                 const StimulusProtocol& protocol,
                                 const ClassifierConfig& cfg) {
    PatternFeatures f;

    // Spikes inside the initial transient window do not count.
    std::vector<double> spikes;
    for (double t : train.times_ms)
        if (t >= cfg.transient_exclusion_ms) spikes.push_back(t);
    f.spike_count = static_cast<int>(spikes.size());

    const auto phases = analyze_phases(protocol, cfg);
    const double baseline = protocol.segments.empty() ? 0.0 : protocol.segments.front().i_start;

    double first_change = 0.0;
    for (const auto& seg : protocol.segments) {
        if (std::abs(seg.i_start - baseline) > cfg.amplitude_eps ||
            std::abs(seg.i_end - baseline) > cfg.amplitude_eps) {
            first_change = seg.t_start_ms;
            break;
        }
    }

    if (!spikes.empty()) {
        f.first_spike_latency_ms = spikes.front() - first_change;

        std::vector<double> isis;
        for (std::size_t i = 1; i < spikes.size(); ++i) isis.push_back(spikes[i] - spikes[i - 1]);
        if (!isis.empty()) {
            f.mean_isi_ms = mean_of(isis);
            f.isi_cv = cv_of(isis);
            int sub = 0;
            for (double isi : isis)
                if (isi < cfg.burst_isi_ms) ++sub;
            f.burst_fraction = static_cast<double>(sub) / static_cast<double>(isis.size());

            // late-vs-early rate change: mean of last quarter over first quarter
            const std::size_t q = std::max<std::size_t>(1, isis.size() / 4);
            const std::vector<double> head(isis.begin(), isis.begin() + static_cast<long>(q));
            const std::vector<double> tail(isis.end() - static_cast<long>(q), isis.end());
            if (mean_of(head) > 0.0) f.adaptation_index = mean_of(tail) / mean_of(head);

            std::size_t run = 0;
            while (run < isis.size() && isis[run] < cfg.burst_isi_ms) ++run;
            f.initial_burst_isis = static_cast<int>(run);
            std::vector<double> tail_isis(isis.begin() + static_cast<long>(run), isis.end());
            f.tail_isi_cv = cv_of(tail_isis);
            f.tail_spike_count = static_cast<int>(tail_isis.size());
        }
    }

    // Stimulus-structure facts and the response to each kind of pulse.
    std::vector<const StimulusPhase*> pos_pulses;
    for (const auto& ph : phases) {
        if (!ph.positive && !ph.pulse) f.has_reduced_drive_phase = true;
        if (ph.positive && ph.pulse) pos_pulses.push_back(&ph);
    }

    for (std::size_t i = 0; i < pos_pulses.size(); ++i) {
        const StimulusPhase& p = *pos_pulses[i];
        const bool grouped_prev =
            i > 0 && p.t_on_ms - pos_pulses[i - 1]->t_off_ms <= cfg.pulse_group_gap_ms;
        const bool grouped_next = i + 1 < pos_pulses.size() &&
                                  pos_pulses[i + 1]->t_on_ms - p.t_off_ms <= cfg.pulse_group_gap_ms;

        bool post_inhibitory = false;
        for (const auto& ph : phases)
            if (!ph.positive && ph.t_off_ms <= p.t_on_ms + cfg.amplitude_eps &&
                p.t_on_ms - ph.t_off_ms <= cfg.pulse_group_gap_ms)
                post_inhibitory = true;

        const bool responded =
            any_spike_in(spikes, p.t_on_ms, p.t_off_ms + cfg.response_window_ms);
        if (grouped_prev || grouped_next) {
            f.has_pulse_group = true;
            // credit the group only once the whole group has been delivered
            if (!grouped_next && responded) f.responded_to_pulse_group = true;
        } else if (post_inhibitory) {
            f.has_post_inhibitory_pulse = true;
            if (responded) f.responded_to_post_inhibitory_pulse = true;
        } else {
            f.has_lone_pulse = true;
            if (responded) f.responded_to_lone_pulse = true;
        }
    }

    // Rebound: the first spike lands shortly after negative drive releases,
    // with no positive drive at the spike itself.
    if (!spikes.empty()) {
        const double t_first = spikes.front();
        for (const auto& ph : phases) {
            if (ph.positive) continue;
            if (t_first > ph.t_off_ms && t_first <= ph.t_off_ms + cfg.rebound_window_ms &&
                protocol.current_at(t_first) <= baseline + cfg.amplitude_eps) {
                f.rebound = true;
                break;
            }
        }
    }

    if (f.has_reduced_drive_phase && !spikes.empty()) {
        bool all_inside = true;
        for (double t : spikes) {
            bool inside = false;
            for (const auto& ph : phases)
                if (!ph.positive && !ph.pulse && t >= ph.t_on_ms &&
                    t <= ph.t_off_ms + cfg.phase_release_slack_ms)
                    inside = true;  // slack lets an in-flight spike finish after release
            if (!inside) {
                all_inside = false;
                break;
            }
        }
        f.spikes_only_during_reduced_drive = all_inside;
    }

    // Sustained drive at the first spike: a long positive phase covers it, or
    // the protocol is a bare positive constant.
    if (!spikes.empty()) {
        const double t_first = spikes.front();
        for (const auto& ph : phases)
            if (ph.positive && !ph.pulse && t_first >= ph.t_on_ms && t_first <= ph.t_off_ms)
                f.sustained_drive_at_first_spike = true;
        if (phases.empty() && baseline > cfg.amplitude_eps)
            f.sustained_drive_at_first_spike = true;
    }

    // Depolarizing after-potential: with a lone spike, measure how far v
    // climbs above the post-reset level inside the DAP window.
    if (f.spike_count == 1 && !trace.samples_mv.empty() && trace.dt_ms > 0.0) {
        const double t_spike = spikes.front();
        const auto idx =
            static_cast<std::size_t>(std::llround((t_spike - trace.t0_ms) / trace.dt_ms));
        if (idx + 1 < trace.samples_mv.size()) {
            const double v_reset = trace.samples_mv[idx + 1];
            const auto span = static_cast<std::size_t>(cfg.dap_window_ms / trace.dt_ms);
            double peak = v_reset;
            for (std::size_t k = idx + 1; k <= idx + span && k < trace.samples_mv.size(); ++k)
                peak = std::max(peak, trace.samples_mv[k]);
            f.dap_bump_mv = peak - v_reset;
        }
    }

    return f;
}

std::optional<catalog::PatternId> classify(const PatternFeatures& f,
                                           const ClassifierConfig& cfg) {
    using catalog::PatternId;

    if (f.spike_count == 0) return std::nullopt;

    if (f.has_reduced_drive_phase && f.spikes_only_during_reduced_drive && f.spike_count >= 2)
        return PatternId::InhibitionInducedSpiking;

    if (f.has_pulse_group && f.responded_to_pulse_group && f.has_lone_pulse &&
        !f.responded_to_lone_pulse)
        return PatternId::Integrator;

    if (f.has_post_inhibitory_pulse && f.responded_to_post_inhibitory_pulse &&
        f.has_lone_pulse && !f.responded_to_lone_pulse)
        return PatternId::ThresholdVariability;

    if (f.rebound) return PatternId::ReboundSpike;

    if (f.spike_count == 1 && !f.sustained_drive_at_first_spike &&
        f.dap_bump_mv >= cfg.dap_bump_min_mv)
        return PatternId::Dap;

    if (f.spike_count == 1 && f.sustained_drive_at_first_spike)
        return PatternId::PhasicSpiking;

    if (f.initial_burst_isis >= 2 && f.tail_spike_count >= 3 &&
        f.tail_isi_cv < cfg.mixed_tail_cv_max && f.sustained_drive_at_first_spike)
        return PatternId::MixedMode;

    if (f.spike_count >= cfg.tonic_min_spikes && f.initial_burst_isis <= 1 &&
        f.tail_spike_count >= 3 && f.tail_isi_cv < cfg.tonic_cv_max &&
        f.sustained_drive_at_first_spike)
        return PatternId::TonicSpiking;

    return std::nullopt;
}

std::optional<catalog::PatternId> classify_simulation(const NeuronParams& params,
                                                      const StimulusProtocol& protocol,
                                                      const SimConfig& sim,
                                                      const ClassifierConfig& config) {
    const auto result = model::simulate(params, protocol, sim);
    const auto features = extract_features(result.train, result.trace, protocol, config);
    return classify(features, config);
}

}  // namespace izhi::metrics

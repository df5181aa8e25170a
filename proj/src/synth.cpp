#include "izhi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace izhi::synth {

namespace {

double gauss_bump(double t_ms, double center_ms, double sigma_ms) {
    const double z = (t_ms - center_ms) / sigma_ms;
    return std::exp(-0.5 * z * z);
}

// Biphasic/triphasic extracellular shapes, normalized to trough depth 1.
// Distinct widths and lobe ratios keep the three clusters separable.
std::vector<double> make_template(int kind, double fs) {
    const double half_ms = 2.0;
    const auto half = static_cast<long>(std::llround(half_ms * fs / 1000.0));
    std::vector<double> shape(static_cast<std::size_t>(2 * half + 1), 0.0);
    for (long i = -half; i <= half; ++i) {
        const double t = 1000.0 * static_cast<double>(i) / fs;  // ms relative to trough
        double v = 0.0;
        switch (kind % 3) {
            case 0:  // narrow biphasic with a sharp early rebound
                v = -gauss_bump(t, 0.0, 0.10) + 0.60 * gauss_bump(t, 0.35, 0.15);
                break;
            case 1:  // broad biphasic with a slow shallow rebound
                v = -gauss_bump(t, 0.0, 0.22) + 0.18 * gauss_bump(t, 0.95, 0.45);
                break;
            default:  // triphasic with a pronounced pre-lobe
                v = 0.45 * gauss_bump(t, -0.40, 0.16) - gauss_bump(t, 0.0, 0.11) +
                    0.50 * gauss_bump(t, 0.55, 0.30);
                break;
        }
        shape[static_cast<std::size_t>(i + half)] = v;
    }
    const double trough = -*std::min_element(shape.begin(), shape.end());
    for (double& v : shape) v /= trough;
    return shape;
}

}  // namespace

SpikeTrain poisson_train(double rate_hz, double duration_ms, std::uint64_t seed,
                         double min_isi_ms) {
    if (!(rate_hz > 0.0)) throw ValidationError("poisson rate must be positive");
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate_hz / 1000.0);  // per ms
    SpikeTrain train;
    train.duration_ms = duration_ms;
    double t = gap(rng);
    while (t < duration_ms) {
        train.times_ms.push_back(t);
        t += min_isi_ms + gap(rng);
    }
    return train;
}

GroundTruthRecording make_recording(const RecordingConfig& cfg) {
    if (cfg.unit_count < 1) throw ValidationError("unit count must be >= 1");
    if (!(cfg.duration_s > 0.0)) throw ValidationError("duration must be positive");

    const double fs = cfg.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    std::mt19937_64 rng(cfg.seed);

    GroundTruthRecording out;
    out.recording.sample_rate_hz = fs;
    out.recording.region = cfg.region;
    out.recording.samples.assign(n, 0.0);

    // Band-limited noise: white Gaussian shaped by the analysis band, then
    // rescaled so its sigma is exact.
    {
        std::normal_distribution<double> white(0.0, 1.0);
        sorting::RawRecording noise;
        noise.sample_rate_hz = fs;
        noise.samples.resize(n);
        for (double& v : noise.samples) v = white(rng);
        noise = sorting::bandpass(noise, cfg.band_low_hz, cfg.band_high_hz);
        double ss = 0.0;
        for (double v : noise.samples) ss += v * v;
        const double sigma = std::sqrt(ss / static_cast<double>(n));
        const double scale = cfg.noise_sigma / sigma;
        for (std::size_t i = 0; i < n; ++i) out.recording.samples[i] = noise.samples[i] * scale;
    }

    if (cfg.hum_amplitude > 0.0) {
        const double w = 2.0 * M_PI * cfg.hum_hz / fs;
        for (std::size_t i = 0; i < n; ++i)
            out.recording.samples[i] += cfg.hum_amplitude * std::sin(w * static_cast<double>(i));
    }

    // Spike trains: refractory Poisson per unit, thinned so no two units fire
    // within cross_unit_gap_ms (overlap decomposition is out of scope here).
    const double duration_ms = cfg.duration_s * 1000.0;
    const double edge_ms = 5.0;
    std::vector<std::vector<std::size_t>> unit_samples(static_cast<std::size_t>(cfg.unit_count));
    std::vector<std::pair<double, int>> all_events;
    for (int u = 0; u < cfg.unit_count; ++u) {
        std::uniform_int_distribution<std::uint64_t> sub(0);
        SpikeTrain train = poisson_train(cfg.firing_rate_hz, duration_ms - 2 * edge_ms, sub(rng),
                                         cfg.min_isi_ms);
        for (double t : train.times_ms) all_events.push_back({t + edge_ms, u});
    }
    std::sort(all_events.begin(), all_events.end());
    std::vector<std::pair<double, int>> kept;
    for (const auto& ev : all_events) {
        if (!kept.empty() && ev.first - kept.back().first < cfg.cross_unit_gap_ms &&
            ev.second != kept.back().second)
            continue;
        if (!kept.empty() && ev.first - kept.back().first < cfg.min_isi_ms &&
            ev.second == kept.back().second)
            continue;
        kept.push_back(ev);
    }

    // Scale each shape so its trough depth after the analysis bandpass is
    // exactly snr * noise_sigma; the filter trims shapes unevenly otherwise.
    out.templates.reserve(static_cast<std::size_t>(cfg.unit_count));
    for (int u = 0; u < cfg.unit_count; ++u) {
        auto shape = make_template(u, fs);
        sorting::RawRecording probe;
        probe.sample_rate_hz = fs;
        probe.samples.assign(shape.size() * 5, 0.0);
        std::copy(shape.begin(), shape.end(),
                  probe.samples.begin() + static_cast<long>(shape.size() * 2));
        probe = sorting::bandpass(probe, cfg.band_low_hz, cfg.band_high_hz);
        const double filtered_trough =
            -*std::min_element(probe.samples.begin(), probe.samples.end());
        const double scale = cfg.snr * cfg.noise_sigma / filtered_trough;
        for (double& v : shape) v *= scale;
        out.templates.push_back(std::move(shape));
    }

    out.unit_trains.assign(static_cast<std::size_t>(cfg.unit_count), SpikeTrain{});
    for (auto& train : out.unit_trains) train.duration_ms = duration_ms;
    for (const auto& [t_ms, u] : kept) {
        const auto center = static_cast<std::size_t>(std::llround(t_ms * fs / 1000.0));
        const auto& shape = out.templates[static_cast<std::size_t>(u)];
        const long half = static_cast<long>(shape.size() / 2);
        if (static_cast<long>(center) < half ||
            center + static_cast<std::size_t>(half) >= n)
            continue;
        for (std::size_t j = 0; j < shape.size(); ++j)
            out.recording.samples[center - static_cast<std::size_t>(half) + j] += shape[j];
        out.unit_trains[static_cast<std::size_t>(u)].times_ms.push_back(
            1000.0 * static_cast<double>(center) / fs);
    }
    return out;
}

VoltageTrace noisy_trace(const VoltageTrace& clean, double noise_sigma_mv, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma_mv);
    VoltageTrace out = clean;
    if (noise_sigma_mv > 0.0)
        for (double& v : out.samples_mv) v += gauss(rng);
    return out;
}

MatchStats match_events(const std::vector<double>& truth_ms,
                        const std::vector<double>& detected_ms, double tolerance_ms) {
    MatchStats stats;
    stats.truth_count = truth_ms.size();
    stats.detected_count = detected_ms.size();
    std::vector<bool> used(detected_ms.size(), false);
    std::size_t cursor = 0;
    for (double t : truth_ms) {
        while (cursor < detected_ms.size() && detected_ms[cursor] < t - tolerance_ms) ++cursor;
        for (std::size_t j = cursor; j < detected_ms.size() && detected_ms[j] <= t + tolerance_ms;
             ++j) {
            if (!used[j]) {
                used[j] = true;
                ++stats.matched;
                break;
            }
        }
    }
    return stats;
}

}  // namespace izhi::synth

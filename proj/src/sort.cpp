#include "izhi/sort.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

namespace izhi::sorting {

void RawRecording::validate() const {
    if (!(sample_rate_hz > 0.0)) throw ValidationError("sample rate must be positive");
    for (double s : samples)
        if (!std::isfinite(s)) throw ValidationError("recording samples must be finite");
}

namespace {

struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
    double a1 = 0.0, a2 = 0.0;            // denominator (monic)
};

// Butterworth bandpass as a biquad cascade: analog prototype poles, lowpass
// to bandpass transform, bilinear map. One upper-half prototype pole yields
// two sections (overall 4th order).
std::vector<Biquad> butter_bandpass_sos(double low_hz, double high_hz, double fs) {
    using cd = std::complex<double>;
    const double w1 = 2.0 * fs * std::tan(M_PI * low_hz / fs);
    const double w2 = 2.0 * fs * std::tan(M_PI * high_hz / fs);
    const double w0sq = w1 * w2;
    const double bw = w2 - w1;

    const cd proto = std::polar(1.0, 3.0 * M_PI / 4.0);

    std::vector<Biquad> sos;
    const cd pbw = proto * bw;
    const cd disc = std::sqrt(pbw * pbw - 4.0 * w0sq);
    for (int sign : {+1, -1}) {
        const cd s = 0.5 * (pbw + static_cast<double>(sign) * disc);
        const cd z = (2.0 * fs + s) / (2.0 * fs - s);
        Biquad q;
        q.b0 = 1.0;
        q.b1 = 0.0;
        q.b2 = -1.0;  // one zero at z=+1 and one at z=-1 per section
        q.a1 = -2.0 * z.real();
        q.a2 = std::norm(z);
        sos.push_back(q);
    }

    // Unity gain at the geometric-mean frequency.
    const double wc = 2.0 * M_PI * std::sqrt(low_hz * high_hz) / fs;
    const cd zinv = std::exp(cd(0.0, -wc));
    cd h = 1.0;
    for (const auto& q : sos)
        h *= (q.b0 + q.b1 * zinv + q.b2 * zinv * zinv) /
             (1.0 + q.a1 * zinv + q.a2 * zinv * zinv);
    const double gain = std::abs(h);
    sos.front().b0 /= gain;
    sos.front().b1 /= gain;
    sos.front().b2 /= gain;
    return sos;
}

void biquad_forward(const Biquad& q, std::vector<double>& x) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : x) {
        const double y = q.b0 * v + s1;
        s1 = q.b1 * v - q.a1 * y + s2;
        s2 = q.b2 * v - q.a2 * y;
        v = y;
    }
}

}  // namespace

RawRecording bandpass(const RawRecording& rec, double low_hz, double high_hz) {
    rec.validate();
    const double nyquist = rec.sample_rate_hz / 2.0;
    if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < nyquist))
        throw ValidationError("bandpass requires 0 < low < high < sample_rate/2");
    if (rec.samples.empty()) return rec;

    const auto sos = butter_bandpass_sos(low_hz, high_hz, rec.sample_rate_hz);

    // Odd-reflection padding sized to the low-edge transient.
    const std::size_t n = rec.samples.size();
    const auto pad =
        std::min<std::size_t>(n - 1, static_cast<std::size_t>(3.0 * rec.sample_rate_hz / low_hz));
    std::vector<double> work;
    work.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i)
        work.push_back(2.0 * rec.samples.front() - rec.samples[i]);
    work.insert(work.end(), rec.samples.begin(), rec.samples.end());
    for (std::size_t i = 1; i <= pad; ++i)
        work.push_back(2.0 * rec.samples.back() - rec.samples[n - 1 - i]);

    for (const auto& q : sos) biquad_forward(q, work);
    std::reverse(work.begin(), work.end());
    for (const auto& q : sos) biquad_forward(q, work);
    std::reverse(work.begin(), work.end());

    RawRecording out = rec;
    out.samples.assign(work.begin() + static_cast<long>(pad),
                       work.begin() + static_cast<long>(pad + n));
    return out;
}

DetectionResult detect(const RawRecording& rec, const ThresholdSpec& spec) {
    rec.validate();
    DetectionResult out;

    std::vector<double> mags(rec.samples.size());
    for (std::size_t i = 0; i < rec.samples.size(); ++i) mags[i] = std::abs(rec.samples[i]);
    if (!mags.empty()) {
        const std::size_t mid = mags.size() / 2;
        std::nth_element(mags.begin(), mags.begin() + static_cast<long>(mid), mags.end());
        out.sigma = mags[mid] / 0.6745;
    }
    out.threshold =
        spec.mode == ThresholdSpec::Mode::MadSigma ? spec.k * out.sigma : std::abs(spec.absolute);
    if (!(out.threshold > 0.0)) throw ValidationError("detection threshold must be positive");

    const double sign = spec.negative_going ? -1.0 : 1.0;

    // One candidate per maximal threshold excursion, at its extreme sample.
    struct Candidate {
        std::size_t trough;
        double depth;
    };
    std::vector<Candidate> cands;
    bool inside = false;
    std::size_t best_idx = 0;
    double best_val = 0.0;
    for (std::size_t i = 0; i < rec.samples.size(); ++i) {
        const double v = sign * rec.samples[i];
        if (v > out.threshold) {
            if (!inside || v > best_val) {
                best_idx = i;
                best_val = v;
            }
            inside = true;
        } else if (inside) {
            cands.push_back({best_idx, best_val});
            inside = false;
            best_val = 0.0;
        }
    }
    if (inside) cands.push_back({best_idx, best_val});

    // Dead time: merge candidates closer than the window, keeping the deeper.
    const auto dead =
        static_cast<std::size_t>(std::llround(spec.dead_time_ms * rec.sample_rate_hz / 1000.0));
    std::vector<Candidate> merged;
    for (const auto& c : cands) {
        if (!merged.empty() && c.trough - merged.back().trough < dead) {
            if (c.depth > merged.back().depth) merged.back() = c;
        } else {
            merged.push_back(c);
        }
    }

    for (const auto& c : merged) {
        out.event_samples.push_back(c.trough);
        out.event_times_ms.push_back(1000.0 * static_cast<double>(c.trough) / rec.sample_rate_hz);
    }
    return out;
}

WaveformSet extract_waveforms(const RawRecording& rec, const DetectionResult& events,
                              const WaveformWindow& window) {
    WaveformSet out;
    out.sample_rate_hz = rec.sample_rate_hz;
    const auto pre =
        static_cast<std::size_t>(std::llround(window.pre_ms * rec.sample_rate_hz / 1000.0));
    const auto post =
        static_cast<std::size_t>(std::llround(window.post_ms * rec.sample_rate_hz / 1000.0));

    for (std::size_t e = 0; e < events.event_samples.size(); ++e) {
        const std::size_t idx = events.event_samples[e];
        if (idx < pre || idx + post >= rec.samples.size()) {
            ++out.skipped;
            continue;
        }
        Waveform w;
        w.snippet.assign(rec.samples.begin() + static_cast<long>(idx - pre),
                         rec.samples.begin() + static_cast<long>(idx + post + 1));
        w.alignment_index = pre;
        w.event_time_ms = events.event_times_ms[e];
        w.event_sample = idx;
        out.waveforms.push_back(std::move(w));
    }
    return out;
}

PcaResult pca_features(const WaveformSet& set) {
    const std::size_t n = set.waveforms.size();
    if (n < 4) throw ValidationError("PCA requires at least 4 waveforms");
    const std::size_t m = set.waveforms.front().snippet.size();
    for (const auto& w : set.waveforms)
        if (w.snippet.size() != m)
            throw ValidationError("waveforms must share one snippet length");

    Eigen::MatrixXd x(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
            x(static_cast<long>(i), static_cast<long>(j)) = set.waveforms[i].snippet[j];

    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw ValidationError("PCA eigendecomposition failed");

    PcaResult out;
    out.model.mean.assign(mean.data(), mean.data() + m);
    out.model.components.resize(m);
    out.model.explained_variance.resize(m);
    // eigenvalues come back ascending; store variance-ordered descending
    for (std::size_t r = 0; r < m; ++r) {
        const long src = static_cast<long>(m - 1 - r);
        Eigen::VectorXd comp = solver.eigenvectors().col(src);
        long max_idx = 0;
        comp.cwiseAbs().maxCoeff(&max_idx);
        if (comp(max_idx) < 0.0) comp = -comp;  // deterministic sign
        out.model.components[r].assign(comp.data(), comp.data() + m);
        out.model.explained_variance[r] = std::max(0.0, solver.eigenvalues()(src));
    }

    out.features.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& snip = set.waveforms[i].snippet;
        FeatureVector f;
        double p1 = 0.0, p2 = 0.0, p3 = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double centered = x(static_cast<long>(i), static_cast<long>(j));
            p1 += centered * out.model.components[0][j];
            if (m > 1) p2 += centered * out.model.components[1][j];
            if (m > 2) p3 += centered * out.model.components[2][j];
        }
        f.pc1 = p1;
        f.pc2 = p2;
        f.pc3 = p3;
        f.peak = *std::max_element(snip.begin(), snip.end());
        f.valley = *std::min_element(snip.begin(), snip.end());
        out.features[i] = f;
    }
    return out;
}

namespace {

double sq_dist(const std::array<double, 5>& a, const std::array<double, 5>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

ClusterResult kmeans_once(const std::vector<std::array<double, 5>>& pts, int k,
                          std::mt19937_64& rng) {
    const std::size_t n = pts.size();
    std::vector<std::array<double, 5>> centroids;
    centroids.reserve(static_cast<std::size_t>(k));

    // k-means++ seeding
    std::uniform_int_distribution<std::size_t> uniform_pt(0, n - 1);
    centroids.push_back(pts[uniform_pt(rng)]);
    std::vector<double> d2(n);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, sq_dist(pts[i], c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centroids.push_back(pts[uniform_pt(rng)]);
            continue;
        }
        std::uniform_real_distribution<double> unit(0.0, total);
        double target = unit(rng);
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            target -= d2[i];
            if (target <= 0.0) {
                chosen = i;
                break;
            }
        }
        centroids.push_back(pts[chosen]);
    }

    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = sq_dist(pts[i], centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }

        std::vector<std::array<double, 5>> sums(static_cast<std::size_t>(k),
                                                std::array<double, 5>{});
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 5; ++j) sums[static_cast<std::size_t>(assign[i])][j] += pts[i][j];
            ++counts[static_cast<std::size_t>(assign[i])];
        }
        for (int c = 0; c < k; ++c) {
            const auto ci = static_cast<std::size_t>(c);
            if (counts[ci] == 0) {
                // revive an empty cluster at the point farthest from its centroid
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d =
                        sq_dist(pts[i], centroids[static_cast<std::size_t>(assign[i])]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                centroids[ci] = pts[far_i];
                changed = true;
            } else {
                for (std::size_t j = 0; j < 5; ++j)
                    centroids[ci][j] = sums[ci][j] / static_cast<double>(counts[ci]);
            }
        }
        if (!changed) break;
    }

    ClusterResult out;
    out.assignments = std::move(assign);
    out.centroids = std::move(centroids);
    out.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        out.inertia +=
            sq_dist(pts[i], out.centroids[static_cast<std::size_t>(out.assignments[i])]);
    return out;
}

}  // namespace

ClusterResult cluster(const std::vector<FeatureVector>& features, int k, std::uint64_t seed,
                      int restarts) {
    if (k < 1) throw ValidationError("cluster count must be >= 1");
    if (features.size() < static_cast<std::size_t>(k))
        throw ValidationError("cluster count exceeds feature count");
    if (restarts < 1) throw ValidationError("cluster restarts must be >= 1");

    std::vector<std::array<double, 5>> pts;
    pts.reserve(features.size());
    for (const auto& f : features) pts.push_back(f.as_array());

    std::mt19937_64 rng(seed);
    ClusterResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        ClusterResult cand = kmeans_once(pts, k, rng);
        if (cand.inertia < best.inertia) best = std::move(cand);
    }
    return best;
}

std::vector<SortedUnit> validate_units(const std::vector<int>& assignments,
                                       const WaveformSet& waveforms, double refractory_ms,
                                       double recording_duration_ms, double max_violation_rate) {
    if (!(refractory_ms > 0.0)) throw ValidationError("refractory period must be positive");
    if (assignments.size() != waveforms.waveforms.size())
        throw ValidationError("assignment count does not match waveform count");

    const int k = assignments.empty() ? 0 : *std::max_element(assignments.begin(),
                                                              assignments.end()) + 1;
    std::vector<SortedUnit> units;
    for (int c = 0; c < k; ++c) {
        SortedUnit unit;
        unit.unit_id = c;
        std::vector<double> mean_wf;
        std::size_t count = 0;
        for (std::size_t i = 0; i < assignments.size(); ++i) {
            if (assignments[i] != c) continue;
            const auto& w = waveforms.waveforms[i];
            unit.train.times_ms.push_back(w.event_time_ms);
            if (mean_wf.empty()) mean_wf.assign(w.snippet.size(), 0.0);
            for (std::size_t j = 0; j < w.snippet.size(); ++j) mean_wf[j] += w.snippet[j];
            ++count;
        }
        if (count == 0) continue;  // empty cluster: excluded

        for (double& v : mean_wf) v /= static_cast<double>(count);
        std::sort(unit.train.times_ms.begin(), unit.train.times_ms.end());
        unit.train.duration_ms = recording_duration_ms > 0.0
                                     ? recording_duration_ms
                                     : unit.train.times_ms.back() + 1.0;
        unit.mean_waveform = std::move(mean_wf);
        unit.spike_count = count;

        std::size_t violations = 0, isis = 0;
        for (std::size_t i = 1; i < unit.train.times_ms.size(); ++i) {
            ++isis;
            if (unit.train.times_ms[i] - unit.train.times_ms[i - 1] < refractory_ms) ++violations;
        }
        unit.isi_violation_rate =
            isis == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(isis);
        unit.valid = unit.isi_violation_rate <= max_violation_rate;
        units.push_back(std::move(unit));
    }
    return units;
}

std::vector<UnitPairCorrelogram> unit_cross_correlograms(const std::vector<SortedUnit>& units,
                                                         double bin_width_ms, double window_ms) {
    std::vector<UnitPairCorrelogram> out;
    for (std::size_t i = 0; i < units.size(); ++i)
        for (std::size_t j = i + 1; j < units.size(); ++j)
            out.push_back({units[i].unit_id, units[j].unit_id,
                           metrics::correlogram(units[i].train, units[j].train, bin_width_ms,
                                                window_ms)});
    return out;
}

SortResult sort_recording(const RawRecording& rec, const SortConfig& config) {
    SortResult out;
    const RawRecording filtered = bandpass(rec, config.band_low_hz, config.band_high_hz);
    out.detection = detect(filtered, config.threshold);
    const WaveformSet set = extract_waveforms(filtered, out.detection, config.window);
    out.skipped_waveforms = set.skipped;
    const PcaResult pca = pca_features(set);
    const ClusterResult clusters =
        cluster(pca.features, config.cluster_count, config.seed);
    out.units = validate_units(clusters.assignments, set, config.refractory_ms,
                               rec.duration_ms());
    out.cross_correlograms = unit_cross_correlograms(out.units);
    return out;
}

}  // namespace izhi::sorting

#include <doctest.h>

#include <cmath>
#include <random>

#include "izhi/catalog.hpp"
#include "izhi/metrics.hpp"
#include "izhi/simulate.hpp"
#include "izhi/synth.hpp"

using namespace izhi;
using namespace izhi::metrics;

namespace {

// Regularized upper incomplete gamma Q(a, x), for chi-square p-values.
double gammq(double a, double x) {
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 200; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-12) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 200; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-12) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

VoltageTrace make_trace(double t0, double dt, std::vector<double> samples) {
    VoltageTrace t;
    t.t0_ms = t0;
    t.dt_ms = dt;
    t.samples_mv = std::move(samples);
    return t;
}

SpikeTrain make_train(std::vector<double> times, double duration) {
    SpikeTrain t;
    t.times_ms = std::move(times);
    t.duration_ms = duration;
    return t;
}

}  // namespace

TEST_CASE("resample: identity, midpoint, sine oracle") {
    SUBCASE("same grid returns identical samples") {
        const auto t = make_trace(0.0, 0.02, {1.0, 2.0, 3.0, 4.0});
        const auto r = resample(t, 0.02);
        CHECK(r.samples_mv == t.samples_mv);
    }
    SUBCASE("linear midpoint") {
        const auto t = make_trace(0.0, 1.0, {0.0, 10.0});
        const auto r = resample(t, 0.5);
        REQUIRE(r.size() == 3);
        CHECK(r.samples_mv[0] == 0.0);
        CHECK(r.samples_mv[1] == doctest::Approx(5.0));
        CHECK(r.samples_mv[2] == 10.0);
    }
    SUBCASE("100 Hz sine sampled at 50 kHz onto a 0.25 ms grid") {
        const double fs = 50000.0;
        VoltageTrace fine;
        fine.dt_ms = 1000.0 / fs;
        for (int i = 0; i <= 5000; ++i)
            fine.samples_mv.push_back(std::sin(2.0 * M_PI * 100.0 * i / fs));
        const auto r = resample(fine, 0.25);
        double max_err = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double expect = std::sin(2.0 * M_PI * 100.0 * (r.time_at(i) / 1000.0));
            max_err = std::max(max_err, std::abs(r.samples_mv[i] - expect));
        }
        CHECK(max_err < 0.01);
    }
    SUBCASE("empty trace is rejected") {
        CHECK_THROWS_AS((void)resample(make_trace(0, 1, {}), 0.5), ValidationError);
    }
}

TEST_CASE("trace_mse examples and properties") {
    const auto a = make_trace(0, 1, {0.0, 0.0});
    const auto b = make_trace(0, 1, {1.0, 3.0});
    CHECK(trace_mse(a, a) == 0.0);
    CHECK(trace_mse(a, b) == doctest::Approx(5.0));
    CHECK(trace_mse(a, b) == trace_mse(b, a));

    const auto c = make_trace(0, 1, {2.5, 2.5});
    CHECK(trace_mse(a, c) == doctest::Approx(2.5 * 2.5));

    CHECK_THROWS_AS((void)trace_mse(a, make_trace(0, 1, {1.0})), ValidationError);
    CHECK_THROWS_AS((void)trace_mse(a, make_trace(0, 0.5, {1.0, 2.0})), ValidationError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-80.0, 30.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs(64), ys(64);
        for (auto& x : xs) x = u(rng);
        for (auto& y : ys) y = u(rng);
        const auto ta = make_trace(0, 0.25, xs);
        const auto tb = make_trace(0, 0.25, ys);
        CHECK(trace_mse(ta, tb) == trace_mse(tb, ta));
        CHECK(trace_mse(ta, tb) >= 0.0);
        CHECK(trace_mse(ta, ta) == 0.0);
    }
}

TEST_CASE("spikes_from_trace finds clamped excursions") {
    SUBCASE("flat trace yields nothing") {
        const auto t = make_trace(0, 0.25, std::vector<double>(100, -65.0));
        CHECK(spikes_from_trace(t, 0.0).count() == 0);
    }
    SUBCASE("single clamped peak at t = 100") {
        std::vector<double> s(801, -65.0);
        s[400] = 30.0;  // t = 100 ms at dt 0.25
        const auto train = spikes_from_trace(make_trace(0, 0.25, s), 0.0);
        REQUIRE(train.count() == 1);
        CHECK(train.times_ms[0] == doctest::Approx(100.0));
    }
    SUBCASE("tonic simulation round-trips through spike recovery") {
        NeuronParams p{0.02, 0.2, -65.0, 6.0};
        const auto proto = StimulusProtocol::step(0.0, 10.0, 10.0, 400.0);
        SimConfig cfg;
        cfg.duration_ms = 400.0;
        const auto run = model::simulate(p, proto, cfg);
        const auto recovered = spikes_from_trace(run.trace, 29.0);
        CHECK(recovered.times_ms == run.train.times_ms);
    }
}

TEST_CASE("isi_histogram mass and placement") {
    SUBCASE("constant intervals land in one bin") {
        const auto h = isi_histogram(make_train({0, 10, 20, 30}, 40), 5.0);
        CHECK(h.total() == 3.0);
        const auto idx = h.bin_index(10.0);
        REQUIRE(idx.has_value());
        CHECK(h.counts[*idx] == 3.0);
    }
    SUBCASE("single spike yields an empty histogram") {
        CHECK(isi_histogram(make_train({5.0}, 10), 1.0).total() == 0.0);
    }
    SUBCASE("Poisson intervals match the exponential law (chi-square)") {
        const auto train = synth::poisson_train(20.0, 100000.0, 99);
        const double bin = 5.0;
        const auto h = isi_histogram(train, bin);
        const double n = h.total();
        REQUIRE(n > 1000);
        // expected mass per bin for Exponential(rate), rate in 1/ms
        const double rate = 0.02;
        double chi2 = 0.0;
        int dof = 0;
        double tail = n;
        for (std::size_t i = 0; i + 1 < h.counts.size() && i < 30; ++i) {
            const double lo = i * bin, hi = (i + 1) * bin;
            const double expect = n * (std::exp(-rate * lo) - std::exp(-rate * hi));
            if (expect < 5.0) break;
            chi2 += (h.counts[i] - expect) * (h.counts[i] - expect) / expect;
            tail -= h.counts[i];
            ++dof;
        }
        const double p = gammq(0.5 * dof, 0.5 * chi2);
        CHECK(p > 0.01);
    }
    SUBCASE("mass conservation over random trains") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.1, 500.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> times;
            double t = 0.0;
            const int n = static_cast<int>(rng() % 40);
            for (int i = 0; i < n; ++i) times.push_back(t += u(rng));
            const auto h = isi_histogram(make_train(times, t + 1), 3.0);
            CHECK(h.total() == std::max(0, n - 1));
        }
    }
}

TEST_CASE("correlogram symmetry, shift, and flatness") {
    SUBCASE("auto-correlogram of a periodic train") {
        const auto train = make_train({0, 10, 20, 30}, 40);
        const auto h = correlogram(train, train, 5.0, 25.0);
        // symmetric about zero
        for (std::size_t i = 0; i < h.counts.size(); ++i)
            CHECK(h.counts[i] == h.counts[h.counts.size() - 1 - i]);
        // zero-lag self pairs excluded
        const auto zero_idx = h.bin_index(0.0);
        REQUIRE(zero_idx.has_value());
        CHECK(h.counts[*zero_idx] == 0.0);
        // peaks at +-10 (3 pairs) and +-20 (2 pairs)
        CHECK(h.counts[*h.bin_index(10.0)] == 3.0);
        CHECK(h.counts[*h.bin_index(-10.0)] == 3.0);
        CHECK(h.counts[*h.bin_index(20.0)] == 2.0);
        CHECK(h.counts[*h.bin_index(-20.0)] == 2.0);
    }
    SUBCASE("cross-correlogram of a shifted copy concentrates at the shift") {
        const auto x = make_train({3, 17, 42, 77, 90}, 100);
        auto shifted = x;
        for (double& t : shifted.times_ms) t += 5.0;
        const auto h = correlogram(x, shifted, 5.0, 25.0);
        const auto idx = h.bin_index(5.0);
        REQUIRE(idx.has_value());
        CHECK(h.counts[*idx] == 5.0);
    }
    SUBCASE("shift covariance on a random train") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.5, 20.0);
        std::vector<double> times;
        double t = 0.0;
        for (int i = 0; i < 50; ++i) times.push_back(t += std::round(u(rng) * 2.0) / 2.0);
        const auto a = make_train(times, t + 10);
        auto b = a;
        const double shift = 4.0;  // multiple of the 1 ms bin keeps lags exact
        for (double& s : b.times_ms) s += shift;
        const auto base = correlogram(a, a, 1.0, 40.0);
        const auto moved = correlogram(a, b, 1.0, 40.0);
        const long offset = 4;
        for (long i = 0; i + offset < static_cast<long>(base.counts.size()); ++i) {
            // skip the zero-lag bin: self pairs are dropped in auto mode only
            if (base.bin_index(0.0) == static_cast<std::size_t>(i)) continue;
            CHECK(moved.counts[static_cast<std::size_t>(i + offset)] ==
                  base.counts[static_cast<std::size_t>(i)]);
        }
    }
    SUBCASE("independent Poisson pair is approximately flat") {
        const auto a = synth::poisson_train(20.0, 100000.0, 21);
        const auto b = synth::poisson_train(20.0, 100000.0, 22);
        const auto h = correlogram(a, b, 5.0, 100.0);
        double mean = 0.0;
        for (double c : h.counts) mean += c;
        mean /= static_cast<double>(h.counts.size());
        const double sigma = std::sqrt(mean);
        for (double c : h.counts) CHECK(c <= mean + 3.0 * sigma);
    }
}

TEST_CASE("firing_rate_histogram bins counts over the duration") {
    SUBCASE("uniform spikes, one per bin") {
        std::vector<double> times;
        for (int i = 0; i < 10; ++i) times.push_back(500.0 + 1000.0 * i);
        const auto h = firing_rate_histogram(make_train(times, 10000.0), 1000.0);
        REQUIRE(h.counts.size() == 10);
        for (double c : h.counts) CHECK(c == 1.0);
    }
    SUBCASE("empty train gives zeros") {
        const auto h = firing_rate_histogram(make_train({}, 5000.0), 1000.0);
        REQUIRE(h.counts.size() == 5);
        for (double c : h.counts) CHECK(c == 0.0);
    }
    SUBCASE("piecewise-constant Poisson profile within 3 sigma per bin") {
        // rate 10 Hz for 50 s then 40 Hz for 50 s
        const auto lo = synth::poisson_train(10.0, 50000.0, 31);
        auto hi = synth::poisson_train(40.0, 50000.0, 32);
        std::vector<double> times = lo.times_ms;
        for (double t : hi.times_ms) times.push_back(t + 50000.0);
        const auto h = firing_rate_histogram(make_train(times, 100000.0), 5000.0);
        REQUIRE(h.counts.size() == 20);
        for (std::size_t i = 0; i < 20; ++i) {
            const double expect = (i < 10 ? 10.0 : 40.0) * 5.0;
            CHECK(std::abs(h.counts[i] - expect) <= 3.0 * std::sqrt(expect));
        }
    }
}

TEST_CASE("extract_features on simulated patterns") {
    const auto& cat = catalog::Catalog::builtin();
    SimConfig sim;

    SUBCASE("tonic: regular tail, adaptation near one") {
        const auto& spec = cat.spec_for(catalog::PatternId::TonicSpiking);
        sim.duration_ms = spec.protocol.duration_ms;
        const auto run = model::simulate(*spec.original, spec.protocol, sim);
        const auto f = extract_features(run.train, run.trace, spec.protocol);
        CHECK(f.spike_count >= 5);
        CHECK(f.tail_isi_cv < 0.2);
        CHECK(f.adaptation_index == doctest::Approx(1.0).epsilon(0.15));
        CHECK(f.sustained_drive_at_first_spike);
    }
    SUBCASE("phasic: exactly one spike") {
        const auto& spec = cat.spec_for(catalog::PatternId::PhasicSpiking);
        sim.duration_ms = spec.protocol.duration_ms;
        const auto run = model::simulate(*spec.original, spec.protocol, sim);
        const auto f = extract_features(run.train, run.trace, spec.protocol);
        CHECK(f.spike_count == 1);
    }
    SUBCASE("empty train: defaults") {
        const auto& spec = cat.spec_for(catalog::PatternId::TonicSpiking);
        VoltageTrace flat = make_trace(0, 0.25, std::vector<double>(100, -70.0));
        const auto f = extract_features(make_train({}, 25.0), flat, spec.protocol);
        CHECK(f.spike_count == 0);
        CHECK(f.first_spike_latency_ms == -1.0);
        CHECK(f.mean_isi_ms == 0.0);
    }
}

TEST_CASE("classify: canonical parameters under catalog protocols") {
    const auto& cat = catalog::Catalog::builtin();
    auto label_of = [&](catalog::PatternId id) {
        const auto& spec = cat.spec_for(id);
        SimConfig sim;
        sim.duration_ms = spec.protocol.duration_ms;
        return classify_simulation(*spec.original, spec.protocol, sim);
    };
    CHECK(label_of(catalog::PatternId::TonicSpiking) == catalog::PatternId::TonicSpiking);
    CHECK(label_of(catalog::PatternId::InhibitionInducedSpiking) ==
          catalog::PatternId::InhibitionInducedSpiking);
    CHECK(label_of(catalog::PatternId::Dap) == catalog::PatternId::Dap);

    PatternFeatures empty;
    CHECK_FALSE(classify(empty).has_value());
}

TEST_CASE("classify is a pure function of features") {
    PatternFeatures f;
    f.spike_count = 7;
    f.isi_cv = 0.05;
    f.tail_isi_cv = 0.05;
    f.tail_spike_count = 6;
    f.sustained_drive_at_first_spike = true;
    const auto first = classify(f);
    for (int i = 0; i < 5; ++i) CHECK(classify(f) == first);
    CHECK(first == catalog::PatternId::TonicSpiking);
}

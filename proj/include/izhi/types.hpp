#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "izhi/errors.hpp"

namespace izhi {

// Parameter quadruple of the two-variable quadratic spiking model:
//   dv/dt = 0.04 v^2 + 5 v + 140 - u + I
//   du/dt = a (b v - u)
//   if v >= cutoff: v <- c, u <- u + d
struct NeuronParams {
    double a = 0.02;   // recovery time scale (1/ms)
    double b = 0.2;    // recovery sensitivity to v
    double c = -65.0;  // after-spike reset voltage (mV)
    double d = 6.0;    // after-spike recovery increment

    void validate() const {
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) || !std::isfinite(d))
            throw ValidationError("neuron params must be finite");
        if (c < -90.0 || c > -30.0)
            throw ValidationError("reset voltage c outside [-90, -30] mV");
    }

    bool operator==(const NeuronParams&) const = default;
};

struct NeuronState {
    double v = -70.0;  // membrane potential (mV)
    double u = -14.0;  // recovery variable

    bool finite() const { return std::isfinite(v) && std::isfinite(u); }
    bool operator==(const NeuronState&) const = default;
};

// Piecewise-linear input current. Segments are sorted, non-overlapping and
// cover [0, duration]; amplitude interpolates linearly inside a segment.
struct StimulusSegment {
    double t_start_ms = 0.0;
    double t_end_ms = 0.0;
    double i_start = 0.0;
    double i_end = 0.0;

    bool constant() const { return i_start == i_end; }
};

struct StimulusProtocol {
    std::vector<StimulusSegment> segments;
    double duration_ms = 0.0;

    void validate() const;

    // Current at time t (ms); t past the last segment holds its end amplitude.
    double current_at(double t_ms) const;

    // Same protocol with the final amplitude held out to at least new_duration.
    StimulusProtocol extended_to(double new_duration_ms) const;

    // Constant-current convenience builders.
    static StimulusProtocol constant(double amplitude, double duration_ms);
    static StimulusProtocol step(double baseline, double amplitude, double t_on_ms,
                                 double duration_ms);
};

struct SimConfig {
    double dt_ms = 0.25;               // integration step
    double duration_ms = 400.0;        // simulated time
    std::optional<double> v0;          // default: stable fixed point at I(0), else -70
    std::optional<double> u0;          // default: b * v0
    double spike_cutoff_mv = 30.0;

    void validate() const {
        if (!(dt_ms > 0.0) || dt_ms > 1.0)
            throw ValidationError("dt must be in (0, 1] ms");
        if (duration_ms < dt_ms)
            throw ValidationError("duration must be >= dt");
    }
};

// Uniformly sampled membrane potential. Samples at spike steps are clamped
// to the cutoff so plotted spikes share one height.
struct VoltageTrace {
    double t0_ms = 0.0;
    double dt_ms = 0.25;
    std::vector<double> samples_mv;

    std::size_t size() const { return samples_mv.size(); }
    double time_at(std::size_t idx) const { return t0_ms + dt_ms * static_cast<double>(idx); }
    double end_time() const {
        return samples_mv.empty() ? t0_ms : time_at(samples_mv.size() - 1);
    }
};

struct SpikeTrain {
    std::vector<double> times_ms;  // strictly increasing
    double duration_ms = 0.0;

    std::size_t count() const { return times_ms.size(); }
    void validate() const;
    std::vector<double> intervals() const;
};

}  // namespace izhi

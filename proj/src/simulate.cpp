#include "izhi/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace izhi {

void StimulusProtocol::validate() const {
    if (segments.empty())
        throw ValidationError("stimulus protocol has no segments");
    if (!(duration_ms > 0.0))
        throw ValidationError("stimulus protocol duration must be positive");
    const double eps = 1e-9;
    if (std::abs(segments.front().t_start_ms) > eps)
        throw ValidationError("stimulus segments must start at t = 0");
    double cursor = 0.0;
    for (const auto& seg : segments) {
        if (!(seg.t_end_ms > seg.t_start_ms))
            throw ValidationError("stimulus segment must have positive length");
        if (std::abs(seg.t_start_ms - cursor) > eps)
            throw ValidationError("stimulus segments must be contiguous and sorted");
        if (!std::isfinite(seg.i_start) || !std::isfinite(seg.i_end))
            throw ValidationError("stimulus amplitudes must be finite");
        cursor = seg.t_end_ms;
    }
    if (cursor + eps < duration_ms)
        throw ValidationError("stimulus segments do not cover the protocol duration");
}

double StimulusProtocol::current_at(double t_ms) const {
    if (segments.empty()) return 0.0;
    if (t_ms <= segments.front().t_start_ms) return segments.front().i_start;
    if (t_ms >= segments.back().t_end_ms) return segments.back().i_end;
    auto it = std::upper_bound(segments.begin(), segments.end(), t_ms,
                               [](double t, const StimulusSegment& s) { return t < s.t_end_ms; });
    const StimulusSegment& seg = *it;
    if (seg.constant()) return seg.i_start;
    const double frac = (t_ms - seg.t_start_ms) / (seg.t_end_ms - seg.t_start_ms);
    return seg.i_start + (seg.i_end - seg.i_start) * frac;
}

StimulusProtocol StimulusProtocol::extended_to(double new_duration_ms) const {
    if (new_duration_ms <= duration_ms) return *this;
    StimulusProtocol out = *this;
    const double hold = segments.empty() ? 0.0 : segments.back().i_end;
    const double from = segments.empty() ? 0.0 : segments.back().t_end_ms;
    out.segments.push_back({from, new_duration_ms, hold, hold});
    out.duration_ms = new_duration_ms;
    return out;
}

StimulusProtocol StimulusProtocol::constant(double amplitude, double duration_ms) {
    StimulusProtocol p;
    p.segments.push_back({0.0, duration_ms, amplitude, amplitude});
    p.duration_ms = duration_ms;
    return p;
}

StimulusProtocol StimulusProtocol::step(double baseline, double amplitude, double t_on_ms,
                                        double duration_ms) {
    if (t_on_ms <= 0.0) return constant(amplitude, duration_ms);
    StimulusProtocol p;
    p.segments.push_back({0.0, t_on_ms, baseline, baseline});
    p.segments.push_back({t_on_ms, duration_ms, amplitude, amplitude});
    p.duration_ms = duration_ms;
    return p;
}

void SpikeTrain::validate() const {
    double prev = -1.0;
    for (double t : times_ms) {
        if (!std::isfinite(t) || t < 0.0 || t > duration_ms)
            throw ValidationError("spike time outside [0, duration]");
        if (t <= prev)
            throw ValidationError("spike times must be strictly increasing");
        prev = t;
    }
}

std::vector<double> SpikeTrain::intervals() const {
    std::vector<double> out;
    if (times_ms.size() < 2) return out;
    out.reserve(times_ms.size() - 1);
    for (std::size_t i = 1; i < times_ms.size(); ++i)
        out.push_back(times_ms[i] - times_ms[i - 1]);
    return out;
}

}  // namespace izhi

namespace izhi::model {

namespace {

constexpr double kDivergenceLimitMv = 1000.0;

inline double dv_dt(double v, double u, double i_now) {
    return 0.04 * v * v + 5.0 * v + 140.0 - u + i_now;
}

// det > 0 and trace < 0 of the Jacobian at an equilibrium (v, u = b v).
bool is_stable(const NeuronParams& p, double v) {
    const double s = 0.08 * v + 5.0;
    const double trace = s - p.a;
    const double det = p.a * (p.b - s);
    return det > 0.0 && trace < 0.0;
}

}  // namespace

StepResult step(const NeuronState& state, const NeuronParams& params, double i_now,
                double dt_ms, double spike_cutoff_mv) {
    if (!(dt_ms > 0.0)) throw ValidationError("step dt must be positive");
    if (!state.finite()) throw ValidationError("step state must be finite");

    const double v_new = state.v + dt_ms * dv_dt(state.v, state.u, i_now);
    const double u_new = state.u + dt_ms * params.a * (params.b * state.v - state.u);

    if (!std::isfinite(v_new) || std::abs(v_new) > kDivergenceLimitMv)
        throw DivergenceError("membrane potential diverged during v update", -1);
    if (!std::isfinite(u_new))
        throw DivergenceError("recovery variable diverged during u update", -1);

    StepResult r;
    r.v_pre_reset = v_new;
    if (v_new >= spike_cutoff_mv) {
        r.state = {params.c, u_new + params.d};
        r.spiked = true;
    } else {
        r.state = {v_new, u_new};
        r.spiked = false;
    }
    return r;
}

SimResult simulate(const NeuronParams& params, const StimulusProtocol& protocol,
                   const SimConfig& config) {
    params.validate();
    config.validate();
    protocol.validate();
    if (protocol.duration_ms + 1e-9 < config.duration_ms)
        throw ValidationError("stimulus protocol does not cover the simulation duration");

    const double dt = config.dt_ms;
    const auto steps = static_cast<std::size_t>(std::floor(config.duration_ms / dt + 1e-9));

    SimResult out;
    out.trace.t0_ms = 0.0;
    out.trace.dt_ms = dt;
    out.trace.samples_mv.reserve(steps + 1);
    out.train.duration_ms = config.duration_ms;

    NeuronState s = initial_state(params, protocol, config);
    out.trace.samples_mv.push_back(s.v);

    // Walk the segment list in step order instead of searching per step.
    std::size_t seg_idx = 0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t_prev = dt * static_cast<double>(k - 1);
        while (seg_idx + 1 < protocol.segments.size() &&
               t_prev >= protocol.segments[seg_idx].t_end_ms)
            ++seg_idx;
        const StimulusSegment& seg = protocol.segments[seg_idx];
        double i_now = seg.i_start;
        if (!seg.constant()) {
            const double frac =
                std::clamp((t_prev - seg.t_start_ms) / (seg.t_end_ms - seg.t_start_ms), 0.0, 1.0);
            i_now = seg.i_start + (seg.i_end - seg.i_start) * frac;
        }

        StepResult r;
        try {
            r = step(s, params, i_now, dt, config.spike_cutoff_mv);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(k) +
                                      " (t = " + std::to_string(dt * static_cast<double>(k)) +
                                      " ms)",
                                  static_cast<long>(k));
        }
        s = r.state;
        if (r.spiked) {
            out.trace.samples_mv.push_back(config.spike_cutoff_mv);
            out.train.times_ms.push_back(dt * static_cast<double>(k));
        } else {
            out.trace.samples_mv.push_back(s.v);
        }
    }
    out.final_state = s;
    return out;
}

std::vector<NeuronState> fixed_points(const NeuronParams& params, double i_const) {
    params.validate();
    const double alpha = 0.04;
    const double beta = 5.0 - params.b;
    const double gamma = 140.0 + i_const;
    const double disc = beta * beta - 4.0 * alpha * gamma;

    std::vector<NeuronState> out;
    if (disc < 0.0) return out;
    if (disc == 0.0) {
        const double v = -beta / (2.0 * alpha);
        out.push_back({v, params.b * v});
        return out;
    }
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (beta + std::copysign(sq, beta));
    double v1, v2;
    if (q != 0.0) {
        v1 = q / alpha;
        v2 = gamma / q;
    } else {  // beta == 0 and gamma < 0
        v1 = -sq / (2.0 * alpha);
        v2 = -v1;
    }
    if (v1 > v2) std::swap(v1, v2);
    out.push_back({v1, params.b * v1});
    out.push_back({v2, params.b * v2});
    return out;
}

std::optional<NeuronState> stable_fixed_point(const NeuronParams& params, double i_const) {
    for (const NeuronState& fp : fixed_points(params, i_const))
        if (is_stable(params, fp.v)) return fp;  // ascending order; lowest stable wins
    return std::nullopt;
}

NeuronState initial_state(const NeuronParams& params, const StimulusProtocol& protocol,
                          const SimConfig& config) {
    if (config.v0.has_value()) {
        const double v = *config.v0;
        return {v, config.u0.value_or(params.b * v)};
    }
    const double i0 = protocol.segments.empty() ? 0.0 : protocol.segments.front().i_start;
    if (auto fp = stable_fixed_point(params, i0)) return *fp;
    return {-70.0, params.b * -70.0};
}

}  // namespace izhi::model

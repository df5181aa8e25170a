#pragma once

#include <utility>

#include "izhi/types.hpp"

namespace izhi::model {

struct StepResult {
    NeuronState state;
    bool spiked = false;
    double v_pre_reset = 0.0;  // integrated v before any reset, for peak clipping
};

// One forward-Euler step of length dt. Both derivatives are evaluated at the
// incoming state; the reset applies after integration when v reaches cutoff.
StepResult step(const NeuronState& state, const NeuronParams& params, double i_now,
                double dt_ms, double spike_cutoff_mv = 30.0);

struct SimResult {
    VoltageTrace trace;
    SpikeTrain train;
    NeuronState final_state;
};

// Fixed-step integration of the model under a stimulus protocol.
// trace has floor(duration/dt)+1 samples; sample k is the state after k steps,
// clamped to the cutoff on spike steps. Deterministic.
SimResult simulate(const NeuronParams& params, const StimulusProtocol& protocol,
                   const SimConfig& config);

// Equilibria of the model at constant current: real roots of
// 0.04 v^2 + (5 - b) v + 140 + I = 0 with u = b v, ordered by v ascending.
std::vector<NeuronState> fixed_points(const NeuronParams& params, double i_const);

// The asymptotically stable equilibrium at constant current, when one exists.
std::optional<NeuronState> stable_fixed_point(const NeuronParams& params, double i_const);

// Initial state per config: explicit v0/u0 when set, otherwise the stable
// fixed point at I(0) (falling back to v = -70), with u0 = b * v0.
NeuronState initial_state(const NeuronParams& params, const StimulusProtocol& protocol,
                          const SimConfig& config);

}  // namespace izhi::model

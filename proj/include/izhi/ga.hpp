#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "izhi/types.hpp"

namespace izhi::ga {

using Rng = std::mt19937_64;

struct GeneBounds {
    double lo = 0.0;
    double hi = 1.0;

    double range() const { return hi - lo; }
    double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
};

// One bound per gene, in (a, b, c, d) order. Defaults envelope every catalog
// quadruple with margin.
struct ParamBounds {
    GeneBounds a{-0.1, 2.0};
    GeneBounds b{-1.5, 0.4};
    GeneBounds c{-80.0, -40.0};
    GeneBounds d{-25.0, 25.0};

    std::array<GeneBounds, 4> as_array() const { return {a, b, c, d}; }
    bool contains(const NeuronParams& p) const;
    NeuronParams clamp(const NeuronParams& p) const;
};

struct GaConfig {
    int population_size = 100;
    int max_generations = 150;
    double crossover_rate = 0.7;       // probability an offspring pair is produced by blending
    double mutation_rate = 0.8;        // per-individual probability of being mutated
    int elite_count = 2;
    int tournament_size = 3;
    ParamBounds bounds;
    std::uint64_t seed = 0;
    double fitness_tolerance = 1e-3;   // early-stop MSE (mV^2)
    double mutation_sigma_scale = 0.1; // Gaussian sigma as a fraction of each gene's range
    // run_fit anneals the mutation sigma geometrically from mutation_sigma_scale
    // down to this fraction of the range by the final generation. A flat sigma
    // cannot settle onto the narrow spike-alignment optimum within the
    // generation budget; standalone mutate() is unaffected.
    double mutation_sigma_end_scale = 1e-4;
    // Shape of the anneal: < 1 front-loads the decay, spending more of the
    // budget at fine scales.
    double mutation_anneal_power = 1.0;
    double divergence_penalty = 1e9;   // fitness assigned when the simulation blows up

    void validate() const;
};

struct Individual {
    NeuronParams params;
    double fitness = kUnevaluated;

    static constexpr double kUnevaluated = -1.0;
    bool evaluated() const { return fitness >= 0.0; }
};

enum class Termination { MaxGenerations, ToleranceReached };
std::string termination_name(Termination t);

struct GenerationStats {
    int generation = 0;  // 1-based
    double best_mse = 0.0;
    double mean_mse = 0.0;
};

struct FitResult {
    Individual best;
    std::vector<GenerationStats> history;  // one entry per generation run
    int generations_run = 0;
    Termination termination = Termination::MaxGenerations;
};

// population_size individuals with each gene drawn uniformly within bounds.
std::vector<Individual> init_population(const GaConfig& config, Rng& rng);

// MSE fitness of one individual against an aligned target trace. Divergence
// maps to the penalty value instead of an error. Consumes no randomness.
double evaluate(const Individual& ind, const VoltageTrace& target,
                const StimulusProtocol& protocol, const SimConfig& sim,
                double divergence_penalty = 1e9);

// Per-gene arithmetic blend with alpha ~ U[0,1] drawn per gene; children stay
// in bounds by convexity.
std::pair<Individual, Individual> crossover(const Individual& pa, const Individual& pb, Rng& rng);

// With probability mutation_rate, perturb every gene with Gaussian noise of
// sigma = mutation_sigma_scale * range, then clamp to bounds. The overload
// with an explicit scale backs the annealing schedule inside run_fit.
Individual mutate(const Individual& ind, const GaConfig& config, Rng& rng);
Individual mutate(const Individual& ind, const GaConfig& config, Rng& rng, double sigma_scale);

// Generational loop: elitism, tournament selection, crossover-or-clone,
// mutation. Deterministic for a fixed seed. `seed_individuals` are planted
// into the initial population ahead of random ones.
FitResult run_fit(const VoltageTrace& target, const StimulusProtocol& protocol,
                  const GaConfig& config, const SimConfig& sim,
                  const std::vector<NeuronParams>& seed_individuals = {});

}  // namespace izhi::ga

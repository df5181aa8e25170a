#include "izhi/ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "izhi/metrics.hpp"
#include "izhi/simulate.hpp"

namespace izhi::ga {

namespace {

std::array<double, 4> genes_of(const NeuronParams& p) { return {p.a, p.b, p.c, p.d}; }

NeuronParams params_from(const std::array<double, 4>& g) { return {g[0], g[1], g[2], g[3]}; }

}  // namespace

bool ParamBounds::contains(const NeuronParams& p) const {
    const auto bs = as_array();
    const auto gs = genes_of(p);
    for (std::size_t i = 0; i < 4; ++i)
        if (gs[i] < bs[i].lo || gs[i] > bs[i].hi) return false;
    return true;
}

NeuronParams ParamBounds::clamp(const NeuronParams& p) const {
    const auto bs = as_array();
    auto gs = genes_of(p);
    for (std::size_t i = 0; i < 4; ++i) gs[i] = bs[i].clamp(gs[i]);
    return params_from(gs);
}

void GaConfig::validate() const {
    if (population_size < 1) throw ValidationError("population size must be >= 1");
    if (max_generations < 1) throw ValidationError("max generations must be >= 1");
    if (crossover_rate < 0.0 || crossover_rate > 1.0)
        throw ValidationError("crossover rate must lie in [0, 1]");
    if (mutation_rate < 0.0 || mutation_rate > 1.0)
        throw ValidationError("mutation rate must lie in [0, 1]");
    if (elite_count < 0 || elite_count >= population_size)
        throw ValidationError("elite count must lie in [0, population size)");
    if (tournament_size < 1 || tournament_size > population_size)
        throw ValidationError("tournament size must lie in [1, population size]");
    for (const auto& gb : bounds.as_array())
        if (!(gb.lo <= gb.hi) || !std::isfinite(gb.lo) || !std::isfinite(gb.hi))
            throw ValidationError("gene bounds must be finite with lo <= hi");
    if (!(fitness_tolerance >= 0.0)) throw ValidationError("fitness tolerance must be >= 0");
    if (!(mutation_sigma_scale >= 0.0)) throw ValidationError("mutation sigma must be >= 0");
}

std::string termination_name(Termination t) {
    return t == Termination::MaxGenerations ? "max-generations" : "tolerance-reached";
}

std::vector<Individual> init_population(const GaConfig& config, Rng& rng) {
    config.validate();
    std::vector<Individual> pop;
    pop.reserve(static_cast<std::size_t>(config.population_size));
    const auto bs = config.bounds.as_array();
    for (int i = 0; i < config.population_size; ++i) {
        std::array<double, 4> g{};
        for (std::size_t k = 0; k < 4; ++k) {
            if (bs[k].lo == bs[k].hi) {
                g[k] = bs[k].lo;  // degenerate bound: gene is constant
            } else {
                std::uniform_real_distribution<double> dist(bs[k].lo, bs[k].hi);
                g[k] = dist(rng);
            }
        }
        pop.push_back({params_from(g), Individual::kUnevaluated});
    }
    return pop;
}

double evaluate(const Individual& ind, const VoltageTrace& target,
                const StimulusProtocol& protocol, const SimConfig& sim,
                double divergence_penalty) {
    try {
        const auto result = model::simulate(ind.params, protocol, sim);
        return metrics::trace_mse(result.trace, target);
    } catch (const DivergenceError&) {
        return divergence_penalty;
    }
}

std::pair<Individual, Individual> crossover(const Individual& pa, const Individual& pb,
                                            Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto ga = genes_of(pa.params);
    const auto gb = genes_of(pb.params);
    std::array<double, 4> ca{}, cb{};
    for (std::size_t k = 0; k < 4; ++k) {
        const double alpha = unit(rng);
        ca[k] = alpha * ga[k] + (1.0 - alpha) * gb[k];
        cb[k] = alpha * gb[k] + (1.0 - alpha) * ga[k];
    }
    return {Individual{params_from(ca), Individual::kUnevaluated},
            Individual{params_from(cb), Individual::kUnevaluated}};
}

Individual mutate(const Individual& ind, const GaConfig& config, Rng& rng) {
    return mutate(ind, config, rng, config.mutation_sigma_scale);
}

Individual mutate(const Individual& ind, const GaConfig& config, Rng& rng, double sigma_scale) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= config.mutation_rate) return ind;

    const auto bs = config.bounds.as_array();
    auto g = genes_of(ind.params);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t k = 0; k < 4; ++k) {
        const double sigma = sigma_scale * bs[k].range();
        if (sigma > 0.0) g[k] = bs[k].clamp(g[k] + sigma * gauss(rng));
    }
    return {params_from(g), Individual::kUnevaluated};
}

namespace {

Individual mutate_scaled(const Individual& ind, const GaConfig& config, Rng& rng,
                         const std::array<double, 4>& sigma) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= config.mutation_rate) return ind;
    const auto bs = config.bounds.as_array();
    auto g = genes_of(ind.params);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t k = 0; k < 4; ++k)
        if (sigma[k] > 0.0) g[k] = bs[k].clamp(g[k] + sigma[k] * gauss(rng));
    return {params_from(g), Individual::kUnevaluated};
}

std::size_t tournament_pick(const std::vector<Individual>& pop, int size, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
    std::size_t best = pick(rng);
    for (int i = 1; i < size; ++i) {
        const std::size_t cand = pick(rng);
        if (pop[cand].fitness < pop[best].fitness) best = cand;
    }
    return best;
}

}  // namespace

FitResult run_fit(const VoltageTrace& target, const StimulusProtocol& protocol,
                  const GaConfig& config, const SimConfig& sim,
                  const std::vector<NeuronParams>& seed_individuals) {
    config.validate();
    sim.validate();
    protocol.validate();
    const auto expected =
        static_cast<std::size_t>(std::floor(sim.duration_ms / sim.dt_ms + 1e-9)) + 1;
    if (target.samples_mv.size() != expected ||
        std::abs(target.dt_ms - sim.dt_ms) > 1e-12 * sim.dt_ms)
        throw ValidationError("target trace is not aligned to the simulation grid");

    Rng rng(config.seed);
    std::vector<Individual> pop = init_population(config, rng);
    for (std::size_t i = 0; i < seed_individuals.size() && i < pop.size(); ++i) {
        if (!config.bounds.contains(seed_individuals[i]))
            throw ValidationError("seed individual lies outside the configured bounds");
        pop[i] = {seed_individuals[i], Individual::kUnevaluated};
    }

    FitResult result;
    result.best.fitness = std::numeric_limits<double>::infinity();

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int gen = 1; gen <= config.max_generations; ++gen) {
        // Fitness is independent per individual and consumes no randomness,
        // so this loop may be evaluated in any order.
        for (auto& ind : pop)
            if (!ind.evaluated())
                ind.fitness = evaluate(ind, target, protocol, sim, config.divergence_penalty);

        std::vector<std::size_t> order(pop.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return pop[x].fitness < pop[y].fitness;
        });

        double sum = 0.0;
        for (const auto& ind : pop) sum += ind.fitness;
        const Individual& gen_best = pop[order.front()];
        result.history.push_back(
            {gen, gen_best.fitness, sum / static_cast<double>(pop.size())});
        result.generations_run = gen;
        if (gen_best.fitness < result.best.fitness) result.best = gen_best;

        if (result.best.fitness <= config.fitness_tolerance) {
            result.termination = Termination::ToleranceReached;
            return result;
        }
        if (gen == config.max_generations) {
            result.termination = Termination::MaxGenerations;
            return result;
        }

        // Annealed mutation scale: full-range exploration first, fine
        // refinement by the final generation.
        double sigma_scale = config.mutation_sigma_scale;
        if (config.max_generations > 1 && config.mutation_sigma_end_scale > 0.0 &&
            config.mutation_sigma_end_scale < config.mutation_sigma_scale) {
            const double frac = static_cast<double>(gen - 1) /
                                static_cast<double>(config.max_generations - 1);
            const double shaped = std::pow(frac, config.mutation_anneal_power);
            sigma_scale = config.mutation_sigma_scale *
                          std::pow(config.mutation_sigma_end_scale / config.mutation_sigma_scale,
                                   shaped);
        }

        // Per-gene sigma: the anneal envelope, tightened toward the spread of
        // the current front so late mutations follow the valley the elite
        // population has found instead of jumping isotropically.
        const auto bs = config.bounds.as_array();
        std::array<double, 4> sigma{};
        {
            const std::size_t front =
                std::max<std::size_t>(4, pop.size() / 4);
            std::array<double, 4> mean{}, var{};
            for (std::size_t r = 0; r < front && r < order.size(); ++r) {
                const auto g = genes_of(pop[order[r]].params);
                for (std::size_t k = 0; k < 4; ++k) mean[k] += g[k];
            }
            for (std::size_t k = 0; k < 4; ++k) mean[k] /= static_cast<double>(front);
            for (std::size_t r = 0; r < front && r < order.size(); ++r) {
                const auto g = genes_of(pop[order[r]].params);
                for (std::size_t k = 0; k < 4; ++k)
                    var[k] += (g[k] - mean[k]) * (g[k] - mean[k]);
            }
            for (std::size_t k = 0; k < 4; ++k) {
                const double spread = std::sqrt(var[k] / static_cast<double>(front));
                const double hi = sigma_scale * bs[k].range();
                const double lo = config.mutation_sigma_end_scale * bs[k].range();
                sigma[k] = std::clamp(spread, std::min(lo, hi), hi);
            }
        }

        std::vector<Individual> next;
        next.reserve(pop.size());
        for (int e = 0; e < config.elite_count; ++e)
            next.push_back(pop[order[static_cast<std::size_t>(e)]]);

        while (next.size() < pop.size()) {
            const Individual& pa = pop[tournament_pick(pop, config.tournament_size, rng)];
            const Individual& pb = pop[tournament_pick(pop, config.tournament_size, rng)];
            Individual ca, cb;
            if (unit(rng) < config.crossover_rate) {
                std::tie(ca, cb) = crossover(pa, pb, rng);
            } else {
                ca = pa;
                cb = pb;
            }
            next.push_back(mutate_scaled(ca, config, rng, sigma));
            if (next.size() < pop.size()) next.push_back(mutate_scaled(cb, config, rng, sigma));
        }
        pop = std::move(next);
    }
    return result;  // unreachable; loop always returns
}

}  // namespace izhi::ga

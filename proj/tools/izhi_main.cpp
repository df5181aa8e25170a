// Command-line front end: one subcommand per pipeline stage.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "izhi/catalog.hpp"
#include "izhi/compare.hpp"
#include "izhi/ga.hpp"
#include "izhi/io.hpp"
#include "izhi/metrics.hpp"
#include "izhi/simulate.hpp"
#include "izhi/sort.hpp"
#include "izhi/synth.hpp"

namespace {

using namespace izhi;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string config_path;
    std::string out_dir = ".";
    bool quiet = false;

    std::string config_text;  // loaded lazily

    void load_config() {
        if (!config_path.empty() && config_text.empty())
            config_text = io::read_file(config_path);
    }
    metrics::ClassifierConfig classifier_config() {
        load_config();
        return config_text.empty() ? metrics::ClassifierConfig{}
                                   : io::classifier_config_from_json(config_text);
    }
    ga::GaConfig ga_config() {
        load_config();
        ga::GaConfig cfg =
            config_text.empty() ? ga::GaConfig{} : io::ga_config_from_json(config_text);
        if (seed != 0) cfg.seed = seed;
        return cfg;
    }
};

void say(const GlobalOpts& g, const std::string& line) {
    if (!g.quiet) std::cout << line << "\n";
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
    fs::create_directories(g.out_dir);
    return (fs::path(g.out_dir) / name).string();
}

catalog::PatternId parse_pattern(const std::string& name) {
    const auto id = catalog::pattern_from_name(name);
    if (!id) {
        std::string known;
        for (auto p : catalog::all_patterns()) {
            if (!known.empty()) known += ", ";
            known += std::string(catalog::pattern_name(p));
        }
        throw ValidationError("unknown pattern '" + name + "'; known patterns: " + known);
    }
    return *id;
}

NeuronParams parse_params(const std::string& csv) {
    std::stringstream ss(csv);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ','))
        vals.push_back(std::stod(tok));
    if (vals.size() != 4)
        throw ValidationError("--params expects four comma-separated values a,b,c,d");
    NeuronParams p{vals[0], vals[1], vals[2], vals[3]};
    p.validate();
    return p;
}

StimulusProtocol protocol_from_file(const std::string& path) {
    const auto text = io::read_file(path);
    try {
        const auto j = nlohmann::ordered_json::parse(text);
        StimulusProtocol p;
        p.duration_ms = j.at("duration_ms").get<double>();
        for (const auto& seg : j.at("segments"))
            p.segments.push_back({seg[0].get<double>(), seg[1].get<double>(),
                                  seg[2].get<double>(), seg[3].get<double>()});
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("protocol JSON parse error: ") + e.what());
    }
}

io::Provenance provenance(const GlobalOpts& g, const std::string& command) {
    return {{"tool", "izhi"}, {"command", command}, {"seed", std::to_string(g.seed)}};
}

// --- subcommand bodies -----------------------------------------------------

int cmd_simulate(GlobalOpts& g, const std::string& pattern_name, bool use_optimized,
                 const std::string& params_csv, const std::string& protocol_file, double dt,
                 double duration) {
    const auto& cat = catalog::Catalog::builtin();

    NeuronParams params;
    StimulusProtocol protocol;
    if (!pattern_name.empty()) {
        const auto id = parse_pattern(pattern_name);
        const auto& spec = cat.spec_for(id);
        const auto& chosen = use_optimized ? spec.optimized : spec.original;
        if (!params_csv.empty()) {
            params = parse_params(params_csv);
        } else if (chosen) {
            params = *chosen;
        } else {
            throw ValidationError("pattern '" + pattern_name +
                                  "' carries no parameter quadruple; pass --params");
        }
        protocol = spec.protocol;
    } else if (!params_csv.empty()) {
        params = parse_params(params_csv);
        if (protocol_file.empty())
            throw ValidationError("--params requires --protocol or --pattern");
    } else {
        throw ValidationError("simulate needs --pattern or --params");
    }
    if (!protocol_file.empty()) protocol = protocol_from_file(protocol_file);

    SimConfig sim;
    sim.dt_ms = dt;
    sim.duration_ms = duration > 0.0 ? duration : protocol.duration_ms;
    if (sim.duration_ms > protocol.duration_ms)
        protocol = protocol.extended_to(sim.duration_ms);

    const auto result = model::simulate(params, protocol, sim);
    io::atomic_write(out_path(g, "trace.csv"), io::trace_to_csv(result.trace));
    io::atomic_write(out_path(g, "trace.json"),
                     io::trace_to_json(result.trace, provenance(g, "simulate")));
    io::atomic_write(out_path(g, "spikes.csv"), io::train_to_csv(result.train));
    say(g, "simulated " + std::to_string(result.trace.size()) + " samples, " +
               std::to_string(result.train.count()) + " spikes -> " + g.out_dir);
    return kExitOk;
}

int cmd_catalog(GlobalOpts& g, const std::string& mode, bool as_json) {
    const auto& cat = catalog::Catalog::builtin();
    (void)g;
    if (mode == "dump") {
        if (as_json) {
            std::cout << cat.to_json_text();
            return kExitOk;
        }
        std::printf("%-28s %-12s %-12s %-12s %-12s\n", "pattern", "a", "b", "c", "d");
        for (auto id : catalog::all_patterns()) {
            const auto& spec = cat.spec_for(id);
            auto row = [&](const char* tag, const NeuronParams& p) {
                std::printf("%-28s %-12s %-12s %-12s %-12s %s\n",
                            std::string(catalog::pattern_name(id)).c_str(),
                            io::format_double(p.a).c_str(), io::format_double(p.b).c_str(),
                            io::format_double(p.c).c_str(), io::format_double(p.d).c_str(), tag);
            };
            if (spec.original) row("original", *spec.original);
            if (spec.optimized) row("optimized", *spec.optimized);
        }
        return kExitOk;
    }
    if (mode == "matrix") {
        std::printf("%-28s %-4s %-4s\n", "pattern", "BLA", "HIP");
        for (auto id : catalog::all_patterns())
            std::printf("%-28s %-4s %-4s\n", std::string(catalog::pattern_name(id)).c_str(),
                        cat.region_allows(catalog::Region::BLA, id) ? "+" : "-",
                        cat.region_allows(catalog::Region::HIP, id) ? "+" : "-");
        return kExitOk;
    }
    for (auto id : catalog::all_patterns()) {
        const auto& spec = cat.spec_for(id);
        std::printf("%-28s %s%s\n", std::string(catalog::pattern_name(id)).c_str(),
                    spec.original ? "[params] " : "", spec.descriptor.c_str());
    }
    return kExitOk;
}

int cmd_classify(GlobalOpts& g, const std::string& trace_file, const std::string& pattern_name,
                 const std::string& protocol_file, const std::string& params_csv, double dt,
                 double duration) {
    const auto& cat = catalog::Catalog::builtin();
    StimulusProtocol protocol;
    if (!protocol_file.empty()) {
        protocol = protocol_from_file(protocol_file);
    } else if (!pattern_name.empty()) {
        protocol = cat.protocol_for(parse_pattern(pattern_name));
    } else {
        throw ValidationError("classify needs --pattern or --protocol for the stimulus");
    }

    VoltageTrace trace;
    if (!trace_file.empty()) {
        trace = io::load_trace(trace_file);
    } else if (!params_csv.empty()) {
        SimConfig sim;
        sim.dt_ms = dt;
        sim.duration_ms = duration > 0.0 ? duration : protocol.duration_ms;
        trace = model::simulate(parse_params(params_csv), protocol, sim).trace;
    } else {
        throw ValidationError("classify needs --trace or --params");
    }

    const auto cfg = g.classifier_config();
    const auto train = metrics::spikes_from_trace(trace, 0.0);
    const auto features = metrics::extract_features(train, trace, protocol, cfg);
    const auto label = metrics::classify(features, cfg);

    std::string label_name = label ? std::string(catalog::pattern_name(*label)) : "unclassified";
    std::string json = io::features_to_json(features);
    json.insert(json.rfind('}'), ",\n  \"label\": \"" + label_name + "\"\n");
    io::atomic_write(out_path(g, "classification.json"), json);
    say(g, "label: " + label_name);
    return kExitOk;
}

int cmd_fit(GlobalOpts& g, const std::string& target_file, const std::string& pattern_name,
            bool self_target, double dt, double duration) {
    const auto& cat = catalog::Catalog::builtin();
    const auto id = parse_pattern(pattern_name);
    StimulusProtocol protocol = cat.protocol_for(id);

    SimConfig sim;
    sim.dt_ms = dt;
    sim.duration_ms = duration > 0.0 ? duration : protocol.duration_ms;
    if (sim.duration_ms > protocol.duration_ms) protocol = protocol.extended_to(sim.duration_ms);

    VoltageTrace target;
    if (!target_file.empty()) {
        target = io::load_trace(target_file);
        target = metrics::resample(target, sim.dt_ms);
        const auto need =
            static_cast<std::size_t>(std::floor(sim.duration_ms / sim.dt_ms + 1e-9)) + 1;
        if (target.size() < need)
            throw ValidationError("target trace is shorter than the fit window");
        target.samples_mv.resize(need);
    } else if (self_target) {
        const auto& params = cat.canonical_params(id);
        if (!params)
            throw ValidationError("pattern '" + pattern_name + "' has no canonical params");
        target = model::simulate(*params, protocol, sim).trace;
    } else {
        throw ValidationError("fit needs --target or --self-target");
    }

    const auto cfg = g.ga_config();
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = ga::run_fit(target, protocol, cfg, sim);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    io::atomic_write(out_path(g, "fit.json"), io::fit_result_to_json(result));
    io::atomic_write(out_path(g, "history.csv"), io::fit_history_to_csv(result));
    const auto best_run = model::simulate(result.best.params, protocol, sim);
    io::atomic_write(out_path(g, "best_trace.csv"), io::trace_to_csv(best_run.trace));
    say(g, "best mse " + io::format_double(result.best.fitness) + " mV^2 after " +
               std::to_string(result.generations_run) + " generations (" +
               ga::termination_name(result.termination) + ", " + io::format_double(secs) +
               " s)");
    return kExitOk;
}

int cmd_sort(GlobalOpts& g, const std::string& rec_file, int k, double threshold_k,
             double threshold_abs, double refractory) {
    auto rec = io::load_recording(rec_file);
    sorting::SortConfig cfg;
    cfg.cluster_count = k;
    cfg.refractory_ms = refractory;
    cfg.seed = g.seed;
    if (threshold_abs > 0.0) {
        cfg.threshold.mode = sorting::ThresholdSpec::Mode::Absolute;
        cfg.threshold.absolute = threshold_abs;
    } else if (threshold_k > 0.0) {
        cfg.threshold.k = threshold_k;
    }

    const auto result = sorting::sort_recording(rec, cfg);
    io::atomic_write(out_path(g, "units.json"), io::sorted_units_to_json(result));
    for (const auto& unit : result.units)
        io::atomic_write(out_path(g, "unit_" + std::to_string(unit.unit_id) + "_spikes.csv"),
                         io::unit_train_to_csv(unit));
    say(g, std::to_string(result.detection.event_times_ms.size()) + " events, " +
               std::to_string(result.units.size()) + " units -> " + g.out_dir);
    return kExitOk;
}

int cmd_compare(GlobalOpts& g, const std::string& target_file, const std::string& pattern_name,
                bool svg) {
    const auto id = parse_pattern(pattern_name);
    const auto target = io::load_trace(target_file);
    const auto report = compare::compare_report(target, id);
    io::atomic_write(out_path(g, "compare.csv"), compare::report_to_csv(report));
    io::atomic_write(out_path(g, "compare.json"), compare::report_to_json(report));
    if (svg) io::atomic_write(out_path(g, "compare.svg"), compare::report_to_svg(report));
    say(g, "mse target-vs-original " + io::format_double(report.mse_target_original) +
               ", target-vs-improved " + io::format_double(report.mse_target_improved));
    return kExitOk;
}

int cmd_synth_recording(GlobalOpts& g, double duration_s, int units, double snr, double rate,
                        double hum, const std::string& region) {
    synth::RecordingConfig cfg;
    cfg.duration_s = duration_s;
    cfg.unit_count = units;
    cfg.snr = snr;
    cfg.firing_rate_hz = rate;
    cfg.hum_amplitude = hum;
    cfg.region = region;
    cfg.seed = g.seed;
    const auto gt = synth::make_recording(cfg);
    const auto rec_path = out_path(g, "recording.f32");
    io::save_recording(rec_path, gt.recording);
    for (std::size_t u = 0; u < gt.unit_trains.size(); ++u)
        io::atomic_write(out_path(g, "truth_unit_" + std::to_string(u) + ".csv"),
                         io::train_to_csv(gt.unit_trains[u]));
    say(g, "wrote " + rec_path + " (" + std::to_string(gt.recording.samples.size()) +
               " samples) plus ground-truth spike times");
    return kExitOk;
}

int cmd_synth_target(GlobalOpts& g, const std::string& pattern_name, bool use_original,
                     double noise, double dt, double duration) {
    const auto& cat = catalog::Catalog::builtin();
    const auto id = parse_pattern(pattern_name);
    const auto& spec = cat.spec_for(id);
    const auto& params = use_original ? spec.original : spec.optimized;
    if (!params)
        throw ValidationError("pattern '" + pattern_name + "' has no parameter quadruple");

    StimulusProtocol protocol = spec.protocol;
    SimConfig sim;
    sim.dt_ms = dt;
    sim.duration_ms = duration > 0.0 ? duration : protocol.duration_ms;
    if (sim.duration_ms > protocol.duration_ms) protocol = protocol.extended_to(sim.duration_ms);

    const auto clean = model::simulate(*params, protocol, sim).trace;
    const auto noisy = synth::noisy_trace(clean, noise, g.seed);
    io::atomic_write(out_path(g, "target.csv"), io::trace_to_csv(noisy));
    io::atomic_write(out_path(g, "target.json"),
                     io::trace_to_json(noisy, provenance(g, "synth target")));
    say(g, "wrote surrogate target (" + std::to_string(noisy.size()) + " samples, noise sigma " +
               io::format_double(noise) + " mV)");
    return kExitOk;
}

int cmd_bench(GlobalOpts& g, long long steps) {
    NeuronParams p{0.02, 0.2, -65.0, 6.0};
    NeuronState s{-70.0, -14.0};
    const double dt = 0.25, i_now = 10.0;
    const auto t0 = std::chrono::steady_clock::now();
    double sink = 0.0;
    long long spikes = 0;
    for (long long k = 0; k < steps; ++k) {
        const auto r = model::step(s, p, i_now, dt);
        s = r.state;
        spikes += r.spiked;
        sink += s.v;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double rate = static_cast<double>(steps) / secs;
    std::printf("{\"steps\": %lld, \"seconds\": %s, \"steps_per_second\": %s, "
                "\"spikes\": %lld, \"checksum\": %s}\n",
                steps, io::format_double(secs).c_str(), io::format_double(rate).c_str(), spikes,
                io::format_double(sink).c_str());
    (void)g;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Izhikevich neuron toolkit: simulation, pattern catalog, GA fitting, "
                 "classification, spike sorting"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "random seed for seeded commands");
    app.add_option("--config", g.config_path, "JSON config file (ga/classifier sections)");
    app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
    app.add_flag("--quiet", g.quiet, "suppress progress messages");

    auto* sim_cmd = app.add_subcommand("simulate", "integrate the model and write trace/spikes");
    std::string sim_pattern, sim_params, sim_protocol;
    bool sim_optimized = false;
    double sim_dt = 0.25, sim_duration = 0.0;
    sim_cmd->add_option("--pattern", sim_pattern, "catalog pattern supplying params+protocol");
    sim_cmd->add_flag("--optimized", sim_optimized, "use the improved quadruple");
    sim_cmd->add_option("--params", sim_params, "explicit a,b,c,d");
    sim_cmd->add_option("--protocol", sim_protocol, "stimulus protocol JSON file");
    sim_cmd->add_option("--dt", sim_dt, "integration step, ms")->capture_default_str();
    sim_cmd->add_option("--duration", sim_duration, "simulated time, ms (default: protocol)");

    auto* cat_cmd = app.add_subcommand("catalog", "list or dump the pattern catalog");
    std::string cat_mode = "list";
    bool cat_json = false;
    cat_cmd->add_option("mode", cat_mode, "list | dump | matrix")->capture_default_str();
    cat_cmd->add_flag("--json", cat_json, "dump as JSON");

    auto* cls_cmd = app.add_subcommand("classify", "label a trace with a firing pattern");
    std::string cls_trace, cls_pattern, cls_protocol, cls_params;
    double cls_dt = 0.25, cls_duration = 0.0;
    cls_cmd->add_option("--trace", cls_trace, "voltage trace CSV/JSON");
    cls_cmd->add_option("--pattern", cls_pattern, "catalog pattern supplying the protocol");
    cls_cmd->add_option("--protocol", cls_protocol, "stimulus protocol JSON file");
    cls_cmd->add_option("--params", cls_params, "simulate these a,b,c,d instead of --trace");
    cls_cmd->add_option("--dt", cls_dt)->capture_default_str();
    cls_cmd->add_option("--duration", cls_duration);

    auto* fit_cmd = app.add_subcommand("fit", "fit model parameters to a target trace");
    std::string fit_target, fit_pattern = "tonic_spiking";
    bool fit_self = false;
    double fit_dt = 0.25, fit_duration = 0.0;
    fit_cmd->add_option("--target", fit_target, "target trace CSV/JSON");
    fit_cmd->add_option("--pattern", fit_pattern, "catalog pattern supplying the protocol")
        ->capture_default_str();
    fit_cmd->add_flag("--self-target", fit_self, "fit against the pattern's own canonical trace");
    fit_cmd->add_option("--dt", fit_dt)->capture_default_str();
    fit_cmd->add_option("--duration", fit_duration, "fit window, ms (default: protocol)");

    auto* sort_cmd = app.add_subcommand("sort", "spike-sort an extracellular recording");
    std::string sort_rec;
    int sort_k = 3;
    double sort_tk = 0.0, sort_abs = 0.0, sort_refractory = 1.0;
    sort_cmd->add_option("--rec", sort_rec, "recording file (.f32/.i16 + sidecar, or .csv)")
        ->required();
    sort_cmd->add_option("--k", sort_k, "cluster count")->capture_default_str();
    sort_cmd->add_option("--threshold-k", sort_tk, "k in the k*sigma automatic threshold");
    sort_cmd->add_option("--threshold-abs", sort_abs, "manual absolute threshold");
    sort_cmd->add_option("--refractory", sort_refractory, "refractory period, ms")
        ->capture_default_str();

    auto* cmp_cmd = app.add_subcommand("compare",
                                       "three-way comparison: target vs original vs improved");
    std::string cmp_target, cmp_pattern;
    bool cmp_svg = false;
    cmp_cmd->add_option("--target", cmp_target, "target trace CSV/JSON")->required();
    cmp_cmd->add_option("--pattern", cmp_pattern, "catalog pattern")->required();
    cmp_cmd->add_flag("--svg", cmp_svg, "also write an SVG line plot");

    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic data");
    auto* synth_rec = synth_cmd->add_subcommand("recording", "ground-truthed 50 kHz recording");
    double sr_duration = 60.0, sr_snr = 5.0, sr_rate = 8.0, sr_hum = 0.0;
    int sr_units = 3;
    std::string sr_region = "BLA";
    synth_rec->add_option("--duration-s", sr_duration)->capture_default_str();
    synth_rec->add_option("--units", sr_units)->capture_default_str();
    synth_rec->add_option("--snr", sr_snr)->capture_default_str();
    synth_rec->add_option("--rate", sr_rate, "per-unit firing rate, Hz")->capture_default_str();
    synth_rec->add_option("--hum", sr_hum, "50 Hz hum amplitude")->capture_default_str();
    synth_rec->add_option("--region", sr_region)->capture_default_str();
    auto* synth_tgt = synth_cmd->add_subcommand("target", "surrogate voltage-trace target");
    std::string st_pattern = "tonic_spiking";
    bool st_original = false;
    double st_noise = 0.5, st_dt = 0.25, st_duration = 0.0;
    synth_tgt->add_option("--pattern", st_pattern)->capture_default_str();
    synth_tgt->add_flag("--original", st_original, "simulate the original quadruple instead");
    synth_tgt->add_option("--noise", st_noise, "additive Gaussian noise sigma, mV")
        ->capture_default_str();
    synth_tgt->add_option("--dt", st_dt)->capture_default_str();
    synth_tgt->add_option("--duration", st_duration);
    synth_cmd->require_subcommand(1);

    auto* bench_cmd = app.add_subcommand("bench", "measure raw stepping throughput");
    long long bench_steps = 50000000;
    bench_cmd->add_option("--steps", bench_steps)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (sim_cmd->parsed())
            return cmd_simulate(g, sim_pattern, sim_optimized, sim_params, sim_protocol, sim_dt,
                                sim_duration);
        if (cat_cmd->parsed()) return cmd_catalog(g, cat_mode, cat_json);
        if (cls_cmd->parsed())
            return cmd_classify(g, cls_trace, cls_pattern, cls_protocol, cls_params, cls_dt,
                                cls_duration);
        if (fit_cmd->parsed())
            return cmd_fit(g, fit_target, fit_pattern, fit_self, fit_dt, fit_duration);
        if (sort_cmd->parsed())
            return cmd_sort(g, sort_rec, sort_k, sort_tk, sort_abs, sort_refractory);
        if (cmp_cmd->parsed()) return cmd_compare(g, cmp_target, cmp_pattern, cmp_svg);
        if (synth_rec->parsed())
            return cmd_synth_recording(g, sr_duration, sr_units, sr_snr, sr_rate, sr_hum,
                                       sr_region);
        if (synth_tgt->parsed())
            return cmd_synth_target(g, st_pattern, st_original, st_noise, st_dt, st_duration);
        if (bench_cmd->parsed()) return cmd_bench(g, bench_steps);
        std::cerr << "no subcommand\n";
        return kExitValidation;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

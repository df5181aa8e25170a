#include "izhi/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace izhi::io {

using nlohmann::ordered_json;

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot move temporary file into place: " + path);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

double parse_double(const std::string& tok, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(std::string("cannot parse ") + what + " from '" + tok + "'");
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
}

ordered_json provenance_json(const Provenance& provenance) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : provenance) j[k] = v;
    return j;
}

}  // namespace

std::string trace_to_csv(const VoltageTrace& trace) {
    std::string out = "time_ms,v_mV\n";
    for (std::size_t i = 0; i < trace.samples_mv.size(); ++i) {
        out += format_double(trace.time_at(i));
        out += ',';
        out += format_double(trace.samples_mv[i]);
        out += '\n';
    }
    return out;
}

VoltageTrace trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    VoltageTrace trace;
    std::vector<double> times;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (first) {
            first = false;
            if (line.rfind("time_ms", 0) == 0) continue;  // header
        }
        const auto toks = split_csv_line(line);
        if (toks.size() != 2) throw ValidationError("trace CSV rows need time_ms,v_mV");
        times.push_back(parse_double(toks[0], "time"));
        trace.samples_mv.push_back(parse_double(toks[1], "voltage"));
    }
    if (trace.samples_mv.empty()) throw ValidationError("trace CSV holds no samples");
    trace.t0_ms = times.front();
    trace.dt_ms = times.size() > 1 ? (times.back() - times.front()) /
                                         static_cast<double>(times.size() - 1)
                                   : 1.0;
    if (!(trace.dt_ms > 0.0)) throw ValidationError("trace CSV times must increase");
    return trace;
}

std::string trace_to_json(const VoltageTrace& trace, const Provenance& provenance) {
    ordered_json j{{"type", "voltage_trace"},
                   {"t0_ms", trace.t0_ms},
                   {"dt_ms", trace.dt_ms},
                   {"duration_ms", trace.end_time() - trace.t0_ms},
                   {"samples_mv", trace.samples_mv},
                   {"provenance", provenance_json(provenance)}};
    return j.dump(2) + "\n";
}

VoltageTrace trace_from_json(const std::string& text) {
    try {
        const auto j = ordered_json::parse(text);
        VoltageTrace trace;
        trace.t0_ms = j.value("t0_ms", 0.0);
        trace.dt_ms = j.at("dt_ms").get<double>();
        trace.samples_mv = j.at("samples_mv").get<std::vector<double>>();
        if (!(trace.dt_ms > 0.0) || trace.samples_mv.empty())
            throw ValidationError("trace JSON must carry dt_ms > 0 and samples");
        return trace;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("trace JSON parse error: ") + e.what());
    }
}

std::string train_to_csv(const SpikeTrain& train) {
    std::string out = "spike_time_ms\n";
    for (double t : train.times_ms) {
        out += format_double(t);
        out += '\n';
    }
    return out;
}

SpikeTrain train_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    SpikeTrain train;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (first) {
            first = false;
            if (line.rfind("spike_time_ms", 0) == 0) continue;
        }
        train.times_ms.push_back(parse_double(line, "spike time"));
    }
    train.duration_ms = train.times_ms.empty() ? 0.0 : train.times_ms.back();
    return train;
}

std::string train_to_json(const SpikeTrain& train, const Provenance& provenance) {
    ordered_json j{{"type", "spike_train"},
                   {"duration_ms", train.duration_ms},
                   {"times_ms", train.times_ms},
                   {"provenance", provenance_json(provenance)}};
    return j.dump(2) + "\n";
}

SpikeTrain train_from_json(const std::string& text) {
    try {
        const auto j = ordered_json::parse(text);
        SpikeTrain train;
        train.duration_ms = j.at("duration_ms").get<double>();
        train.times_ms = j.at("times_ms").get<std::vector<double>>();
        return train;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("spike train JSON parse error: ") + e.what());
    }
}

std::string histogram_to_csv(const metrics::Histogram& histogram) {
    std::string out = "bin_start_ms,count\n";
    for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
        out += format_double(histogram.start_ms +
                             histogram.bin_width_ms * static_cast<double>(i));
        out += ',';
        out += format_double(histogram.counts[i]);
        out += '\n';
    }
    return out;
}

std::string histogram_to_json(const metrics::Histogram& histogram) {
    ordered_json j{{"type", "histogram"},
                   {"bin_width_ms", histogram.bin_width_ms},
                   {"start_ms", histogram.start_ms},
                   {"counts", histogram.counts}};
    return j.dump(2) + "\n";
}

std::string features_to_json(const metrics::PatternFeatures& f) {
    ordered_json j{{"spike_count", f.spike_count},
                   {"first_spike_latency_ms", f.first_spike_latency_ms},
                   {"mean_isi_ms", f.mean_isi_ms},
                   {"isi_cv", f.isi_cv},
                   {"adaptation_index", f.adaptation_index},
                   {"burst_fraction", f.burst_fraction},
                   {"rebound", f.rebound},
                   {"spikes_only_during_reduced_drive", f.spikes_only_during_reduced_drive},
                   {"initial_burst_isis", f.initial_burst_isis},
                   {"tail_isi_cv", f.tail_isi_cv},
                   {"tail_spike_count", f.tail_spike_count},
                   {"dap_bump_mv", f.dap_bump_mv},
                   {"sustained_drive_at_first_spike", f.sustained_drive_at_first_spike},
                   {"has_pulse_group", f.has_pulse_group},
                   {"has_lone_pulse", f.has_lone_pulse},
                   {"has_post_inhibitory_pulse", f.has_post_inhibitory_pulse},
                   {"has_reduced_drive_phase", f.has_reduced_drive_phase},
                   {"responded_to_pulse_group", f.responded_to_pulse_group},
                   {"responded_to_lone_pulse", f.responded_to_lone_pulse},
                   {"responded_to_post_inhibitory_pulse", f.responded_to_post_inhibitory_pulse}};
    return j.dump(2) + "\n";
}

namespace {

ga::GeneBounds bounds_from(const ordered_json& j) {
    if (!j.is_array() || j.size() != 2)
        throw ValidationError("gene bounds must be [lo, hi]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

ga::GaConfig ga_config_from_json(const std::string& text) {
    ga::GaConfig cfg;
    try {
        auto j = ordered_json::parse(text);
        if (j.contains("ga")) j = j.at("ga");  // allow a sectioned config file
        cfg.population_size = j.value("population_size", cfg.population_size);
        cfg.max_generations = j.value("max_generations", cfg.max_generations);
        cfg.crossover_rate = j.value("crossover_rate", cfg.crossover_rate);
        cfg.mutation_rate = j.value("mutation_rate", cfg.mutation_rate);
        cfg.elite_count = j.value("elite_count", cfg.elite_count);
        cfg.tournament_size = j.value("tournament_size", cfg.tournament_size);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.fitness_tolerance = j.value("fitness_tolerance", cfg.fitness_tolerance);
        cfg.mutation_sigma_scale = j.value("mutation_sigma_scale", cfg.mutation_sigma_scale);
        cfg.divergence_penalty = j.value("divergence_penalty", cfg.divergence_penalty);
        if (j.contains("bounds")) {
            const auto& b = j.at("bounds");
            if (b.contains("a")) cfg.bounds.a = bounds_from(b.at("a"));
            if (b.contains("b")) cfg.bounds.b = bounds_from(b.at("b"));
            if (b.contains("c")) cfg.bounds.c = bounds_from(b.at("c"));
            if (b.contains("d")) cfg.bounds.d = bounds_from(b.at("d"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("GA config parse error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string ga_config_to_json(const ga::GaConfig& cfg) {
    ordered_json j{{"population_size", cfg.population_size},
                   {"max_generations", cfg.max_generations},
                   {"crossover_rate", cfg.crossover_rate},
                   {"mutation_rate", cfg.mutation_rate},
                   {"elite_count", cfg.elite_count},
                   {"tournament_size", cfg.tournament_size},
                   {"seed", cfg.seed},
                   {"fitness_tolerance", cfg.fitness_tolerance},
                   {"mutation_sigma_scale", cfg.mutation_sigma_scale},
                   {"divergence_penalty", cfg.divergence_penalty},
                   {"bounds",
                    {{"a", {cfg.bounds.a.lo, cfg.bounds.a.hi}},
                     {"b", {cfg.bounds.b.lo, cfg.bounds.b.hi}},
                     {"c", {cfg.bounds.c.lo, cfg.bounds.c.hi}},
                     {"d", {cfg.bounds.d.lo, cfg.bounds.d.hi}}}}};
    return j.dump(2) + "\n";
}

std::string fit_result_to_json(const ga::FitResult& result) {
    ordered_json j{{"best",
                    {{"a", result.best.params.a},
                     {"b", result.best.params.b},
                     {"c", result.best.params.c},
                     {"d", result.best.params.d},
                     {"mse", result.best.fitness}}},
                   {"generations_run", result.generations_run},
                   {"termination", ga::termination_name(result.termination)}};
    ordered_json hist = ordered_json::array();
    for (const auto& g : result.history)
        hist.push_back({{"generation", g.generation},
                        {"best_mse", g.best_mse},
                        {"mean_mse", g.mean_mse}});
    j["history"] = std::move(hist);
    return j.dump(2) + "\n";
}

std::string fit_history_to_csv(const ga::FitResult& result) {
    std::string out = "generation,best_mse,mean_mse\n";
    for (const auto& g : result.history) {
        out += std::to_string(g.generation);
        out += ',';
        out += format_double(g.best_mse);
        out += ',';
        out += format_double(g.mean_mse);
        out += '\n';
    }
    return out;
}

metrics::ClassifierConfig classifier_config_from_json(const std::string& text) {
    metrics::ClassifierConfig cfg;
    try {
        auto j = ordered_json::parse(text);
        if (j.contains("classifier")) j = j.at("classifier");
        cfg.transient_exclusion_ms = j.value("transient_exclusion_ms", cfg.transient_exclusion_ms);
        cfg.tonic_cv_max = j.value("tonic_cv_max", cfg.tonic_cv_max);
        cfg.tonic_min_spikes = j.value("tonic_min_spikes", cfg.tonic_min_spikes);
        cfg.burst_isi_ms = j.value("burst_isi_ms", cfg.burst_isi_ms);
        cfg.dap_bump_min_mv = j.value("dap_bump_min_mv", cfg.dap_bump_min_mv);
        cfg.dap_window_ms = j.value("dap_window_ms", cfg.dap_window_ms);
        cfg.pulse_max_ms = j.value("pulse_max_ms", cfg.pulse_max_ms);
        cfg.pulse_group_gap_ms = j.value("pulse_group_gap_ms", cfg.pulse_group_gap_ms);
        cfg.response_window_ms = j.value("response_window_ms", cfg.response_window_ms);
        cfg.rebound_window_ms = j.value("rebound_window_ms", cfg.rebound_window_ms);
        cfg.mixed_tail_cv_max = j.value("mixed_tail_cv_max", cfg.mixed_tail_cv_max);
        cfg.phase_release_slack_ms =
            j.value("phase_release_slack_ms", cfg.phase_release_slack_ms);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("classifier config parse error: ") + e.what());
    }
    return cfg;
}

VoltageTrace load_trace(const std::string& path) {
    const std::string text = read_file(path);
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0)
        return trace_from_json(text);
    return trace_from_csv(text);
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void save_recording(const std::string& path, const sorting::RawRecording& rec) {
    if (ends_with(path, ".csv")) {
        std::string out = "sample\n";
        for (double v : rec.samples) {
            out += format_double(v);
            out += '\n';
        }
        atomic_write(path, out);
    } else if (ends_with(path, ".f32")) {
        std::string out;
        out.resize(rec.samples.size() * sizeof(float));
        for (std::size_t i = 0; i < rec.samples.size(); ++i) {
            const float v = static_cast<float>(rec.samples[i]);
            std::memcpy(out.data() + i * sizeof(float), &v, sizeof(float));
        }
        atomic_write(path, out);
    } else if (ends_with(path, ".i16")) {
        std::string out;
        out.resize(rec.samples.size() * sizeof(std::int16_t));
        for (std::size_t i = 0; i < rec.samples.size(); ++i) {
            const double clamped = std::clamp(rec.samples[i], -32768.0, 32767.0);
            const auto v = static_cast<std::int16_t>(std::llround(clamped));
            std::memcpy(out.data() + i * sizeof(std::int16_t), &v, sizeof(std::int16_t));
        }
        atomic_write(path, out);
    } else {
        throw ValidationError("recording path must end in .csv, .f32 or .i16: " + path);
    }

    if (!ends_with(path, ".csv")) {
        ordered_json sidecar{{"sample_rate_hz", rec.sample_rate_hz},
                             {"dtype", ends_with(path, ".f32") ? "float32" : "int16"},
                             {"units", rec.units},
                             {"region", rec.region}};
        atomic_write(path + ".json", sidecar.dump(2) + "\n");
    }
}

sorting::RawRecording load_recording(const std::string& path) {
    sorting::RawRecording rec;
    if (ends_with(path, ".csv")) {
        std::istringstream in(read_file(path));
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty() || line == "\r") continue;
            if (first) {
                first = false;
                if (line.rfind("sample", 0) == 0) continue;
            }
            rec.samples.push_back(parse_double(line, "recording sample"));
        }
        return rec;
    }

    const std::string sidecar_text = read_file(path + ".json");
    std::string dtype = "float32";
    try {
        const auto sidecar = ordered_json::parse(sidecar_text);
        rec.sample_rate_hz = sidecar.at("sample_rate_hz").get<double>();
        dtype = sidecar.value("dtype", dtype);
        rec.units = sidecar.value("units", rec.units);
        rec.region = sidecar.value("region", rec.region);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("recording sidecar parse error: ") + e.what());
    }

    const std::string raw = read_file(path);
    if (dtype == "float32" || ends_with(path, ".f32")) {
        if (raw.size() % sizeof(float) != 0)
            throw ValidationError("float32 recording has a partial sample");
        rec.samples.resize(raw.size() / sizeof(float));
        for (std::size_t i = 0; i < rec.samples.size(); ++i) {
            float v;
            std::memcpy(&v, raw.data() + i * sizeof(float), sizeof(float));
            rec.samples[i] = v;
        }
    } else if (dtype == "int16" || ends_with(path, ".i16")) {
        if (raw.size() % sizeof(std::int16_t) != 0)
            throw ValidationError("int16 recording has a partial sample");
        rec.samples.resize(raw.size() / sizeof(std::int16_t));
        for (std::size_t i = 0; i < rec.samples.size(); ++i) {
            std::int16_t v;
            std::memcpy(&v, raw.data() + i * sizeof(std::int16_t), sizeof(std::int16_t));
            rec.samples[i] = v;
        }
    } else {
        throw ValidationError("unknown recording dtype: " + dtype);
    }
    return rec;
}

std::string sorted_units_to_json(const sorting::SortResult& result) {
    ordered_json units = ordered_json::array();
    for (const auto& u : result.units) {
        units.push_back({{"unit_id", u.unit_id},
                         {"spike_count", u.spike_count},
                         {"isi_violation_rate", u.isi_violation_rate},
                         {"valid", u.valid},
                         {"mean_waveform", u.mean_waveform}});
    }
    ordered_json cross = ordered_json::array();
    for (const auto& c : result.cross_correlograms)
        cross.push_back({{"unit_a", c.unit_a},
                         {"unit_b", c.unit_b},
                         {"bin_width_ms", c.histogram.bin_width_ms},
                         {"start_ms", c.histogram.start_ms},
                         {"counts", c.histogram.counts}});
    ordered_json j{{"detected_events", result.detection.event_times_ms.size()},
                   {"threshold", result.detection.threshold},
                   {"noise_sigma", result.detection.sigma},
                   {"skipped_waveforms", result.skipped_waveforms},
                   {"units", std::move(units)},
                   {"cross_correlograms", std::move(cross)}};
    return j.dump(2) + "\n";
}

std::string unit_train_to_csv(const sorting::SortedUnit& unit) {
    return train_to_csv(unit.train);
}

}  // namespace izhi::io

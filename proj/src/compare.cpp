#include "izhi/compare.hpp"

#include <algorithm>
#include <cmath>

#include "izhi/io.hpp"
#include "izhi/metrics.hpp"
#include "izhi/simulate.hpp"

namespace izhi::compare {

double SpikeDeltas::max_abs_delta() const {
    double m = 0.0;
    for (double d : deltas_ms) m = std::max(m, std::abs(d));
    return m;
}

namespace {

SpikeDeltas match_spikes(const SpikeTrain& target, const SpikeTrain& model, double window_ms) {
    SpikeDeltas out;
    std::vector<bool> used(model.times_ms.size(), false);
    for (double t : target.times_ms) {
        double best_delta = 0.0;
        long best = -1;
        for (std::size_t j = 0; j < model.times_ms.size(); ++j) {
            if (used[j]) continue;
            const double delta = model.times_ms[j] - t;
            if (std::abs(delta) > window_ms) continue;
            if (best < 0 || std::abs(delta) < std::abs(best_delta)) {
                best = static_cast<long>(j);
                best_delta = delta;
            }
        }
        if (best >= 0) {
            used[static_cast<std::size_t>(best)] = true;
            out.deltas_ms.push_back(best_delta);
        } else {
            ++out.unmatched_target;
        }
    }
    out.unmatched_model = model.times_ms.size() -
                          static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
    return out;
}

}  // namespace

CompareReport compare_report(const VoltageTrace& target, catalog::PatternId pattern,
                             const catalog::Catalog& cat, double spike_match_window_ms) {
    const auto& spec = cat.spec_for(pattern);
    if (!spec.original || !spec.optimized) {
        std::string covered;
        for (const auto& [id, s] : cat.patterns()) {
            if (!s.original) continue;
            if (!covered.empty()) covered += ", ";
            covered += std::string(catalog::pattern_name(id));
        }
        throw ValidationError("pattern '" + std::string(catalog::pattern_name(pattern)) +
                              "' has no reference quadruples; covered patterns: " + covered);
    }
    if (target.samples_mv.size() < 2) throw ValidationError("target trace needs >= 2 samples");

    SimConfig sim;
    sim.dt_ms = std::min(0.25, target.dt_ms);
    const double target_span = target.end_time() - target.t0_ms;
    sim.duration_ms = std::min(target_span, spec.protocol.duration_ms);
    sim.duration_ms = std::max(sim.duration_ms, sim.dt_ms);

    const auto protocol = spec.protocol.extended_to(sim.duration_ms);
    const auto run_original = model::simulate(*spec.original, protocol, sim);
    const auto run_improved = model::simulate(*spec.optimized, protocol, sim);

    // Everything lands on the coarsest grid over the shared span.
    const double grid_dt = std::max(target.dt_ms, sim.dt_ms);

    CompareReport report;
    report.pattern = pattern;
    VoltageTrace target_window = target;
    const auto keep =
        static_cast<std::size_t>(std::floor(sim.duration_ms / target.dt_ms + 1e-9)) + 1;
    if (target_window.samples_mv.size() > keep) target_window.samples_mv.resize(keep);
    report.target = metrics::resample(target_window, grid_dt);
    report.original = metrics::resample(run_original.trace, grid_dt);
    report.improved = metrics::resample(run_improved.trace, grid_dt);

    const std::size_t n = std::min({report.target.size(), report.original.size(),
                                    report.improved.size()});
    report.target.samples_mv.resize(n);
    report.original.samples_mv.resize(n);
    report.improved.samples_mv.resize(n);

    report.mse_target_original = metrics::trace_mse(report.target, report.original);
    report.mse_target_improved = metrics::trace_mse(report.target, report.improved);

    const double spike_threshold = 0.0;
    const auto target_train = metrics::spikes_from_trace(report.target, spike_threshold);
    report.deltas_original =
        match_spikes(target_train, run_original.train, spike_match_window_ms);
    report.deltas_improved =
        match_spikes(target_train, run_improved.train, spike_match_window_ms);
    return report;
}

std::string report_to_csv(const CompareReport& report) {
    std::string out = "time_ms,target_mV,original_mV,improved_mV\n";
    for (std::size_t i = 0; i < report.target.size(); ++i) {
        out += io::format_double(report.target.time_at(i));
        out += ',';
        out += io::format_double(report.target.samples_mv[i]);
        out += ',';
        out += io::format_double(report.original.samples_mv[i]);
        out += ',';
        out += io::format_double(report.improved.samples_mv[i]);
        out += '\n';
    }
    return out;
}

std::string report_to_json(const CompareReport& report) {
    auto deltas = [](const SpikeDeltas& d) {
        std::string out = "[";
        for (std::size_t i = 0; i < d.deltas_ms.size(); ++i) {
            if (i) out += ",";
            out += io::format_double(d.deltas_ms[i]);
        }
        out += "]";
        return out;
    };
    std::string out = "{\n";
    out += "  \"pattern\": \"" + std::string(catalog::pattern_name(report.pattern)) + "\",\n";
    out += "  \"mse_target_original\": " + io::format_double(report.mse_target_original) + ",\n";
    out += "  \"mse_target_improved\": " + io::format_double(report.mse_target_improved) + ",\n";
    out += "  \"spike_deltas_original_ms\": " + deltas(report.deltas_original) + ",\n";
    out += "  \"spike_deltas_improved_ms\": " + deltas(report.deltas_improved) + ",\n";
    out += "  \"unmatched_target_vs_original\": " +
           std::to_string(report.deltas_original.unmatched_target) + ",\n";
    out += "  \"unmatched_target_vs_improved\": " +
           std::to_string(report.deltas_improved.unmatched_target) + ",\n";
    out += "  \"samples\": " + std::to_string(report.target.size()) + "\n";
    out += "}\n";
    return out;
}

namespace {

void append_polyline(std::string& svg, const VoltageTrace& trace, double x0, double y0,
                     double width, double height, double t_min, double t_max, double v_min,
                     double v_max, const char* stroke, const char* dash) {
    svg += "  <polyline fill=\"none\" stroke=\"";
    svg += stroke;
    svg += "\" stroke-width=\"1\"";
    if (dash && *dash) {
        svg += " stroke-dasharray=\"";
        svg += dash;
        svg += "\"";
    }
    svg += " points=\"";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double x = x0 + width * (trace.time_at(i) - t_min) / (t_max - t_min);
        const double y = y0 + height * (1.0 - (trace.samples_mv[i] - v_min) / (v_max - v_min));
        svg += io::format_double(std::round(x * 100.0) / 100.0);
        svg += ',';
        svg += io::format_double(std::round(y * 100.0) / 100.0);
        svg += ' ';
    }
    svg += "\"/>\n";
}

}  // namespace

std::string report_to_svg(const CompareReport& report) {
    const double width = 900, height = 420, margin = 50;
    double v_min = 1e300, v_max = -1e300;
    for (const auto* tr : {&report.target, &report.original, &report.improved}) {
        for (double v : tr->samples_mv) {
            v_min = std::min(v_min, v);
            v_max = std::max(v_max, v);
        }
    }
    if (!(v_max > v_min)) {
        v_max = v_min + 1.0;
    }
    const double pad = 0.05 * (v_max - v_min);
    v_min -= pad;
    v_max += pad;
    const double t_min = report.target.t0_ms;
    const double t_max = std::max(report.target.end_time(), t_min + 1.0);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string((int)width) +
           "\" height=\"" + std::to_string((int)height) + "\" viewBox=\"0 0 " +
           std::to_string((int)width) + " " + std::to_string((int)height) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double plot_w = width - 2 * margin, plot_h = height - 2 * margin;
    svg += "  <rect x=\"" + io::format_double(margin) + "\" y=\"" + io::format_double(margin) +
           "\" width=\"" + io::format_double(plot_w) + "\" height=\"" + io::format_double(plot_h) +
           "\" fill=\"none\" stroke=\"#888\"/>\n";

    append_polyline(svg, report.target, margin, margin, plot_w, plot_h, t_min, t_max, v_min,
                    v_max, "red", "");
    append_polyline(svg, report.original, margin, margin, plot_w, plot_h, t_min, t_max, v_min,
                    v_max, "black", "6,3");
    append_polyline(svg, report.improved, margin, margin, plot_w, plot_h, t_min, t_max, v_min,
                    v_max, "blue", "8,3,2,3");

    const std::string pattern(catalog::pattern_name(report.pattern));
    svg += "  <text x=\"" + io::format_double(margin) + "\" y=\"30\" font-family=\"sans-serif\" "
           "font-size=\"14\">" + pattern + ": target (red), original (black dash), improved "
           "(blue dash-dot)</text>\n";
    svg += "  <text x=\"" + io::format_double(margin) + "\" y=\"" +
           io::format_double(height - 12) +
           "\" font-family=\"sans-serif\" font-size=\"12\">time " + io::format_double(t_min) +
           " to " + io::format_double(t_max) + " ms; v " + io::format_double(v_min) + " to " +
           io::format_double(v_max) + " mV</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace izhi::compare

// Human-facing output: evaluation tables, CSV emission, the peak
// histogram, and a small SVG line plot for SRS curves. All floating-point
// formatting goes through one fixed "%.12g" helper so identical values
// always produce identical bytes.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "shockcal/calibnet.hpp"
#include "shockcal/errors.hpp"
#include "shockcal/metrics.hpp"

namespace shockcal {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct MethodReport {
    std::string method;
    EvalReport report;
};

inline std::string format_eval_csv(const std::vector<MethodReport>& rows) {
    std::string out = "method,eps_p,eps_s,n\n";
    for (const auto& r : rows) {
        out += r.method;
        out += ',';
        out += fmt_g(r.report.eps_p);
        out += ',';
        out += fmt_g(r.report.eps_s);
        out += ',';
        out += std::to_string(r.report.n);
        out += '\n';
    }
    return out;
}

inline std::string format_eval_table(const std::vector<MethodReport>& rows) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof(line), "%-8s %12s %12s %8s\n", "method", "eps_p [%]", "eps_s", "n");
    out += line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%-8s %12.2f %12.1f %8zu\n", r.method.c_str(),
                      100.0 * r.report.eps_p, r.report.eps_s, r.report.n);
        out += line;
    }
    return out;
}

// 10 logarithmic bins over [lo, hi]; values outside are clamped into the
// edge bins.
inline std::string format_peak_histogram_csv(const std::vector<double>& peaks, double lo,
                                             double hi, int n_bins = 10) {
    if (!(lo > 0.0) || !(lo < hi) || n_bins < 1)
        throw InvalidConfig("format_peak_histogram_csv: bad bin range");
    std::vector<std::size_t> counts(n_bins, 0);
    const double log_lo = std::log(lo);
    const double log_hi = std::log(hi);
    for (double p : peaks) {
        int bin = 0;
        if (p > 0.0)
            bin = static_cast<int>(static_cast<double>(n_bins) * (std::log(p) - log_lo) /
                                   (log_hi - log_lo));
        bin = std::min(std::max(bin, 0), n_bins - 1);
        ++counts[bin];
    }
    std::string out = "bin_lo_g,bin_hi_g,count\n";
    for (int b = 0; b < n_bins; ++b) {
        const double b_lo = std::exp(log_lo + (log_hi - log_lo) * b / n_bins);
        const double b_hi = std::exp(log_lo + (log_hi - log_lo) * (b + 1) / n_bins);
        out += fmt_g(b_lo) + "," + fmt_g(b_hi) + "," + std::to_string(counts[b]) + "\n";
    }
    return out;
}

inline std::string format_loss_trace_csv(const LossTrace& trace) {
    std::string out = "epoch,mean_shape_loss,mean_peak_loss\n";
    for (std::size_t e = 0; e < trace.shape_loss.size(); ++e) {
        out += std::to_string(e + 1);
        out += ',';
        out += fmt_g(trace.shape_loss[e]);
        out += ',';
        out += fmt_g(trace.peak_loss[e]);
        out += '\n';
    }
    return out;
}

inline std::string format_srs_csv(const std::vector<double>& freqs,
                                  const std::vector<double>& srs_low,
                                  const std::vector<double>& srs_high,
                                  const std::vector<double>& srs_calibrated) {
    if (freqs.size() != srs_low.size() || freqs.size() != srs_high.size() ||
        freqs.size() != srs_calibrated.size())
        throw MismatchedSets("format_srs_csv: column lengths differ");
    std::string out = "freq_hz,srs_low,srs_high,srs_calibrated\n";
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        out += fmt_g(freqs[i]) + "," + fmt_g(srs_low[i]) + "," + fmt_g(srs_high[i]) + "," +
               fmt_g(srs_calibrated[i]) + "\n";
    }
    return out;
}

// Minimal log-log line plot; purely a convenience view of the SRS CSV.
inline std::string render_srs_svg(const std::vector<double>& freqs,
                                  const std::vector<std::vector<double>>& series,
                                  const std::vector<std::string>& labels) {
    const int width = 860, height = 520, margin = 60;
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (double f : freqs) {
        x_lo = std::min(x_lo, f);
        x_hi = std::max(x_hi, f);
    }
    for (const auto& s : series)
        for (double v : s)
            if (v > 0.0) {
                y_lo = std::min(y_lo, v);
                y_hi = std::max(y_hi, v);
            }
    if (!(x_lo > 0.0) || !(y_lo > 0.0) || x_lo >= x_hi)
        return "<svg xmlns='http://www.w3.org/2000/svg'/>";
    if (y_lo == y_hi) y_hi = 2.0 * y_lo;

    auto px = [&](double f) {
        return margin + (width - 2.0 * margin) * (std::log10(f) - std::log10(x_lo)) /
                            (std::log10(x_hi) - std::log10(x_lo));
    };
    auto py = [&](double v) {
        return height - margin -
               (height - 2.0 * margin) * (std::log10(v) - std::log10(y_lo)) /
                   (std::log10(y_hi) - std::log10(y_lo));
    };

    const char* colors[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44"};
    std::string svg = "<svg xmlns='http://www.w3.org/2000/svg' width='" + std::to_string(width) +
                      "' height='" + std::to_string(height) + "'>\n";
    svg += "<rect width='100%' height='100%' fill='white'/>\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "<line x1='%d' y1='%d' x2='%d' y2='%d' stroke='black'/>\n"
                  "<line x1='%d' y1='%d' x2='%d' y2='%d' stroke='black'/>\n",
                  margin, height - margin, width - margin, height - margin, margin, margin,
                  margin, height - margin);
    svg += buf;
    for (std::size_t s = 0; s < series.size(); ++s) {
        svg += "<polyline fill='none' stroke='";
        svg += colors[s % 4];
        svg += "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            const double v = std::max(series[s][i], y_lo);
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(freqs[i]), py(v));
            svg += buf;
        }
        svg += "'/>\n";
        if (s < labels.size()) {
            std::snprintf(buf, sizeof(buf),
                          "<text x='%d' y='%d' fill='%s' font-size='13'>%s</text>\n",
                          width - margin - 120, margin + 18 * static_cast<int>(s + 1),
                          colors[s % 4], labels[s].c_str());
            svg += buf;
        }
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x='%d' y='%d' font-size='13'>natural frequency [Hz], log</text>\n"
                  "<text x='12' y='%d' font-size='13' transform='rotate(-90 16 %d)'>maximax "
                  "response [g], log</text>\n",
                  width / 2 - 80, height - 20, height / 2, height / 2);
    svg += buf;
    svg += "</svg>\n";
    return svg;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("write failure on " + path);
}

}  // namespace shockcal

// Core signal types and preprocessing: peak detection, peak-centred
// windowing, and normalization into (shape, peak) form.
//
// Conventions used throughout the library:
//   - the preprocessing peak is the maximum ABSOLUTE sample (shock ringing
//     goes negative), ties broken by smallest index;
//   - preprocessed signals are 3000 samples at 200 kHz with the peak
//     sample at index 500 (2.5 ms before, 12.5 ms after, peak inclusive).

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "shockcal/errors.hpp"

namespace shockcal {

inline constexpr std::size_t kSignalLength = 3000;
inline constexpr std::size_t kPeakIndex = 500;
inline constexpr double kSampleRateHz = 200000.0;

// Fixed-length acceleration time series in g.
struct ShockSignal {
    std::vector<double> samples;
    double sample_rate = kSampleRateHz;

    std::size_t size() const { return samples.size(); }
    double operator[](std::size_t i) const { return samples[i]; }
};

// Scale-free shape (unit max-abs) plus the magnitude it was peeled from.
struct NormalizedSignal {
    std::vector<double> shape;
    double peak = 0.0;  // max |original sample|, in g; strictly positive
    double sample_rate = kSampleRateHz;
};

// Co-registered low-end/high-end signals from one synthetic drop.
struct SignalPair {
    ShockSignal low;
    ShockSignal high;
    int drop_id = 0;
};

struct PeakInfo {
    std::size_t index = 0;
    double value = 0.0;  // signed sample at the peak index
};

namespace detail {

inline void require_finite(const ShockSignal& s, const char* who) {
    if (s.samples.empty())
        throw DegenerateSignal(std::string(who) + ": empty signal");
    for (double v : s.samples)
        if (!std::isfinite(v))
            throw DegenerateSignal(std::string(who) + ": non-finite sample");
}

}  // namespace detail

// Index and signed value of the max-abs sample; ties -> smallest index.
inline PeakInfo detect_peak(const ShockSignal& s) {
    detail::require_finite(s, "detect_peak");
    std::size_t best = 0;
    double best_abs = -1.0;
    for (std::size_t j = 0; j < s.samples.size(); ++j) {
        const double a = std::fabs(s.samples[j]);
        if (a > best_abs) {
            best_abs = a;
            best = j;
        }
    }
    if (best_abs == 0.0)
        throw DegenerateSignal("detect_peak: all-zero signal");
    return {best, s.samples[best]};
}

// Cuts (or zero-pads) the record to kSignalLength samples with the peak
// at kPeakIndex. Samples outside the record are zero: no excitation.
inline ShockSignal window_around_peak(const ShockSignal& raw) {
    const PeakInfo peak = detect_peak(raw);
    ShockSignal out;
    out.sample_rate = raw.sample_rate;
    out.samples.assign(kSignalLength, 0.0);
    const std::ptrdiff_t start =
        static_cast<std::ptrdiff_t>(peak.index) - static_cast<std::ptrdiff_t>(kPeakIndex);
    for (std::size_t i = 0; i < kSignalLength; ++i) {
        const std::ptrdiff_t src = start + static_cast<std::ptrdiff_t>(i);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(raw.samples.size()))
            out.samples[i] = raw.samples[static_cast<std::size_t>(src)];
    }
    return out;
}

inline NormalizedSignal normalize(const ShockSignal& s) {
    const PeakInfo peak = detect_peak(s);
    NormalizedSignal n;
    n.peak = std::fabs(peak.value);
    n.sample_rate = s.sample_rate;
    n.shape.resize(s.samples.size());
    for (std::size_t j = 0; j < s.samples.size(); ++j)
        n.shape[j] = s.samples[j] / n.peak;
    return n;
}

inline ShockSignal denormalize(const NormalizedSignal& n) {
    if (!(n.peak > 0.0))
        throw NonPositivePeak("denormalize: peak must be positive");
    ShockSignal s;
    s.sample_rate = n.sample_rate;
    s.samples.resize(n.shape.size());
    for (std::size_t j = 0; j < n.shape.size(); ++j)
        s.samples[j] = n.shape[j] * n.peak;
    return s;
}

}  // namespace shockcal

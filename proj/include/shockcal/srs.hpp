// Shock Response Spectrum: maximax absolute-acceleration response of a
// bank of base-excited SDOF oscillators.
//
// Two backends with one contract:
//   srs_maximax  - ramp-invariant recursive filter (Smallwood
//                  coefficients), the production path;
//   srs_oracle   - direct RK4 integration of the SDOF equation at an
//                  oversampled step, kept as an independent check.
//
// Both treat the base acceleration as piecewise linear between samples
// and record the response magnitude at the sample instants, so they are
// comparable point by point.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "shockcal/errors.hpp"
#include "shockcal/parallel.hpp"
#include "shockcal/signal.hpp"

namespace shockcal {

inline constexpr double kDefaultSrsQ = 10.0;
inline constexpr double kDefaultSrsFminHz = 100.0;
inline constexpr double kDefaultSrsFmaxHz = 10000.0;
inline constexpr int kDefaultSrsPointsPerOctave = 6;

// (natural frequency, maximax absolute acceleration) pairs.
struct SrsCurve {
    std::vector<double> freqs;   // Hz, strictly increasing
    std::vector<double> values;  // g, >= 0
    double q_factor = kDefaultSrsQ;
};

// Geometric grid from f_min to f_max, nominally spaced 2^(1/points_per_octave).
// The count is rounded so both endpoints are hit exactly.
inline std::vector<double> log_freq_grid(double f_min, double f_max, int points_per_octave) {
    if (!(f_min > 0.0) || !(f_min <= f_max) || points_per_octave < 1)
        throw InvalidRange("log_freq_grid: need 0 < f_min <= f_max and points_per_octave >= 1");
    if (f_min == f_max) return {f_min};

    const double octaves = std::log2(f_max / f_min);
    const auto count = static_cast<std::size_t>(std::llround(points_per_octave * octaves)) + 1;
    std::vector<double> freqs(std::max<std::size_t>(count, 2));
    const double ratio = f_max / f_min;
    const double denom = static_cast<double>(freqs.size() - 1);
    for (std::size_t k = 0; k < freqs.size(); ++k)
        freqs[k] = f_min * std::pow(ratio, static_cast<double>(k) / denom);
    freqs.front() = f_min;
    freqs.back() = f_max;
    return freqs;
}

namespace detail {

// Smallwood ramp-invariant coefficients for the absolute-acceleration
// model: y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] + 2C y[n-1] - E^2 y[n-2].
struct SdofCoeffs {
    double b0, b1, b2;
    double c2;   // 2C
    double e2;   // E^2
};

inline SdofCoeffs sdof_absacc_coeffs(double natural_freq_hz, double sample_rate, double zeta) {
    const double ot = 2.0 * std::numbers::pi * natural_freq_hz / sample_rate;
    SdofCoeffs k{};
    if (ot < 1e-3) {
        // series expansion; avoids E*sin(K)/K cancellation at tiny omega*T
        const double ot2 = ot * ot;
        const double z2 = zeta * zeta;
        const double zot = zeta * ot;
        k.b0 = zot + ot2 * (1.0 / 6.0 - z2 * 2.0 / 3.0);
        k.b1 = ot2 * (1.0 - z2) * 2.0 / 3.0;
        k.b2 = -zot + ot2 * (1.0 / 6.0 + z2 * 4.0 / 3.0);
        const double a1p2 = 2.0 * zot + (1.0 - 2.0 * z2) * ot2;
        const double a2m1 = -2.0 * zot + 2.0 * z2 * ot2;
        k.c2 = 2.0 - a1p2;
        k.e2 = a2m1 + 1.0;
    } else {
        const double e = std::exp(-zeta * ot);
        const double kk = ot * std::sqrt(1.0 - zeta * zeta);
        const double c = e * std::cos(kk);
        const double s = e * std::sin(kk);
        const double sp = s / kk;
        k.b0 = 1.0 - sp;
        k.b1 = 2.0 * (sp - c);
        k.b2 = e * e - sp;
        k.c2 = 2.0 * c;
        k.e2 = e * e;
    }
    return k;
}

inline double sdof_filter_maximax(const std::vector<double>& x, const SdofCoeffs& k) {
    double y1 = 0.0, y2 = 0.0, x1 = 0.0, x2 = 0.0;
    double peak = 0.0;
    for (double xi : x) {
        const double y = k.b0 * xi + k.b1 * x1 + k.b2 * x2 + k.c2 * y1 - k.e2 * y2;
        peak = std::max(peak, std::fabs(y));
        y2 = y1;
        y1 = y;
        x2 = x1;
        x1 = xi;
    }
    return peak;
}

// Full filtered response, for callers that need the waveform rather than
// its maximax (the synthetic rig uses this as a sensor-resonance model).
inline std::vector<double> sdof_filter_response(const std::vector<double>& x,
                                                const SdofCoeffs& k) {
    std::vector<double> out(x.size());
    double y1 = 0.0, y2 = 0.0, x1 = 0.0, x2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double y = k.b0 * x[i] + k.b1 * x1 + k.b2 * x2 + k.c2 * y1 - k.e2 * y2;
        out[i] = y;
        y2 = y1;
        y1 = y;
        x2 = x1;
        x1 = x[i];
    }
    return out;
}

inline void check_srs_args(const ShockSignal& s, const std::vector<double>& freqs,
                           double q_factor) {
    require_finite(s, "srs");
    if (!(q_factor > 0.5))
        throw InvalidRange("srs: q_factor must exceed 0.5");
    const double nyquist = s.sample_rate / 2.0;
    for (double f : freqs) {
        if (!(f > 0.0))
            throw InvalidRange("srs: natural frequencies must be positive");
        if (f >= nyquist)
            throw FrequencyAboveNyquist("srs: natural frequency at or above Nyquist");
    }
}

}  // namespace detail

inline SrsCurve srs_maximax(const ShockSignal& s, const std::vector<double>& freqs,
                            double q_factor = kDefaultSrsQ) {
    detail::check_srs_args(s, freqs, q_factor);
    const double zeta = 1.0 / (2.0 * q_factor);
    SrsCurve curve;
    curve.freqs = freqs;
    curve.values.assign(freqs.size(), 0.0);
    curve.q_factor = q_factor;
    parallel_for_chunks(freqs.size(), 4, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto coeffs = detail::sdof_absacc_coeffs(freqs[i], s.sample_rate, zeta);
            curve.values[i] = detail::sdof_filter_maximax(s.samples, coeffs);
        }
    });
    return curve;
}

// Direct integration of  u'' + 2*zeta*wn*u' + wn^2*u = -a_base(t)  with RK4
// substeps and linear interpolation of the base acceleration. The absolute
// acceleration is -2*zeta*wn*u' - wn^2*u, recorded at the sample instants.
inline SrsCurve srs_oracle(const ShockSignal& s, const std::vector<double>& freqs,
                           double q_factor = kDefaultSrsQ, int oversample = 10) {
    detail::check_srs_args(s, freqs, q_factor);
    if (oversample < 1)
        throw InvalidRange("srs_oracle: oversample must be >= 1");
    const double zeta = 1.0 / (2.0 * q_factor);
    const double dt = 1.0 / (s.sample_rate * oversample);

    SrsCurve curve;
    curve.freqs = freqs;
    curve.values.assign(freqs.size(), 0.0);
    curve.q_factor = q_factor;

    const auto& x = s.samples;
    parallel_for_chunks(freqs.size(), 1, [&](std::size_t begin, std::size_t end) {
        for (std::size_t fi = begin; fi < end; ++fi) {
            const double wn = 2.0 * std::numbers::pi * freqs[fi];
            const double wn2 = wn * wn;
            const double two_zw = 2.0 * zeta * wn;
            double u = 0.0, v = 0.0;
            double peak = 0.0;
            for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                peak = std::max(peak, std::fabs(-two_zw * v - wn2 * u));
                const double a0 = x[i];
                const double slope = (x[i + 1] - x[i]) * s.sample_rate;
                for (int sub = 0; sub < oversample; ++sub) {
                    const double t0 = sub * dt;
                    auto accel = [&](double t, double uu, double vv) {
                        const double base = a0 + slope * t;
                        return -two_zw * vv - wn2 * uu - base;
                    };
                    const double k1u = v, k1v = accel(t0, u, v);
                    const double k2u = v + 0.5 * dt * k1v;
                    const double k2v = accel(t0 + 0.5 * dt, u + 0.5 * dt * k1u, v + 0.5 * dt * k1v);
                    const double k3u = v + 0.5 * dt * k2v;
                    const double k3v = accel(t0 + 0.5 * dt, u + 0.5 * dt * k2u, v + 0.5 * dt * k2v);
                    const double k4u = v + dt * k3v;
                    const double k4v = accel(t0 + dt, u + dt * k3u, v + dt * k3v);
                    u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
                    v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
                }
            }
            peak = std::max(peak, std::fabs(-two_zw * v - wn2 * u));
            curve.values[fi] = peak;
        }
    });
    return curve;
}

}  // namespace shockcal

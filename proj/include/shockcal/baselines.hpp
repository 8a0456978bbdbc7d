// The three comparison methods: zero-phase FIR low-pass filtering, ridge
// linear regression on normalized shapes with a scalar peak regressor,
// and the PPN-less autoencoder.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "shockcal/calibnet.hpp"
#include "shockcal/errors.hpp"
#include "shockcal/signal.hpp"

namespace shockcal {

// --- low-pass filter --------------------------------------------------------

struct FirFilter {
    std::vector<double> taps;  // odd length, symmetric, unit DC gain
    double cutoff_hz = 0.0;
    double transition_hz = 0.0;
    double sample_rate = kSampleRateHz;
    std::string design = "hamming-windowed-sinc";
};

// Hamming-windowed sinc low-pass. Tap count follows the classic Hamming
// estimate N ~ 3.3 * fs / transition, rounded up to odd; taps are
// normalized to exact unit DC gain.
inline FirFilter design_lowpass(double cutoff_hz, double sample_rate = kSampleRateHz,
                                double transition_hz = 2000.0) {
    if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate / 2.0)
        throw InvalidCutoff("design_lowpass: cutoff must lie in (0, Nyquist)");
    if (!(transition_hz > 0.0))
        throw InvalidCutoff("design_lowpass: transition width must be positive");

    auto n_taps = static_cast<std::size_t>(std::ceil(3.3 * sample_rate / transition_hz));
    if (n_taps % 2 == 0) ++n_taps;
    if (n_taps < 3) n_taps = 3;

    FirFilter f;
    f.cutoff_hz = cutoff_hz;
    f.transition_hz = transition_hz;
    f.sample_rate = sample_rate;
    f.taps.resize(n_taps);

    const double fc = cutoff_hz / sample_rate;  // cycles per sample
    const std::size_t mid = n_taps / 2;
    // fill half and mirror so symmetry is exact in floating point
    for (std::size_t i = 0; i <= mid; ++i) {
        const auto k = static_cast<double>(mid - i);
        const double x = 2.0 * std::numbers::pi * fc * k;
        const double sinc = i == mid ? 2.0 * fc : std::sin(x) / (std::numbers::pi * k);
        const double window =
            0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(n_taps - 1));
        f.taps[i] = sinc * window;
        f.taps[n_taps - 1 - i] = f.taps[i];
    }
    double sum = 0.0;
    for (double t : f.taps) sum += t;
    for (double& t : f.taps) t /= sum;
    return f;
}

namespace detail {

// Centered symmetric-kernel convolution with reflected edges.
inline std::vector<double> centered_conv_reflect(const std::vector<double>& x,
                                                 const std::vector<double>& taps) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
    auto reflect_at = [&](std::ptrdiff_t i) -> double {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * (n - 1) - i;
        }
        return x[static_cast<std::size_t>(i)];
    };
    std::vector<double> y(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -half; k <= half; ++k)
            acc += taps[static_cast<std::size_t>(k + half)] * reflect_at(i + k);
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

}  // namespace detail

// Forward-backward application: with symmetric taps this is two centered
// convolution passes, so there is no group delay and the peak stays put.
// Edges are handled by reflection.
inline ShockSignal apply_zero_phase(const FirFilter& f, const ShockSignal& s) {
    detail::require_finite(s, "apply_zero_phase");
    if (f.taps.size() >= s.samples.size())
        throw FilterTooLong("apply_zero_phase: filter longer than signal");
    ShockSignal out;
    out.sample_rate = s.sample_rate;
    out.samples = detail::centered_conv_reflect(
        detail::centered_conv_reflect(s.samples, f.taps), f.taps);
    return out;
}

// --- linear regression ------------------------------------------------------

// Ridge map from normalized low-end shapes to normalized high-end shapes,
// plus a scalar ridge regressor for the peak. Predictions are reassembled
// the same way calibrate() does: unit-renormalized shape times predicted
// peak.
struct LinearMap {
    Mat matrix;      // signal_len x signal_len, applied to centered shapes
    Vec intercept;   // signal_len
    Vec input_mean;  // signal_len
    double ridge_lambda = 1.0;
    double peak_slope = 1.0;
    double peak_intercept = 0.0;
    bool fitted = false;
};

inline LinearMap fit_linear(const std::vector<SignalPair>& train_pairs,
                            double ridge_lambda = 1.0) {
    if (train_pairs.size() < 2)
        throw InvalidConfig("fit_linear: need at least 2 training pairs");
    if (ridge_lambda < 0.0)
        throw InvalidConfig("fit_linear: ridge lambda must be non-negative");

    const auto n = static_cast<Eigen::Index>(train_pairs.size());
    const auto len = static_cast<Eigen::Index>(train_pairs.front().low.size());
    Mat x(n, len), y(n, len);
    Vec px(n), pref(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pair = train_pairs[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(pair.low.size()) != len ||
            static_cast<Eigen::Index>(pair.high.size()) != len)
            throw MismatchedSets("fit_linear: inconsistent signal lengths");
        const NormalizedSignal lo = normalize(pair.low);
        const NormalizedSignal hi = normalize(pair.high);
        x.row(i) = Eigen::Map<const Vec>(lo.shape.data(), len).transpose();
        y.row(i) = Eigen::Map<const Vec>(hi.shape.data(), len).transpose();
        px[i] = lo.peak;
        pref[i] = hi.peak;
    }

    LinearMap lm;
    lm.ridge_lambda = ridge_lambda;
    lm.input_mean = x.colwise().mean().transpose();
    const Vec y_mean = y.colwise().mean().transpose();
    const Mat xc = x.rowwise() - lm.input_mean.transpose();
    const Mat yc = y.rowwise() - y_mean.transpose();

    Mat gram = xc.transpose() * xc;
    gram.diagonal().array() += ridge_lambda;
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() != Eigen::Success)
        throw SingularSystem("fit_linear: normal equations not positive definite (lambda too small)");
    // A solves (X'X + lambda I) A = X'Y; predictions are A' (x - mean) + y_mean
    const Mat a = llt.solve(xc.transpose() * yc);
    lm.matrix = a.transpose();
    lm.intercept = y_mean;

    // scalar ridge for the peak
    const double px_mean = px.mean();
    const double pref_mean = pref.mean();
    const Vec pxc = px.array() - px_mean;
    const Vec prefc = pref.array() - pref_mean;
    const double denom = pxc.squaredNorm() + ridge_lambda;
    if (denom <= 0.0)
        throw SingularSystem("fit_linear: degenerate peak regression");
    lm.peak_slope = pxc.dot(prefc) / denom;
    lm.peak_intercept = pref_mean - lm.peak_slope * px_mean;
    lm.fitted = true;
    return lm;
}

inline ShockSignal predict_linear(const LinearMap& lm, const ShockSignal& low) {
    if (!lm.fitted)
        throw InvalidConfig("predict_linear: map has not been fitted");
    const NormalizedSignal n = normalize(low);
    if (static_cast<Eigen::Index>(n.shape.size()) != lm.matrix.rows())
        throw MismatchedSets("predict_linear: signal length does not match fitted map");

    const Vec shape = Eigen::Map<const Vec>(n.shape.data(), static_cast<Eigen::Index>(n.shape.size()));
    const Vec mapped = lm.matrix * (shape - lm.input_mean) + lm.intercept;
    const double mapped_max = mapped.cwiseAbs().maxCoeff();
    if (mapped_max < 1e-9)
        throw DegenerateDecode("predict_linear: mapped shape is numerically zero");
    const double p_hat = lm.peak_slope * n.peak + lm.peak_intercept;

    ShockSignal out;
    out.sample_rate = low.sample_rate;
    out.samples.resize(n.shape.size());
    for (std::size_t j = 0; j < out.samples.size(); ++j)
        out.samples[j] = mapped[static_cast<Eigen::Index>(j)] / mapped_max * p_hat;
    return out;
}

// --- autoencoder baseline ---------------------------------------------------

// Same encoder/decoder topology as the full model, trained on the shape
// loss alone; it has no phi parameters at all.
struct AeModel {
    CalibDims dims;
    bool use_linf_term = true;
    ParamSet encoder;
    ParamSet decoder;

    std::size_t phi_param_count() const { return 0; }
};

inline AeModel ae_baseline(const std::vector<SignalPair>& train_pairs, const TrainConfig& cfg,
                           const CalibDims& dims = {}, std::uint64_t init_seed = 1,
                           LossTrace* trace_out = nullptr) {
    CalibModel scratch = make_calib_model(dims, AblationFlags{}, init_seed);
    LossTrace trace = detail::train_networks(scratch, train_pairs, cfg, /*with_ppn=*/false);
    if (trace_out) *trace_out = std::move(trace);
    AeModel ae;
    ae.dims = dims;
    ae.encoder = std::move(scratch.encoder);
    ae.decoder = std::move(scratch.decoder);
    return ae;
}

// Inference without peak correction: the decoder output is scaled by the
// input peak p_x as-is.
inline ShockSignal ae_calibrate(const AeModel& ae, const ShockSignal& low) {
    const NormalizedSignal n = normalize(low);
    if (static_cast<int>(n.shape.size()) != ae.dims.signal_len)
        throw DimensionMismatch("ae_calibrate: signal length does not match model");
    const Vec x_n = Eigen::Map<const Vec>(n.shape.data(), static_cast<Eigen::Index>(n.shape.size()));
    const Vec y_n = forward(ae.decoder, Mat(forward(ae.encoder, Mat(x_n.transpose())))).row(0).transpose();

    ShockSignal out;
    out.sample_rate = low.sample_rate;
    out.samples.resize(n.shape.size());
    for (std::size_t j = 0; j < out.samples.size(); ++j)
        out.samples[j] = y_n[static_cast<Eigen::Index>(j)] * n.peak;
    return out;
}

}  // namespace shockcal

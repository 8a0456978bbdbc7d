// The calibration model: encoder/decoder over normalized shapes plus a
// peak-prediction branch (PPN), its two losses, the end-to-end calibrate
// path, and the ablation switches.
//
// Gradient partition: the shape loss trains (encoder, decoder) only; the
// peak loss trains the PPN only. The latent z enters the PPN as a value
// with no gradient flowing back to the encoder.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "shockcal/errors.hpp"
#include "shockcal/nn.hpp"
#include "shockcal/rng.hpp"
#include "shockcal/signal.hpp"

namespace shockcal {

// Which model components to disable. Default: full model.
struct AblationFlags {
    bool ppn_uses_z = true;    // false: feed zeros instead of z into the PPN
    bool use_linf_term = true; // false: shape loss is the L2 term only
    bool ppn_residual = true;  // false: PPN output is p_y itself, not a residual
};

struct CalibDims {
    int signal_len = 3000;
    int encoder_hidden = 1024;
    int latent = 256;
    int decoder_hidden = 1024;
    int z_compressed = 8;
    int ppn_hidden = 16;

    // Scaled-down instance for gradient checking harnesses.
    static CalibDims reduced(int signal_len, int latent, int z_compressed) {
        CalibDims d;
        d.signal_len = signal_len;
        d.latent = latent;
        d.z_compressed = z_compressed;
        d.encoder_hidden = std::max(2 * latent, 4);
        d.decoder_hidden = d.encoder_hidden;
        d.ppn_hidden = std::max(2 * z_compressed, 2);
        return d;
    }
};

inline constexpr double kDefaultPeakScale = 10000.0;  // g; makes PPN inputs O(1)

struct CalibModel {
    CalibDims dims;
    AblationFlags flags;
    double peak_scale = kDefaultPeakScale;
    ParamSet encoder;       // theta_1
    ParamSet decoder;       // theta_2
    ParamSet ppn_compress;  // phi: z -> z_compressed
    ParamSet ppn_head;      // phi: [z_compressed, p_x/peak_scale] -> residual (scaled)

    std::size_t theta_param_count() const { return encoder.size() + decoder.size(); }
    std::size_t phi_param_count() const { return ppn_compress.size() + ppn_head.size(); }
};

inline CalibModel make_calib_model(const CalibDims& dims = {}, const AblationFlags& flags = {},
                                   std::uint64_t seed = 1) {
    CalibModel m;
    m.dims = dims;
    m.flags = flags;
    m.encoder = ParamSet::mlp({dims.signal_len, dims.encoder_hidden, dims.latent});
    m.decoder = ParamSet::mlp({dims.latent, dims.decoder_hidden, dims.signal_len});
    m.ppn_compress = ParamSet::mlp({dims.latent, dims.z_compressed}, Activation::kRelu,
                                   Activation::kRelu);
    m.ppn_head = ParamSet::mlp({dims.z_compressed + 1, dims.ppn_hidden, 1});
    RngStream rng(seed, 0x696E6974ULL);  // "init"
    he_uniform_init(m.encoder, rng);
    he_uniform_init(m.decoder, rng);
    he_uniform_init(m.ppn_compress, rng);
    he_uniform_init(m.ppn_head, rng);
    return m;
}

// --- forward pieces -------------------------------------------------------

inline Mat encode(const CalibModel& m, const Mat& x_n_rows) {
    return forward(m.encoder, x_n_rows);
}

inline Vec encode(const CalibModel& m, const Vec& x_n) {
    return encode(m, Mat(x_n.transpose())).row(0).transpose();
}

inline Mat decode(const CalibModel& m, const Mat& z_rows) { return forward(m.decoder, z_rows); }

inline Vec decode(const CalibModel& m, const Vec& z) {
    return decode(m, Mat(z.transpose())).row(0).transpose();
}

namespace detail {

// PPN forward over a batch. Returns p_y; optionally fills the tapes and
// the concatenated head input for the backward pass.
inline Vec ppn_forward(const CalibModel& m, const Vec& p_x, const Mat& z,
                       ForwardTape* compress_tape = nullptr, ForwardTape* head_tape = nullptr) {
    const Mat z_in = m.flags.ppn_uses_z ? z : Mat(Mat::Zero(z.rows(), z.cols()));
    const Mat z8 = forward(m.ppn_compress, z_in, compress_tape);
    Mat head_in(z.rows(), z8.cols() + 1);
    head_in.leftCols(z8.cols()) = z8;
    head_in.col(z8.cols()) = p_x / m.peak_scale;
    const Mat out = forward(m.ppn_head, head_in, head_tape);
    Vec p_res = m.peak_scale * out.col(0);
    return m.flags.ppn_residual ? Vec(p_x + p_res) : p_res;
}

}  // namespace detail

// Predicted high-end peak for one signal. With the residual connection and
// phi at zero, this is exactly p_x.
inline double ppn_predict(const CalibModel& m, double p_x, const Vec& z) {
    if (!(p_x > 0.0))
        throw NonPositivePeak("ppn_predict: input peak must be positive");
    if (z.size() != m.dims.latent)
        throw DimensionMismatch("ppn_predict: latent width mismatch");
    Vec px(1);
    px << p_x;
    return detail::ppn_forward(m, px, Mat(z.transpose()))(0);
}

// --- losses ---------------------------------------------------------------

// ||d||_2 + ||d||_inf on normalized shapes (L2 = Euclidean norm). The
// L-infinity term can be dropped for the ablation.
inline double loss_shape(const Vec& y_n, const Vec& y_ref_n, bool use_linf = true) {
    if (y_n.size() != y_ref_n.size())
        throw DimensionMismatch("loss_shape: vector lengths differ");
    const Vec d = y_n - y_ref_n;
    double value = d.norm();
    if (use_linf) value += d.cwiseAbs().maxCoeff();
    return value;
}

// Subgradients: the L2 term contributes d/||d||_2 (zero at d = 0); the
// L-infinity term routes entirely to the first max-abs coordinate.
inline Vec loss_shape_grad(const Vec& y_n, const Vec& y_ref_n, bool use_linf = true) {
    if (y_n.size() != y_ref_n.size())
        throw DimensionMismatch("loss_shape_grad: vector lengths differ");
    const Vec d = y_n - y_ref_n;
    const double l2 = d.norm();
    Vec g = l2 > 0.0 ? Vec(d / l2) : Vec(Vec::Zero(d.size()));
    if (use_linf) {
        Eigen::Index k = 0;
        double best = -1.0;
        for (Eigen::Index j = 0; j < d.size(); ++j) {
            const double a = std::fabs(d[j]);
            if (a > best) {
                best = a;
                k = j;
            }
        }
        if (d[k] > 0.0)
            g[k] += 1.0;
        else if (d[k] < 0.0)
            g[k] -= 1.0;
    }
    return g;
}

inline double loss_peak(double p_y, double p_ref) {
    if (!(p_ref > 0.0))
        throw NonPositivePeak("loss_peak: reference peak must be positive");
    return std::fabs(p_y - p_ref);
}

inline double loss_peak_grad(double p_y, double p_ref) {
    if (!(p_ref > 0.0))
        throw NonPositivePeak("loss_peak_grad: reference peak must be positive");
    if (p_y > p_ref) return 1.0;
    if (p_y < p_ref) return -1.0;
    return 0.0;
}

// --- end-to-end inference ---------------------------------------------------

// normalize -> encode -> decode -> re-normalize to unit max-abs -> scale by
// the PPN peak. The output peak is exactly p_y by construction.
inline ShockSignal calibrate(const CalibModel& m, const ShockSignal& x_r) {
    const NormalizedSignal n = normalize(x_r);
    if (static_cast<int>(n.shape.size()) != m.dims.signal_len)
        throw DimensionMismatch("calibrate: signal length does not match model");

    const Vec x_n = Eigen::Map<const Vec>(n.shape.data(), n.shape.size());
    const Vec z = encode(m, x_n);
    const Vec y_n = decode(m, z);

    const double y_max = y_n.cwiseAbs().maxCoeff();
    if (y_max < 1e-9)
        throw DegenerateDecode("calibrate: decoder output is numerically zero");
    const double p_y = ppn_predict(m, n.peak, z);

    ShockSignal out;
    out.sample_rate = x_r.sample_rate;
    out.samples.resize(n.shape.size());
    for (std::size_t j = 0; j < out.samples.size(); ++j)
        out.samples[j] = y_n[static_cast<Eigen::Index>(j)] / y_max * p_y;
    return out;
}

// --- training ---------------------------------------------------------------

struct TrainConfig {
    int epochs = 300;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

// Per-epoch mean losses over the training set.
struct LossTrace {
    std::vector<double> shape_loss;
    std::vector<double> peak_loss;
};

namespace detail {

inline constexpr std::uint64_t kShuffleStreamSalt = 0x73687566ULL;  // "shuf"

struct TrainingTensors {
    Mat x;      // N x L, normalized low-end shapes
    Mat y_ref;  // N x L, normalized high-end shapes
    Vec p_x;    // N, low-end max-abs peaks
    Vec p_ref;  // N, high-end max-abs peaks
};

inline TrainingTensors prepare_training_tensors(const std::vector<SignalPair>& pairs,
                                                int signal_len) {
    if (pairs.empty())
        throw EmptyDataset("train: no training pairs");
    TrainingTensors t;
    const auto n = static_cast<Eigen::Index>(pairs.size());
    t.x.resize(n, signal_len);
    t.y_ref.resize(n, signal_len);
    t.p_x.resize(n);
    t.p_ref.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pair = pairs[static_cast<std::size_t>(i)];
        if (static_cast<int>(pair.low.size()) != signal_len ||
            static_cast<int>(pair.high.size()) != signal_len)
            throw DimensionMismatch("train: pair length does not match model signal length");
        const NormalizedSignal low = normalize(pair.low);
        const NormalizedSignal high = normalize(pair.high);
        t.x.row(i) = Eigen::Map<const Vec>(low.shape.data(), signal_len).transpose();
        t.y_ref.row(i) = Eigen::Map<const Vec>(high.shape.data(), signal_len).transpose();
        t.p_x[i] = low.peak;
        t.p_ref[i] = high.peak;
    }
    return t;
}

// Gradients and loss sums for one fixed chunk of a batch.
struct ChunkResult {
    ParamSet enc, dec, comp, head;
    double shape_loss_sum = 0.0;
    double peak_loss_sum = 0.0;
};

// Forward/backward over rows [chunk_begin, chunk_end) of the batch index
// list. Loss gradients are scaled by inv_batch so summing chunks yields
// the batch-mean gradient.
inline void compute_chunk(const CalibModel& m, const TrainingTensors& data,
                          const std::vector<Eigen::Index>& batch_rows, std::size_t chunk_begin,
                          std::size_t chunk_end, double inv_batch, bool with_ppn,
                          ChunkResult& out) {
    const auto rows = static_cast<Eigen::Index>(chunk_end - chunk_begin);
    const int len = m.dims.signal_len;
    Mat xb(rows, len), yb(rows, len);
    Vec pxb(rows), prefb(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Eigen::Index src = batch_rows[chunk_begin + static_cast<std::size_t>(r)];
        xb.row(r) = data.x.row(src);
        yb.row(r) = data.y_ref.row(src);
        pxb[r] = data.p_x[src];
        prefb[r] = data.p_ref[src];
    }

    ForwardTape enc_tape, dec_tape;
    const Mat z = forward(m.encoder, xb, &enc_tape);
    const Mat y = forward(m.decoder, z, &dec_tape);

    Mat dy(rows, len);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Vec yr = y.row(r).transpose();
        const Vec tr = yb.row(r).transpose();
        out.shape_loss_sum += loss_shape(yr, tr, m.flags.use_linf_term);
        dy.row(r) = (inv_batch * loss_shape_grad(yr, tr, m.flags.use_linf_term)).transpose();
    }
    const Mat dz = backward(m.decoder, dec_tape, dy, out.dec, /*need_input_grad=*/true);
    backward(m.encoder, enc_tape, dz, out.enc, /*need_input_grad=*/false);

    if (!with_ppn) return;

    // z is a value here: no gradient flows back through it (stop-gradient).
    ForwardTape comp_tape, head_tape;
    const Vec p_y = ppn_forward(m, pxb, z, &comp_tape, &head_tape);
    Mat dout(rows, 1);
    for (Eigen::Index r = 0; r < rows; ++r) {
        out.peak_loss_sum += loss_peak(p_y[r], prefb[r]);
        dout(r, 0) = inv_batch * m.peak_scale * loss_peak_grad(p_y[r], prefb[r]);
    }
    const Mat dconcat = backward(m.ppn_head, head_tape, dout, out.head, /*need_input_grad=*/true);
    const Mat dz8 = dconcat.leftCols(m.dims.z_compressed);
    backward(m.ppn_compress, comp_tape, dz8, out.comp, /*need_input_grad=*/false);
}

// Shared mini-batch loop. `with_ppn=false` trains the encoder/decoder only
// (the autoencoder baseline path); phi is neither evaluated nor updated.
inline LossTrace train_networks(CalibModel& model, const std::vector<SignalPair>& pairs,
                                const TrainConfig& cfg, bool with_ppn) {
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw InvalidConfig("train: epochs and batch size must be positive");
    const TrainingTensors data = prepare_training_tensors(pairs, model.dims.signal_len);
    const auto n = static_cast<std::size_t>(data.x.rows());

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.learning_rate;
    AdamState enc_state(model.encoder.size(), adam_cfg);
    AdamState dec_state(model.decoder.size(), adam_cfg);
    AdamState comp_state(model.ppn_compress.size(), adam_cfg);
    AdamState head_state(model.ppn_head.size(), adam_cfg);

    // One gradient chunk per batch: sample-level parallelism is not worth
    // the reduction traffic here, and a single chunk keeps results
    // identical for every SHOCKCAL_THREADS setting by construction.
    ChunkResult chunk;
    chunk.enc = model.encoder.zeros_like();
    chunk.dec = model.decoder.zeros_like();
    chunk.comp = model.ppn_compress.zeros_like();
    chunk.head = model.ppn_head.zeros_like();

    std::vector<Eigen::Index> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<Eigen::Index>(i);
    RngStream shuffle_rng(cfg.seed, kShuffleStreamSalt);

    LossTrace trace;
    trace.shape_loss.reserve(cfg.epochs);
    trace.peak_loss.reserve(cfg.epochs);

    std::vector<Eigen::Index> batch_rows;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_shape = 0.0, epoch_peak = 0.0;

        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t batch = std::min<std::size_t>(cfg.batch_size, n - start);
            batch_rows.assign(order.begin() + start, order.begin() + start + batch);
            const double inv_batch = 1.0 / static_cast<double>(batch);

            chunk.shape_loss_sum = 0.0;
            chunk.peak_loss_sum = 0.0;
            compute_chunk(model, data, batch_rows, 0, batch, inv_batch, with_ppn, chunk);
            epoch_shape += chunk.shape_loss_sum;
            epoch_peak += chunk.peak_loss_sum;

            adam_step(model.encoder.flat(), chunk.enc.flat(), enc_state);
            adam_step(model.decoder.flat(), chunk.dec.flat(), dec_state);
            if (with_ppn) {
                adam_step(model.ppn_compress.flat(), chunk.comp.flat(), comp_state);
                adam_step(model.ppn_head.flat(), chunk.head.flat(), head_state);
            }
        }

        trace.shape_loss.push_back(epoch_shape / static_cast<double>(n));
        trace.peak_loss.push_back(with_ppn ? epoch_peak / static_cast<double>(n) : 0.0);
    }
    return trace;
}

}  // namespace detail

// Joint mini-batch training of the two losses with the hard gradient
// partition. Deterministic given the config seed and the fixed-order
// chunk reduction.
inline LossTrace train(CalibModel& model, const std::vector<SignalPair>& pairs,
                       const TrainConfig& cfg) {
    return detail::train_networks(model, pairs, cfg, /*with_ppn=*/true);
}

// --- gradient-check harness ---------------------------------------------------

namespace detail {

// Smallest relu pre-activation magnitude across all four nets, plus the
// top-two gap of |y - y_ref| per sample and the peak-loss margin. Points
// too close to a subgradient kink are skipped by the harness.
inline double kink_margin(const CalibModel& m, const TrainingTensors& t) {
    double margin = 1e300;
    auto scan_relu = [&](const ParamSet& net, const Mat& input) {
        ForwardTape tape;
        forward(net, input, &tape);
        for (std::size_t l = 0; l < net.layer_count(); ++l)
            if (net.activation(l) == Activation::kRelu)
                margin = std::min(margin, tape.preacts[l].cwiseAbs().minCoeff());
        return forward(net, input);
    };

    const Mat z = scan_relu(m.encoder, t.x);
    const Mat y = scan_relu(m.decoder, z);
    const Mat z_in = m.flags.ppn_uses_z ? z : Mat(Mat::Zero(z.rows(), z.cols()));
    const Mat z8 = scan_relu(m.ppn_compress, z_in);
    Mat head_in(z.rows(), z8.cols() + 1);
    head_in.leftCols(z8.cols()) = z8;
    head_in.col(z8.cols()) = t.p_x / m.peak_scale;
    scan_relu(m.ppn_head, head_in);

    const Vec p_y = ppn_forward(m, t.p_x, z);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const Vec d = (y.row(r) - t.y_ref.row(r)).transpose().cwiseAbs();
        double top1 = -1.0, top2 = -1.0;
        for (Eigen::Index j = 0; j < d.size(); ++j) {
            if (d[j] > top1) {
                top2 = top1;
                top1 = d[j];
            } else if (d[j] > top2) {
                top2 = d[j];
            }
        }
        margin = std::min(margin, top1 - top2);
        margin = std::min(margin, std::fabs(p_y[r] - t.p_ref[r]) / m.peak_scale);
    }
    return margin;
}

inline TrainingTensors random_check_tensors(const CalibDims& dims, int n_samples,
                                            RngStream& rng) {
    TrainingTensors t;
    t.x.resize(n_samples, dims.signal_len);
    t.y_ref.resize(n_samples, dims.signal_len);
    t.p_x.resize(n_samples);
    t.p_ref.resize(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        Vec x(dims.signal_len), y(dims.signal_len);
        for (Eigen::Index j = 0; j < dims.signal_len; ++j) {
            x[j] = rng.uniform(-1.0, 1.0);
            y[j] = rng.uniform(-1.0, 1.0);
        }
        t.x.row(i) = (x / x.cwiseAbs().maxCoeff()).transpose();
        t.y_ref.row(i) = (y / y.cwiseAbs().maxCoeff()).transpose();
        t.p_x[i] = rng.log_uniform(500.0, 8000.0);
        t.p_ref[i] = t.p_x[i] * rng.uniform(0.8, 1.2);
    }
    return t;
}

}  // namespace detail

struct CalibGradCheckResult {
    double max_rel_err = 0.0;
    int points_checked = 0;
    int points_skipped = 0;  // kink-adjacent draws
};

// Checks analytic L^s gradients (with and without the L-inf term) against
// central finite differences over (theta_1, theta_2), and L^p gradients
// over phi, at `n_points` random parameter/input points. Draws that land
// within 1e-3 of a relu kink or an L-inf/L^p tie are redrawn.
// `corrupt_gradient` deliberately damages one analytic entry (negative
// control for the exit-code contract).
inline CalibGradCheckResult calibnet_grad_check(const CalibDims& dims, std::uint64_t seed,
                                                int n_points = 20,
                                                std::size_t coords_per_group = 150,
                                                double fd_step = 1e-5,
                                                bool corrupt_gradient = false) {
    CalibGradCheckResult result;

    // Returns the max relative error at this point, or -1 if the draw
    // landed too close to a kink and must be redrawn.
    auto check_point = [&](std::uint64_t point_seed, bool use_linf) -> double {
        AblationFlags flags;
        flags.use_linf_term = use_linf;
        CalibModel m = make_calib_model(dims, flags, point_seed);
        RngStream data_rng(point_seed, 0xDA7AULL);
        const auto t = detail::random_check_tensors(dims, 6, data_rng);
        if (detail::kink_margin(m, t) < 1e-3) return -1.0;

        const double inv_n = 1.0 / static_cast<double>(t.x.rows());
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(t.x.rows()));
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
        detail::ChunkResult grads;
        grads.enc = m.encoder.zeros_like();
        grads.dec = m.decoder.zeros_like();
        grads.comp = m.ppn_compress.zeros_like();
        grads.head = m.ppn_head.zeros_like();
        detail::compute_chunk(m, t, rows, 0, rows.size(), inv_n, /*with_ppn=*/true, grads);
        if (corrupt_gradient)
            for (double& v : grads.enc.flat()) v += 1e-2;

        // The peak loss is checked in peak_scale-normalized units (the
        // PPN's own working units); otherwise its O(1000 g) magnitude
        // drowns exact-zero gradients in finite-difference rounding noise.
        ParamSet comp_scaled = grads.comp;
        ParamSet head_scaled = grads.head;
        for (double& v : comp_scaled.flat()) v /= m.peak_scale;
        for (double& v : head_scaled.flat()) v /= m.peak_scale;

        auto shape_loss = [&] {
            const Mat y = forward(m.decoder, forward(m.encoder, t.x));
            double sum = 0.0;
            for (Eigen::Index r = 0; r < y.rows(); ++r)
                sum += loss_shape(y.row(r).transpose(), t.y_ref.row(r).transpose(),
                                  m.flags.use_linf_term);
            return sum * inv_n;
        };
        auto peak_loss_scaled = [&] {
            const Vec p_y = detail::ppn_forward(m, t.p_x, forward(m.encoder, t.x));
            double sum = 0.0;
            for (Eigen::Index r = 0; r < p_y.size(); ++r) sum += loss_peak(p_y[r], t.p_ref[r]);
            return sum * inv_n / m.peak_scale;
        };

        RngStream coord_rng(point_seed, 0xC04DULL);
        const GradCheckReport reports[] = {
            grad_check(shape_loss, m.encoder.flat(), grads.enc.flat(), coord_rng,
                       coords_per_group, fd_step),
            grad_check(shape_loss, m.decoder.flat(), grads.dec.flat(), coord_rng,
                       coords_per_group, fd_step),
            grad_check(peak_loss_scaled, m.ppn_compress.flat(), comp_scaled.flat(), coord_rng,
                       coords_per_group, fd_step),
            grad_check(peak_loss_scaled, m.ppn_head.flat(), head_scaled.flat(), coord_rng,
                       coords_per_group, fd_step),
        };
        double worst = 0.0;
        for (const auto& r : reports) worst = std::max(worst, r.max_rel_err);
        return worst;
    };

    const int max_attempts = 8 * n_points + 16;
    for (int attempt = 0; attempt < max_attempts && result.points_checked < n_points;
         ++attempt) {
        const std::uint64_t point_seed = seed + static_cast<std::uint64_t>(attempt);
        const double with_linf = check_point(point_seed, true);
        const double without_linf = with_linf < 0.0 ? -1.0 : check_point(point_seed, false);
        if (with_linf < 0.0 || without_linf < 0.0) {
            ++result.points_skipped;
            continue;
        }
        result.max_rel_err = std::max({result.max_rel_err, with_linf, without_linf});
        ++result.points_checked;
    }
    return result;
}

}  // namespace shockcal

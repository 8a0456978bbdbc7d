// Minimal dense-network kernel: parameter container with stable flat
// indexing, forward/backward passes over sample batches, Adam, and a
// central-finite-difference gradient checker.
//
// Parameters live in one contiguous buffer per network. Flat order: for
// each layer, the logical (out x in) weight matrix in row-major order,
// then the biases. In memory that is a column-major (in x out) array,
// which keeps every GEMM in the hot loop transposition-free.
//
// Batches are row-major in the API sense: X is (batch x features).

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "shockcal/errors.hpp"
#include "shockcal/rng.hpp"

namespace shockcal {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Activation { kRelu, kIdentity };

// Ordered dense layers over one flat parameter buffer.
class ParamSet {
  public:
    ParamSet() = default;

    // dims = {in, h1, ..., out}; hidden layers get `hidden`, last gets `last`.
    static ParamSet mlp(const std::vector<int>& dims, Activation hidden = Activation::kRelu,
                        Activation last = Activation::kIdentity) {
        if (dims.size() < 2)
            throw DimensionMismatch("ParamSet::mlp: need at least input and output dims");
        ParamSet p;
        std::size_t offset = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            if (dims[l] < 1 || dims[l + 1] < 1)
                throw DimensionMismatch("ParamSet::mlp: dims must be positive");
            LayerSpec spec;
            spec.in = dims[l];
            spec.out = dims[l + 1];
            spec.act = (l + 2 == dims.size()) ? last : hidden;
            spec.w_offset = offset;
            offset += static_cast<std::size_t>(spec.in) * spec.out;
            spec.b_offset = offset;
            offset += spec.out;
            p.layers_.push_back(spec);
        }
        p.data_.assign(offset, 0.0);
        return p;
    }

    std::size_t layer_count() const { return layers_.size(); }
    std::size_t size() const { return data_.size(); }
    int input_dim() const { return layers_.front().in; }
    int output_dim() const { return layers_.back().out; }
    int layer_input_dim(std::size_t l) const { return layers_[l].in; }
    int layer_output_dim(std::size_t l) const { return layers_[l].out; }
    Activation activation(std::size_t l) const { return layers_[l].act; }

    // Stored (in x out) weight block; the logical weight matrix is its
    // transpose.
    Eigen::Map<Mat> weight_store(std::size_t l) {
        return {data_.data() + layers_[l].w_offset, layers_[l].in, layers_[l].out};
    }
    Eigen::Map<const Mat> weight_store(std::size_t l) const {
        return {data_.data() + layers_[l].w_offset, layers_[l].in, layers_[l].out};
    }
    Eigen::Map<Vec> biases(std::size_t l) {
        return {data_.data() + layers_[l].b_offset, layers_[l].out};
    }
    Eigen::Map<const Vec> biases(std::size_t l) const {
        return {data_.data() + layers_[l].b_offset, layers_[l].out};
    }

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }
    void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

    bool same_shape(const ParamSet& o) const {
        if (layers_.size() != o.layers_.size()) return false;
        for (std::size_t l = 0; l < layers_.size(); ++l)
            if (layers_[l].in != o.layers_[l].in || layers_[l].out != o.layers_[l].out)
                return false;
        return true;
    }

    // Same layer specs, zeroed parameters; the natural gradient container.
    ParamSet zeros_like() const {
        ParamSet g = *this;
        g.set_zero();
        return g;
    }

  private:
    struct LayerSpec {
        int in = 0, out = 0;
        Activation act = Activation::kIdentity;
        std::size_t w_offset = 0, b_offset = 0;
    };
    std::vector<LayerSpec> layers_;
    std::vector<double> data_;
};

inline std::vector<double> flatten(const ParamSet& p) {
    return {p.flat().begin(), p.flat().end()};
}

inline void unflatten(ParamSet& p, std::span<const double> values) {
    if (values.size() != p.size())
        throw ShapeMismatch("unflatten: value count does not match parameter count");
    std::copy(values.begin(), values.end(), p.flat().begin());
}

// He-uniform weights (U(+-sqrt(6/fan_in))), zero biases. Draw order is the
// flat storage order, so initialization is reproducible from the stream.
inline void he_uniform_init(ParamSet& net, RngStream& rng) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / net.layer_input_dim(l));
        auto w = net.weight_store(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-limit, limit);
        net.biases(l).setZero();
    }
}

// Cached activations from one forward call, enough to run backward.
struct ForwardTape {
    std::vector<Mat> layer_inputs;  // layer_inputs[l] = input to layer l (batch x in_l)
    std::vector<Mat> preacts;       // pre-activation of layer l (batch x out_l)
};

inline Mat forward(const ParamSet& net, const Mat& x, ForwardTape* tape = nullptr) {
    if (x.cols() != net.input_dim())
        throw DimensionMismatch("forward: input width does not match first layer");
    if (tape) {
        tape->layer_inputs.clear();
        tape->preacts.clear();
    }
    Mat h = x;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (tape) tape->layer_inputs.push_back(h);
        Mat a = h * net.weight_store(l);
        a.rowwise() += net.biases(l).transpose();
        if (tape) tape->preacts.push_back(a);
        if (net.activation(l) == Activation::kRelu)
            h = a.cwiseMax(0.0);
        else
            h = std::move(a);
    }
    return h;
}

// Reverse-mode gradients for one forward tape. `grads` must share the
// net's shape and is overwritten. Returns dL/dx when need_input_grad is
// set (the extra GEMM is skipped otherwise). The relu subgradient at
// exactly zero pre-activation is zero.
inline Mat backward(const ParamSet& net, const ForwardTape& tape, const Mat& dy, ParamSet& grads,
                    bool need_input_grad = true) {
    const std::size_t n_layers = net.layer_count();
    if (tape.layer_inputs.size() != n_layers || tape.preacts.size() != n_layers)
        throw StaleTape("backward: tape does not match network depth");
    if (!net.same_shape(grads))
        throw ShapeMismatch("backward: gradient container shape mismatch");
    if (dy.cols() != net.output_dim() || dy.rows() != tape.layer_inputs.front().rows())
        throw StaleTape("backward: dL/dy shape does not match tape");
    for (std::size_t l = 0; l < n_layers; ++l)
        if (tape.layer_inputs[l].cols() != net.layer_input_dim(l) ||
            tape.preacts[l].cols() != net.layer_output_dim(l))
            throw StaleTape("backward: tape layer widths do not match network");

    Mat d = dy;
    for (std::size_t li = n_layers; li-- > 0;) {
        if (net.activation(li) == Activation::kRelu)
            d = (tape.preacts[li].array() > 0.0).select(d, 0.0);
        grads.weight_store(li).noalias() = tape.layer_inputs[li].transpose() * d;
        grads.biases(li) = d.colwise().sum();
        if (li > 0 || need_input_grad)
            d = Mat(d * net.weight_store(li).transpose());
    }
    return need_input_grad ? d : Mat();
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment accumulators for one flat parameter vector.
struct AdamState {
    AdamConfig cfg;
    std::vector<double> m, v;
    long long t = 0;

    explicit AdamState(std::size_t n_params, AdamConfig c = {})
        : cfg(c), m(n_params, 0.0), v(n_params, 0.0) {}
};

// Standard Adam with bias correction. Updates params in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& st) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw ShapeMismatch("adam_step: parameter/gradient/state sizes differ");
    st.t += 1;
    const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
    const double c1 = 1.0 / (1.0 - std::pow(b1, static_cast<double>(st.t)));
    const double c2 = 1.0 / (1.0 - std::pow(b2, static_cast<double>(st.t)));
    const double lr = st.cfg.lr, eps = st.cfg.eps;
    double* m = st.m.data();
    double* v = st.v.data();
    double* p = params.data();
    const double* g = grads.data();
    const std::size_t n = params.size();
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    }
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t worst_coord = 0;
    std::size_t n_checked = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Central finite differences against a supplied analytic gradient, on a
// random coordinate subsample. `loss` must evaluate using the live
// contents of `params`; entries are perturbed and restored one at a time.
// Relative error denominator: max(|analytic|, |numeric|, 1e-8).
//
// Coordinates where both readings sit below `zero_threshold` count as
// agreeing: down there the central difference is rounding noise of the
// loss evaluation, not a derivative. The caller must keep the loss scaled
// to O(1) for the default threshold to sit above that noise.
inline GradCheckReport grad_check(const std::function<double()>& loss, std::span<double> params,
                                  std::span<const double> analytic, RngStream& rng,
                                  std::size_t n_coords = 200, double step = 1e-5,
                                  double zero_threshold = 1e-8) {
    if (analytic.size() != params.size())
        throw ShapeMismatch("grad_check: gradient length does not match parameters");
    GradCheckReport report;
    const std::size_t total = params.size();
    const bool exhaustive = total <= n_coords;
    const std::size_t checks = exhaustive ? total : n_coords;
    for (std::size_t k = 0; k < checks; ++k) {
        const std::size_t i = exhaustive ? k : static_cast<std::size_t>(rng.next_below(total));
        const double orig = params[i];
        params[i] = orig + step;
        const double lp = loss();
        params[i] = orig - step;
        const double lm = loss();
        params[i] = orig;
        const double numeric = (lp - lm) / (2.0 * step);
        if (std::fabs(analytic[i]) < zero_threshold && std::fabs(numeric) < zero_threshold) {
            ++report.n_checked;
            continue;
        }
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
        const double rel = std::fabs(analytic[i] - numeric) / denom;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_coord = i;
            report.analytic_at_worst = analytic[i];
            report.numeric_at_worst = numeric;
        }
        ++report.n_checked;
    }
    return report;
}

}  // namespace shockcal

#pragma once

// Row-level primitives shared by the serial reference kernels and the
// OpenMP kernels. Keeping the per-row arithmetic in one place guarantees
// the two implementations perform the same floating point operations in
// the same order.

#include <cmath>
#include <vector>

#include "nego/mlp.hpp"

namespace nego::kernels::detail {

// Sigmoid outputs are clamped into the open interval so downstream logs
// and ratios stay finite even when the pre-activation saturates.
inline constexpr double kSigmoidClamp = 1e-12;

inline double sigmoid(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    if (s < kSigmoidClamp) s = kSigmoidClamp;
    if (s > 1.0 - kSigmoidClamp) s = 1.0 - kSigmoidClamp;
    return s;
}

inline double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

inline double activate(Activation a, double z) {
    return a == Activation::Sigmoid ? sigmoid(z) : softplus(z);
}

// Derivative expressed through the stored activation value where possible:
// sigmoid' = s(1-s); softplus'(z) = sigmoid(z) without clamping.
inline double activate_grad(Activation a, double z, double value) {
    if (a == Activation::Sigmoid) return value * (1.0 - value);
    (void)z;
    return 1.0 / (1.0 + std::exp(-z));
}

/// Forward pass of one batch row through every layer, writing pre-activations
/// and activations into the trace at row r.
inline void forward_row(const Mlp& net, const Matrix& inputs, std::size_t r,
                        std::vector<Matrix>& pre, std::vector<Matrix>& act) {
    const double* cur = &inputs.data[r * inputs.cols];
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        const std::size_t out = layer.fan_out();
        const std::size_t in = layer.fan_in();
        double* z = &pre[l].data[r * out];
        double* a = &act[l].data[r * out];
        for (std::size_t o = 0; o < out; ++o) {
            const double* wrow = &layer.w.data[o * in];
            double acc = layer.b[o];
            for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * cur[i];
            z[o] = acc;
            a[o] = activate(layer.act, acc);
        }
        cur = a;
    }
}

/// Reverse pass of one batch row. Accumulates parameter gradients into
/// `grads` (caller owns zeroing) and writes this row's input gradient.
/// `delta` and `delta_prev` are scratch buffers sized to the widest layer.
inline void backward_row(const Mlp& net, const ForwardTrace& trace, std::size_t r,
                         double out_grad, ParamGrads& grads, Matrix& input_grads,
                         std::vector<double>& delta, std::vector<double>& delta_prev) {
    const std::size_t n_layers = net.layers.size();

    // Output layer seed: dS/dz_L = out_grad * act'(z_L).
    {
        const Layer& top = net.layers[n_layers - 1];
        const std::size_t out = top.fan_out();
        for (std::size_t o = 0; o < out; ++o) {
            const double z = trace.pre[n_layers - 1](r, o);
            const double a = trace.act[n_layers - 1](r, o);
            delta[o] = out_grad * activate_grad(top.act, z, a);
        }
    }

    for (std::size_t li = n_layers; li-- > 0;) {
        const Layer& layer = net.layers[li];
        const std::size_t out = layer.fan_out();
        const std::size_t in = layer.fan_in();
        const double* below = li == 0 ? &trace.input.data[r * trace.input.cols]
                                      : &trace.act[li - 1].data[r * in];

        LayerGrads& g = grads[li];
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            g.b[o] += d;
            double* gw = &g.w.data[o * in];
            for (std::size_t i = 0; i < in; ++i) gw[i] += d * below[i];
        }

        if (li == 0) {
            double* ig = &input_grads.data[r * in];
            for (std::size_t i = 0; i < in; ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < out; ++o) acc += layer.w(o, i) * delta[o];
                ig[i] = acc;
            }
        } else {
            const Layer& lower = net.layers[li - 1];
            for (std::size_t i = 0; i < in; ++i) {
                double acc = 0.0;
                for (std::size_t o = 0; o < out; ++o) acc += layer.w(o, i) * delta[o];
                const double z = trace.pre[li - 1](r, i);
                const double a = trace.act[li - 1](r, i);
                delta_prev[i] = acc * activate_grad(lower.act, z, a);
            }
            std::swap(delta, delta_prev);
        }
    }
}

inline ParamGrads zero_grads(const Mlp& net) {
    ParamGrads g(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        g[l].w = Matrix(net.layers[l].fan_out(), net.layers[l].fan_in());
        g[l].b.assign(net.layers[l].fan_out(), 0.0);
    }
    return g;
}

inline void add_grads(ParamGrads& into, const ParamGrads& from) {
    for (std::size_t l = 0; l < into.size(); ++l) {
        for (std::size_t i = 0; i < into[l].w.data.size(); ++i)
            into[l].w.data[i] += from[l].w.data[i];
        for (std::size_t i = 0; i < into[l].b.size(); ++i)
            into[l].b[i] += from[l].b[i];
    }
}

inline std::size_t max_width(const Mlp& net) {
    std::size_t w = net.input_dim;
    for (const auto& l : net.layers) w = std::max(w, l.fan_out());
    return w;
}

} // namespace nego::kernels::detail

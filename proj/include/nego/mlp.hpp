#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nego/linalg.hpp"

namespace nego {

enum class Activation { Softplus, Sigmoid };

/// One dense layer: out = act(W * in + b), W stored row-major (out x in).
struct Layer {
    Matrix w;
    std::vector<double> b;
    Activation act = Activation::Softplus;

    std::size_t fan_in() const { return w.cols; }
    std::size_t fan_out() const { return w.rows; }
};

/// Feed-forward network with softplus hidden layers and a sigmoid scalar
/// output, so every network maps into (0,1). Houses both the seller
/// (context -> suggested price) and the buyer (context+price -> purchase
/// probability).
struct Mlp {
    std::size_t input_dim = 0;
    std::vector<Layer> layers;

    std::size_t depth() const { return layers.size(); }
    std::size_t param_count() const;

    /// Throws shape_error unless layer widths chain and the output is scalar.
    void validate() const;
};

/// Per-layer pre-activations and activations for one batch; everything
/// backward needs, including a copy of the raw input.
struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> pre;
    std::vector<Matrix> act;

    std::size_t batch() const { return input.rows; }
};

struct LayerGrads {
    Matrix w;
    std::vector<double> b;
};
using ParamGrads = std::vector<LayerGrads>;

struct ForwardResult {
    std::vector<double> outputs; // batch of values in (0,1)
    ForwardTrace trace;
};

struct BackwardResult {
    ParamGrads param_grads;
    Matrix input_grads; // batch x input_dim
};

/// Fan-in scaled zero-mean init (scale sqrt(2/fan_in)), zero biases,
/// deterministic for a given seed. hidden_widths excludes the scalar
/// output layer, so a 4-layer net takes three hidden widths.
Mlp mlp_init(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
             std::uint64_t seed);

ForwardResult forward(const Mlp& net, const Matrix& inputs);
BackwardResult backward(const Mlp& net, const ForwardTrace& trace,
                        const std::vector<double>& output_grad);

/// Single-input convenience wrapper around forward().
double eval_scalar(const Mlp& net, std::span<const double> input);

std::vector<double> flatten_params(const Mlp& net);
void assign_params(Mlp& net, std::span<const double> flat);
std::vector<double> flatten_grads(const Mlp& net, const ParamGrads& grads);

/// Checkpoints are a versioned text format: a dims header followed by
/// row-major weights as hex floats, so a save/load round trip is bit-exact.
std::string checkpoint_to_string(const Mlp& net);
Mlp checkpoint_from_string(const std::string& text);
void save_checkpoint(const Mlp& net, const std::string& path);
Mlp load_checkpoint(const std::string& path);

const char* activation_name(Activation a);

} // namespace nego

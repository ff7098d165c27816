#include "nego/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nego/errors.hpp"
#include "nego/ioutil.hpp"
#include "nego/kernels.hpp"
#include "nego/rng.hpp"

namespace nego {

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.data.size() + l.b.size();
    return n;
}

void Mlp::validate() const {
    if (input_dim == 0) throw config_error("mlp: input_dim must be positive");
    if (layers.empty()) throw config_error("mlp: at least one layer required");
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].fan_in() != in)
            throw shape_error("mlp: layer " + std::to_string(l) + " expects fan-in " +
                              std::to_string(layers[l].fan_in()) + ", got " + std::to_string(in));
        if (layers[l].b.size() != layers[l].fan_out())
            throw shape_error("mlp: layer " + std::to_string(l) + " bias size mismatch");
        in = layers[l].fan_out();
    }
    if (in != 1) throw shape_error("mlp: output must be scalar");
    if (layers.back().act != Activation::Sigmoid)
        throw shape_error("mlp: output layer must be sigmoid");
}

Mlp mlp_init(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
             std::uint64_t seed) {
    if (input_dim == 0) throw config_error("mlp_init: input_dim must be positive");
    if (hidden_widths.empty()) throw config_error("mlp_init: hidden width list is empty");
    for (std::size_t w : hidden_widths)
        if (w == 0) throw config_error("mlp_init: widths must be positive");

    Mlp net;
    net.input_dim = input_dim;
    Rng rng(seed);

    std::size_t in = input_dim;
    auto push_layer = [&](std::size_t out, Activation act) {
        Layer layer;
        layer.w = Matrix(out, in);
        layer.b.assign(out, 0.0);
        layer.act = act;
        const double scale = std::sqrt(2.0 / static_cast<double>(in));
        for (double& v : layer.w.data) v = scale * rng.normal();
        net.layers.push_back(std::move(layer));
        in = out;
    };

    for (std::size_t w : hidden_widths) push_layer(w, Activation::Softplus);
    push_layer(1, Activation::Sigmoid);
    net.validate();
    return net;
}

namespace {

void check_trace(const Mlp& net, const ForwardTrace& trace) {
    if (trace.pre.size() != net.depth() || trace.act.size() != net.depth())
        throw shape_error("backward: trace depth does not match network");
    if (trace.input.cols != net.input_dim)
        throw shape_error("backward: trace input width does not match network");
    for (std::size_t l = 0; l < net.depth(); ++l) {
        if (trace.pre[l].cols != net.layers[l].fan_out() ||
            trace.pre[l].rows != trace.input.rows ||
            !trace.pre[l].same_shape(trace.act[l]))
            throw shape_error("backward: stale or mismatched trace at layer " + std::to_string(l));
    }
}

} // namespace

ForwardResult forward(const Mlp& net, const Matrix& inputs) {
    if (inputs.cols != net.input_dim)
        throw shape_error("forward: input width " + std::to_string(inputs.cols) +
                          " does not match network input_dim " + std::to_string(net.input_dim));
    if (kernels::default_exec() == kernels::Exec::Parallel)
        return kernels::batch_forward_omp(net, inputs);
    return kernels::batch_forward_serial(net, inputs);
}

BackwardResult backward(const Mlp& net, const ForwardTrace& trace,
                        const std::vector<double>& output_grad) {
    check_trace(net, trace);
    if (output_grad.size() != trace.batch())
        throw shape_error("backward: output_grad size does not match trace batch");
    if (kernels::default_exec() == kernels::Exec::Parallel)
        return kernels::batch_backward_omp(net, trace, output_grad);
    return kernels::batch_backward_serial(net, trace, output_grad);
}

double eval_scalar(const Mlp& net, std::span<const double> input) {
    Matrix m(1, input.size());
    for (std::size_t i = 0; i < input.size(); ++i) m(0, i) = input[i];
    return forward(net, m).outputs[0];
}

std::vector<double> flatten_params(const Mlp& net) {
    std::vector<double> flat;
    flat.reserve(net.param_count());
    for (const auto& l : net.layers) {
        flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void assign_params(Mlp& net, std::span<const double> flat) {
    if (flat.size() != net.param_count())
        throw shape_error("assign_params: size mismatch");
    std::size_t k = 0;
    for (auto& l : net.layers) {
        for (double& v : l.w.data) v = flat[k++];
        for (double& v : l.b) v = flat[k++];
    }
}

std::vector<double> flatten_grads(const Mlp& net, const ParamGrads& grads) {
    if (grads.size() != net.depth()) throw shape_error("flatten_grads: layer count mismatch");
    std::vector<double> flat;
    flat.reserve(net.param_count());
    for (const auto& g : grads) {
        flat.insert(flat.end(), g.w.data.begin(), g.w.data.end());
        flat.insert(flat.end(), g.b.begin(), g.b.end());
    }
    return flat;
}

const char* activation_name(Activation a) {
    return a == Activation::Sigmoid ? "sigmoid" : "softplus";
}

namespace {

Activation activation_from_name(const std::string& s) {
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softplus") return Activation::Softplus;
    throw io_error("checkpoint: unknown activation '" + s + "'");
}

// Hex floats round-trip doubles exactly and stay grep-able.
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double parse_double(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw io_error("checkpoint: bad numeric token '" + tok + "'");
    return v;
}

} // namespace

std::string checkpoint_to_string(const Mlp& net) {
    net.validate();
    std::ostringstream out;
    out << "negonets-mlp 1\n";
    out << "input_dim " << net.input_dim << "\n";
    out << "layers " << net.depth() << "\n";
    for (const auto& l : net.layers) {
        out << "layer " << l.fan_out() << " " << l.fan_in() << " " << activation_name(l.act) << "\n";
        out << "w";
        for (double v : l.w.data) out << " " << fmt_double(v);
        out << "\nb";
        for (double v : l.b) out << " " << fmt_double(v);
        out << "\n";
    }
    return out.str();
}

void save_checkpoint(const Mlp& net, const std::string& path) {
    write_file_atomic(path, checkpoint_to_string(net));
}

Mlp checkpoint_from_string(const std::string& text) {
    std::istringstream f(text);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "negonets-mlp" || version != 1)
        throw io_error("checkpoint: not a v1 negonets-mlp file");

    Mlp net;
    std::string key;
    std::size_t n_layers = 0;
    f >> key >> net.input_dim;
    if (key != "input_dim") throw io_error("checkpoint: expected input_dim header");
    f >> key >> n_layers;
    if (key != "layers") throw io_error("checkpoint: expected layers header");

    std::string tok;
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::size_t out = 0, in = 0;
        std::string act;
        f >> key >> out >> in >> act;
        if (key != "layer" || !f) throw io_error("checkpoint: malformed layer header");
        Layer layer;
        layer.w = Matrix(out, in);
        layer.b.assign(out, 0.0);
        layer.act = activation_from_name(act);
        f >> key;
        if (key != "w") throw io_error("checkpoint: expected weight block");
        for (double& v : layer.w.data) {
            f >> tok;
            v = parse_double(tok);
        }
        f >> key;
        if (key != "b") throw io_error("checkpoint: expected bias block");
        for (double& v : layer.b) {
            f >> tok;
            v = parse_double(tok);
        }
        if (!f) throw io_error("checkpoint: truncated data");
        net.layers.push_back(std::move(layer));
    }
    net.validate();
    return net;
}

Mlp load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("checkpoint: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    try {
        return checkpoint_from_string(buf.str());
    } catch (const io_error& e) {
        throw io_error(std::string(e.what()) + " ('" + path + "')");
    }
}

} // namespace nego

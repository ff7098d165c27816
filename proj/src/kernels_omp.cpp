// OpenMP kernels. Forward rows are independent; backward accumulates one
// partial gradient per fixed-size chunk and reduces the partials in chunk
// order, which keeps results identical to the serial reference for any
// thread count.

#include "nego/kernels.hpp"
#include "nego/kernels_detail.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nego::kernels {

ForwardResult batch_forward_omp(const Mlp& net, const Matrix& inputs) {
    const std::size_t batch = inputs.rows;
    ForwardResult res;
    res.trace.input = inputs;
    res.trace.pre.resize(net.depth());
    res.trace.act.resize(net.depth());
    for (std::size_t l = 0; l < net.depth(); ++l) {
        res.trace.pre[l] = Matrix(batch, net.layers[l].fan_out());
        res.trace.act[l] = Matrix(batch, net.layers[l].fan_out());
    }

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(batch); ++r)
        detail::forward_row(net, inputs, static_cast<std::size_t>(r),
                            res.trace.pre, res.trace.act);

    res.outputs.resize(batch);
    const Matrix& top = res.trace.act.back();
    for (std::size_t r = 0; r < batch; ++r) res.outputs[r] = top(r, 0);
    return res;
}

BackwardResult batch_backward_omp(const Mlp& net, const ForwardTrace& trace,
                                  const std::vector<double>& output_grad) {
    const std::size_t batch = trace.batch();
    const std::size_t n_chunks = (batch + kChunkRows - 1) / kChunkRows;

    BackwardResult res;
    res.param_grads = detail::zero_grads(net);
    res.input_grads = Matrix(batch, net.input_dim);

    std::vector<ParamGrads> partials(n_chunks);

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<double> delta(detail::max_width(net));
        std::vector<double> delta_prev(detail::max_width(net));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_chunks); ++c) {
            partials[c] = detail::zero_grads(net);
            const std::size_t lo = static_cast<std::size_t>(c) * kChunkRows;
            const std::size_t hi = std::min(batch, lo + kChunkRows);
            for (std::size_t r = lo; r < hi; ++r)
                detail::backward_row(net, trace, r, output_grad[r], partials[c],
                                     res.input_grads, delta, delta_prev);
        }
    }

    for (std::size_t c = 0; c < n_chunks; ++c)
        detail::add_grads(res.param_grads, partials[c]);
    return res;
}

} // namespace nego::kernels

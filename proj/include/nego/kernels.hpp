#pragma once

#include <vector>

#include "nego/mlp.hpp"

namespace nego::kernels {

enum class Exec { Serial, Parallel };

/// Process-wide default used by forward()/backward(). The parallel kernels
/// reduce in fixed chunk order, so Serial and Parallel are bit-identical
/// for the same inputs regardless of thread count.
Exec default_exec();
void set_default_exec(Exec e);

/// Rows are summed per fixed-size chunk and chunk partials are reduced in
/// index order; this is the determinism contract shared by both kernels.
inline constexpr std::size_t kChunkRows = 64;

ForwardResult batch_forward_serial(const Mlp& net, const Matrix& inputs);
ForwardResult batch_forward_omp(const Mlp& net, const Matrix& inputs);

BackwardResult batch_backward_serial(const Mlp& net, const ForwardTrace& trace,
                                     const std::vector<double>& output_grad);
BackwardResult batch_backward_omp(const Mlp& net, const ForwardTrace& trace,
                                  const std::vector<double>& output_grad);

} // namespace nego::kernels

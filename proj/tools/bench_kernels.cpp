// Times the serial reference kernels against the OpenMP kernels on the
// batch sizes training actually sees, plus larger ones where the fan-out
// pays off.

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "nego/kernels.hpp"
#include "nego/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace nego;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    // warm-up
    fn();
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

} // namespace

int main() {
    const std::vector<std::size_t> batch_sizes = {256, 2048, 16384};
    const std::vector<std::size_t> hidden = {32, 64, 64};
    const std::size_t dim = 8;

    Mlp net = mlp_init(dim, hidden, 42);
    Rng rng(7);

#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("built without OpenMP; both columns run the serial path\n");
#endif
    std::printf("%-8s %-14s %-14s %-8s %-14s %-14s %-8s\n", "batch", "fwd_serial", "fwd_omp",
                "speedup", "bwd_serial", "bwd_omp", "speedup");

    for (std::size_t n : batch_sizes) {
        Matrix inputs(n, dim);
        for (double& v : inputs.data) v = rng.uniform(-1.0, 1.0);
        std::vector<double> og(n);
        for (double& v : og) v = rng.uniform(-1.0, 1.0);

        const int reps = n >= 16384 ? 3 : 10;
        const auto trace = kernels::batch_forward_serial(net, inputs).trace;

        const double fs = time_ms([&] { kernels::batch_forward_serial(net, inputs); }, reps);
        const double fp = time_ms([&] { kernels::batch_forward_omp(net, inputs); }, reps);
        const double bs = time_ms([&] { kernels::batch_backward_serial(net, trace, og); }, reps);
        const double bp = time_ms([&] { kernels::batch_backward_omp(net, trace, og); }, reps);

        std::printf("%-8zu %-14.3f %-14.3f %-8.2f %-14.3f %-14.3f %-8.2f\n", n, fs, fp, fs / fp,
                    bs, bp, bs / bp);
    }
    return 0;
}

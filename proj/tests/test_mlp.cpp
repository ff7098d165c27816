#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nego/errors.hpp"
#include "nego/kernels.hpp"
#include "nego/mlp.hpp"
#include "nego/optimizer.hpp"
#include "test_helpers.hpp"

#include <cstdio>
#include <filesystem>

using namespace nego;
using testutil::rel_err;

TEST_CASE("mlp_init builds the requested layer chain") {
    const Mlp net = mlp_init(3, {16, 16, 16}, 42);
    REQUIRE(net.depth() == 4);
    CHECK(net.input_dim == 3);
    CHECK(net.layers[0].w.rows == 16);
    CHECK(net.layers[0].w.cols == 3);
    CHECK(net.layers[1].w.cols == 16);
    CHECK(net.layers[3].w.rows == 1);
    CHECK(net.layers[3].act == Activation::Sigmoid);
    for (int l = 0; l < 3; ++l) CHECK(net.layers[l].act == Activation::Softplus);
    for (const auto& layer : net.layers)
        for (double b : layer.b) CHECK(b == 0.0);
}

TEST_CASE("mlp_init is deterministic per seed") {
    const Mlp a = mlp_init(3, {16, 16, 16}, 42);
    const Mlp b = mlp_init(3, {16, 16, 16}, 42);
    CHECK(flatten_params(a) == flatten_params(b));
    const Mlp c = mlp_init(3, {16, 16, 16}, 43);
    CHECK(flatten_params(a) != flatten_params(c));
}

TEST_CASE("mlp_init rejects bad configurations") {
    CHECK_THROWS_AS(mlp_init(0, {16}, 1), config_error);
    CHECK_THROWS_AS(mlp_init(3, {}, 1), config_error);
    CHECK_THROWS_AS(mlp_init(3, {8, 0, 8}, 1), config_error);
}

TEST_CASE("forward of a zero-weight network is sigmoid(0)") {
    Mlp net = mlp_init(3, {8, 8}, 1);
    auto params = flatten_params(net);
    std::fill(params.begin(), params.end(), 0.0);
    assign_params(net, params);

    Rng rng(5);
    const Matrix in = testutil::random_matrix(7, 3, rng, -10.0, 10.0);
    for (double out : forward(net, in).outputs) CHECK(out == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("forward outputs stay inside the open unit interval") {
    Rng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const Mlp net = mlp_init(4, {16, 16, 16}, 100 + trial);
        const Matrix in = testutil::random_matrix(32, 4, rng, -50.0, 50.0);
        for (double out : forward(net, in).outputs) {
            CHECK(out > 0.0);
            CHECK(out < 1.0);
        }
    }
}

TEST_CASE("forward matches a straight-line re-evaluation of the weights") {
    const Mlp net = mlp_init(3, {16, 16, 16}, 42);
    Rng rng(9);
    Matrix in = testutil::random_matrix(5, 3, rng, -2.0, 2.0);
    const auto out = forward(net, in).outputs;
    for (std::size_t r = 0; r < in.rows; ++r) {
        const std::vector<double> row(in.row(r).begin(), in.row(r).end());
        CHECK(std::abs(out[r] - testutil::straight_line_eval(net, row)) < 1e-12);
    }
}

TEST_CASE("forward rejects dimension mismatches") {
    const Mlp net = mlp_init(3, {8}, 1);
    CHECK_THROWS_AS(forward(net, Matrix(2, 4)), shape_error);
}

TEST_CASE("backward with zero output gradient is zero everywhere") {
    const Mlp net = mlp_init(3, {8, 8}, 2);
    Rng rng(3);
    const Matrix in = testutil::random_matrix(6, 3, rng);
    const auto fr = forward(net, in);
    const auto bw = backward(net, fr.trace, std::vector<double>(6, 0.0));
    for (double g : flatten_grads(net, bw.param_grads)) CHECK(g == 0.0);
    for (double g : bw.input_grads.data) CHECK(g == 0.0);
}

TEST_CASE("backward matches central finite differences") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t dim = 2 + trial % 3;
        const Mlp net = mlp_init(dim, {6, 5}, 300 + trial);
        const std::size_t batch = 1 + trial % 4;
        const Matrix in = testutil::random_matrix(batch, dim, rng);
        const auto og = testutil::random_vector(batch, rng);

        const auto fr = forward(net, in);
        const auto bw = backward(net, fr.trace, og);

        const auto analytic = flatten_grads(net, bw.param_grads);
        const auto numeric = testutil::fd_param_grads(net, in, og);
        for (std::size_t i = 0; i < analytic.size(); ++i)
            CHECK(rel_err(analytic[i], numeric[i]) < 1e-4);

        for (std::size_t r = 0; r < batch; ++r)
            for (std::size_t c = 0; c < dim; ++c)
                CHECK(rel_err(bw.input_grads(r, c),
                              testutil::fd_input_grad(net, in, og, r, c)) < 1e-4);
    }
}

TEST_CASE("backward rejects stale traces") {
    const Mlp net = mlp_init(3, {8}, 1);
    const Mlp other = mlp_init(3, {9}, 1);
    Rng rng(4);
    const Matrix in = testutil::random_matrix(4, 3, rng);
    const auto fr = forward(net, in);
    CHECK_THROWS_AS(backward(other, fr.trace, std::vector<double>(4, 1.0)), shape_error);
    CHECK_THROWS_AS(backward(net, fr.trace, std::vector<double>(3, 1.0)), shape_error);
}

TEST_CASE("serial and OpenMP kernels agree bit for bit") {
    Rng rng(23);
    // batch sizes straddling the chunk boundary
    for (std::size_t batch : {1UL, 63UL, 64UL, 65UL, 257UL}) {
        const Mlp net = mlp_init(5, {16, 16, 16}, 77);
        const Matrix in = testutil::random_matrix(batch, 5, rng);
        const auto og = testutil::random_vector(batch, rng);

        const auto fs = kernels::batch_forward_serial(net, in);
        const auto fp = kernels::batch_forward_omp(net, in);
        CHECK(fs.outputs == fp.outputs);

        const auto bs = kernels::batch_backward_serial(net, fs.trace, og);
        const auto bp = kernels::batch_backward_omp(net, fp.trace, og);
        CHECK(flatten_grads(net, bs.param_grads) == flatten_grads(net, bp.param_grads));
        CHECK(bs.input_grads.data == bp.input_grads.data);
    }
}

TEST_CASE("adam leaves parameters alone on zero gradients") {
    AdamState state = AdamState::for_params(3, 0.1);
    std::vector<double> params = {1.0, -2.0, 0.5};
    const auto before = params;
    adam_step(state, params, {0.0, 0.0, 0.0});
    CHECK(params == before);
    CHECK(state.step == 1);
}

TEST_CASE("adam first step matches the hand-executed recurrence") {
    // g=1, lr=0.1: m=0.1, v=0.001, mhat=1, vhat=1 -> step = lr/(1+eps)
    AdamState state = AdamState::for_params(1, 0.1);
    std::vector<double> params = {0.0};
    adam_step(state, params, {1.0});
    CHECK(params[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam maximize mirrors the minimize update") {
    AdamState a = AdamState::for_params(1, 0.05);
    AdamState b = AdamState::for_params(1, 0.05);
    std::vector<double> pa = {0.3}, pb = {0.3};
    adam_step(a, pa, {0.7}, false);
    adam_step(b, pb, {0.7}, true);
    CHECK(pa[0] - 0.3 == doctest::Approx(-(pb[0] - 0.3)).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients") {
    AdamState state = AdamState::for_params(1, 0.1);
    std::vector<double> params = {0.0};
    CHECK_THROWS_AS(adam_step(state, params, {std::nan("")}), training_error);
}

TEST_CASE("adam descends a convex quadratic monotonically") {
    // f(t) = t^2 from t=1, small lr: 1000 steps without a single increase
    AdamState state = AdamState::for_params(1, 1e-4);
    std::vector<double> params = {1.0};
    double prev = params[0] * params[0];
    for (int i = 0; i < 1000; ++i) {
        adam_step(state, params, {2.0 * params[0]});
        const double loss = params[0] * params[0];
        CHECK(loss <= prev + 1e-8);
        prev = loss;
    }
    CHECK(prev < 1.0);
}

TEST_CASE("early stopping counts non-improvements and snapshots the best") {
    EarlyStopState state;
    state.patience = 5;

    SUBCASE("strictly decreasing losses never stop") {
        for (int i = 0; i < 50; ++i) {
            const double loss = 1.0 - 0.01 * i;
            CHECK_FALSE(early_stop_update(state, loss, {{static_cast<double>(i)}}));
        }
        CHECK(state.best_params[0][0] == 49.0);
    }

    SUBCASE("constant losses stop after the sixth non-improving epoch") {
        CHECK_FALSE(early_stop_update(state, 1.0, {{0.0}}));
        for (int i = 1; i <= 5; ++i) CHECK_FALSE(early_stop_update(state, 1.0, {{1.0 * i}}));
        CHECK(early_stop_update(state, 1.0, {{9.0}}));
        CHECK(state.best_params[0][0] == 0.0); // snapshot never moved
    }

    SUBCASE("improvement below tolerance counts as none") {
        CHECK_FALSE(early_stop_update(state, 1.0, {{0.0}}));
        CHECK_FALSE(early_stop_update(state, 1.0 - 1e-9, {{1.0}}));
        CHECK(state.since_improvement == 1);
        CHECK(state.best_params[0][0] == 0.0);
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    const Mlp net = mlp_init(4, {16, 16, 16}, 1234);
    const std::string text = checkpoint_to_string(net);
    const Mlp back = checkpoint_from_string(text);
    CHECK(flatten_params(net) == flatten_params(back));
    CHECK(back.input_dim == net.input_dim);
    CHECK(back.depth() == net.depth());

    const auto path = (std::filesystem::temp_directory_path() / "nego_ckpt_test.ckpt").string();
    save_checkpoint(net, path);
    const Mlp loaded = load_checkpoint(path);
    CHECK(flatten_params(net) == flatten_params(loaded));
    std::filesystem::remove(path);

    Rng rng(2);
    const Matrix in = testutil::random_matrix(3, 4, rng);
    CHECK(forward(net, in).outputs == forward(loaded, in).outputs);
}

TEST_CASE("checkpoint loader rejects garbage") {
    CHECK_THROWS_AS(checkpoint_from_string("not a checkpoint"), io_error);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.ckpt"), io_error);
}

TEST_CASE("training arithmetic is deterministic under a fixed seed") {
    auto run = [] {
        Mlp net = mlp_init(3, {8, 8}, 5);
        AdamState opt = AdamState::for_params(net.param_count(), 0.01);
        Rng rng(99);
        for (int step = 0; step < 20; ++step) {
            const Matrix in = testutil::random_matrix(16, 3, rng);
            const auto og = testutil::random_vector(16, rng);
            const auto fr = forward(net, in);
            const auto grads = flatten_grads(net, backward(net, fr.trace, og).param_grads);
            auto params = flatten_params(net);
            adam_step(opt, params, grads);
            assign_params(net, params);
        }
        return flatten_params(net);
    };
    CHECK(run() == run());
}

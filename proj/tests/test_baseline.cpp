#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "nego/baseline.hpp"
#include "nego/metrics.hpp"
#include "test_helpers.hpp"

using namespace nego;

namespace {

TrainConfig quick_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    cfg.seed = seed;
    return cfg;
}

/// Forecaster computing exactly sigmoid(a + b * price) on input [x.., price].
Mlp analytic_forecaster(std::size_t dim, double a, double b) {
    Mlp net;
    net.input_dim = dim + 1;
    Layer out;
    out.w = Matrix(1, dim + 1);
    out.w(0, dim) = b;
    out.b = {a};
    out.act = Activation::Sigmoid;
    net.layers.push_back(out);
    return net;
}

} // namespace

TEST_CASE("forecaster learns a separable price threshold") {
    Rng rng(71);
    const Dataset all = testutil::threshold_dataset(1500, 0.5, rng);
    const auto [train, val] = split_train_val(all, 0.2, 9);
    const Dataset held = testutil::threshold_dataset(400, 0.5, rng);

    const Mlp forecaster = train_forecaster(train, val, quick_config(1));

    std::vector<EvalRecord> records;
    for (const auto& row : held.rows) {
        std::vector<double> in = row.x;
        in.push_back(row.price);
        records.push_back({row.price, 0.5, eval_scalar(forecaster, in), row.label});
    }
    CHECK(f1_score(records, 0.5) >= 0.95);
}

TEST_CASE("forecaster converges to the base rate on constant labels") {
    Rng rng(72);
    Dataset all = testutil::threshold_dataset(400, 2.0, rng); // every label 1
    const auto [train, val] = split_train_val(all, 0.2, 9);
    const Mlp forecaster = train_forecaster(train, val, quick_config(2));

    double mean = 0.0;
    for (const auto& row : val.rows) {
        std::vector<double> in = row.x;
        in.push_back(row.price);
        mean += eval_scalar(forecaster, in);
    }
    mean /= static_cast<double>(val.size());
    CHECK(std::abs(mean - 1.0) < 0.05);
}

TEST_CASE("forecaster training is deterministic per seed") {
    Rng rng(73);
    const Dataset all = testutil::threshold_dataset(300, 0.5, rng);
    const auto [train, val] = split_train_val(all, 0.2, 9);
    TrainConfig cfg = quick_config(3);
    cfg.epochs = 5;
    const Mlp a = train_forecaster(train, val, cfg);
    const Mlp b = train_forecaster(train, val, cfg);
    CHECK(flatten_params(a) == flatten_params(b));
}

TEST_CASE("price response fit recovers an analytic logistic curve") {
    const Mlp forecaster = analytic_forecaster(2, 2.0, -5.0);
    Rng rng(74);
    const Matrix contexts = testutil::random_matrix(20, 2, rng, 0.0, 1.0);
    const auto fit = fit_price_response(forecaster, contexts, linspace(0.0, 1.0, 101));
    CHECK_FALSE(fit.degenerate);
    CHECK(std::abs(fit.intercept - 2.0) < 1e-3);
    CHECK(std::abs(fit.slope + 5.0) < 1e-3);
}

TEST_CASE("price-insensitive forecaster yields a flat flagged fit") {
    const Mlp forecaster = analytic_forecaster(2, 0.7, 0.0);
    Rng rng(75);
    const Matrix contexts = testutil::random_matrix(10, 2, rng, 0.0, 1.0);
    const auto fit = fit_price_response(forecaster, contexts, linspace(0.0, 1.0, 101));
    CHECK(fit.degenerate);
    CHECK(fit.slope == 0.0);
}

TEST_CASE("price response fit ignores context duplication") {
    const Mlp forecaster = analytic_forecaster(1, 1.0, -3.0);
    Matrix ctx(3, 1);
    ctx(0, 0) = 0.1;
    ctx(1, 0) = 0.5;
    ctx(2, 0) = 0.9;
    Matrix doubled(6, 1);
    for (int r = 0; r < 6; ++r) doubled(r, 0) = ctx(r % 3, 0);
    const auto grid = linspace(0.0, 1.0, 51);
    const auto a = fit_price_response(forecaster, ctx, grid);
    const auto b = fit_price_response(forecaster, doubled, grid);
    CHECK(a.intercept == doctest::Approx(b.intercept).epsilon(1e-12));
    CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-12));
}

TEST_CASE("baseline price maximizes expected revenue on the grid") {
    SUBCASE("always-buying forecaster pushes to the grid maximum") {
        const Mlp forecaster = analytic_forecaster(2, 30.0, 0.0); // ~1 everywhere
        BaselineSeller seller;
        seller.price_grid = linspace(0.0, 1.0, 101);
        seller.forecaster = forecaster;
        const std::vector<double> x = {0.5, 0.5};
        CHECK(baseline_price(seller, x) == doctest::Approx(1.0));
    }

    SUBCASE("matches a brute-force scan of p * sigmoid(a - b p)") {
        const double a = 1.0, b = 4.0;
        const Mlp forecaster = analytic_forecaster(2, a, -b);
        BaselineSeller seller;
        seller.price_grid = linspace(0.0, 1.0, 101);
        seller.forecaster = forecaster;
        const std::vector<double> x = {0.3, 0.8};
        const double chosen = baseline_price(seller, x);

        double best = -1.0, best_rev = -1.0;
        for (double p : seller.price_grid) {
            const double rev = p / (1.0 + std::exp(-(a - b * p)));
            if (rev > best_rev) {
                best_rev = rev;
                best = p;
            }
        }
        CHECK(chosen == doctest::Approx(best));

        // grid membership + optimality over the grid
        const auto it = std::find_if(seller.price_grid.begin(), seller.price_grid.end(),
                                     [&](double g) { return g == chosen; });
        CHECK(it != seller.price_grid.end());
        for (double p : seller.price_grid) {
            std::vector<double> in = x;
            in.push_back(p);
            std::vector<double> chosen_in = x;
            chosen_in.push_back(chosen);
            CHECK(chosen * eval_scalar(forecaster, chosen_in) >=
                  p * eval_scalar(forecaster, in) - 1e-12);
        }
    }

    SUBCASE("ties break toward the lower price") {
        CHECK(argmax_revenue({0.2, 0.4, 0.8}, {0.5, 0.25, 0.125}) == 0); // all revenues 0.1
        CHECK(argmax_revenue({0.2, 0.4, 0.8}, {0.5, 0.30, 0.125}) == 1);
        CHECK(argmax_revenue({0.5}, {0.3}) == 0);
    }
}

TEST_CASE("forecaster and negonets buyer share architecture and optimizer settings") {
    Rng rng(77);
    const Dataset all = testutil::threshold_dataset(300, 0.5, rng);
    const auto [train, val] = split_train_val(all, 0.2, 9);
    TrainConfig cfg = quick_config(5);
    cfg.epochs = 2;

    const Mlp forecaster = train_forecaster(train, val, cfg);
    const TrainedNegonets nego = train_negonets(train, val, cfg);

    REQUIRE(forecaster.depth() == nego.buyer.depth());
    CHECK(forecaster.input_dim == nego.buyer.input_dim);
    for (std::size_t l = 0; l < forecaster.depth(); ++l) {
        CHECK(forecaster.layers[l].fan_out() == nego.buyer.layers[l].fan_out());
        CHECK(forecaster.layers[l].act == nego.buyer.layers[l].act);
    }
    // identical initialization stream as well (same seed derivation)
    CHECK(forecaster.param_count() == nego.buyer.param_count());
}

TEST_CASE("baseline seller round trips through its save format") {
    Rng rng(76);
    const Dataset all = testutil::threshold_dataset(300, 0.5, rng);
    const auto [train, val] = split_train_val(all, 0.2, 9);
    TrainConfig cfg = quick_config(4);
    cfg.epochs = 5;
    Mlp forecaster = train_forecaster(train, val, cfg);
    const BaselineSeller seller = make_baseline_seller(std::move(forecaster), train.contexts());

    const auto dir = std::filesystem::temp_directory_path() / "nego_baseline_test";
    std::filesystem::create_directories(dir);
    save_baseline(seller, dir.string());
    const BaselineSeller back = load_baseline(dir.string());
    CHECK(back.intercept == seller.intercept);
    CHECK(back.slope == seller.slope);
    CHECK(back.price_grid.size() == seller.price_grid.size());
    CHECK(flatten_params(back.forecaster) == flatten_params(seller.forecaster));
    std::filesystem::remove_all(dir);
}

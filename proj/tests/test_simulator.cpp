#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "nego/errors.hpp"
#include "nego/simulator.hpp"

using namespace nego;

namespace {

IntensityCurve constant_rate(double rate, double horizon) {
    return IntensityCurve{{{0.0, rate}, {horizon, rate}}};
}

/// Kolmogorov-Smirnov distance of a sample against U[0,1].
double ks_distance(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double hi = (static_cast<double>(i) + 1.0) / n - u[i];
        const double lo = u[i] - static_cast<double>(i) / n;
        d = std::max({d, hi, lo});
    }
    return d;
}

std::vector<double> decile_conversion(const Dataset& data) {
    std::vector<std::pair<double, int>> rows;
    for (const auto& r : data.rows) rows.push_back({r.price, r.label});
    std::sort(rows.begin(), rows.end());
    std::vector<double> rates(10, 0.0);
    const std::size_t per = rows.size() / 10;
    for (std::size_t d = 0; d < 10; ++d) {
        double acc = 0.0;
        for (std::size_t i = d * per; i < (d + 1) * per; ++i) acc += rows[i].second;
        rates[d] = acc / static_cast<double>(per);
    }
    return rates;
}

} // namespace

TEST_CASE("zero intensity produces no arrivals") {
    const auto times = nhpp_arrivals(constant_rate(0.0, 10.0), 1.0, 10.0, 42ULL);
    CHECK(times.empty());
}

TEST_CASE("arrival times are sorted, distinct, inside the horizon") {
    const auto times = nhpp_arrivals(constant_rate(5.0, 10.0), 5.0, 10.0, 42ULL);
    REQUIRE(!times.empty());
    for (std::size_t i = 0; i < times.size(); ++i) {
        CHECK(times[i] > 0.0);
        CHECK(times[i] <= 10.0);
        if (i > 0) CHECK(times[i] > times[i - 1]);
    }
}

TEST_CASE("constant-rate arrival counts match the Poisson mean") {
    // lambda=5 over 10 days: mean 50, var 50. 400 seeds here; the acceptance
    // suite runs the full 2000-seed version.
    const std::size_t seeds = 400;
    double total = 0.0;
    for (std::size_t s = 0; s < seeds; ++s)
        total += static_cast<double>(nhpp_arrivals(constant_rate(5.0, 10.0), 5.0, 10.0, s).size());
    const double mean = total / static_cast<double>(seeds);
    const double se = std::sqrt(50.0 / static_cast<double>(seeds));
    CHECK(std::abs(mean - 50.0) < 3.0 * se);
}

TEST_CASE("ramp intensity splits counts by the integrated rate") {
    // lambda(t) = t on [0,10]: Lambda(5)/Lambda(10) = 12.5/50 = 0.25
    IntensityCurve ramp{{{0.0, 0.0}, {10.0, 10.0}}};
    std::size_t first = 0, second = 0;
    for (std::size_t s = 0; s < 300; ++s) {
        for (double t : nhpp_arrivals(ramp, 10.0, 10.0, 1000 + s))
            (t <= 5.0 ? first : second) += 1;
    }
    const double n = static_cast<double>(first + second);
    const double frac = static_cast<double>(first) / n;
    const double se = std::sqrt(0.25 * 0.75 / n);
    CHECK(std::abs(frac - 0.25) < 3.0 * se);
}

TEST_CASE("thinning passes a KS test against the integrated ramp intensity") {
    // Probability integral transform: F(t) = Lambda(t)/Lambda(T) = (t/T)^2
    IntensityCurve ramp{{{0.0, 0.0}, {10.0, 10.0}}};
    std::vector<double> u;
    for (std::size_t s = 0; s < 50; ++s)
        for (double t : nhpp_arrivals(ramp, 10.0, 10.0, 2000 + s)) u.push_back((t / 10.0) * (t / 10.0));
    REQUIRE(u.size() > 1000);
    const double crit = 1.628 / std::sqrt(static_cast<double>(u.size())); // alpha = 0.01
    CHECK(ks_distance(u) < crit);
}

TEST_CASE("intensity exceeding the declared bound is a scenario error") {
    CHECK_THROWS_AS(nhpp_arrivals(constant_rate(5.0, 10.0), 2.0, 10.0, 1ULL), scenario_error);
}

TEST_CASE("piecewise-linear intensity integral") {
    IntensityCurve c{{{0.0, 2.0}, {10.0, 4.0}}};
    CHECK(c(0.0) == doctest::Approx(2.0));
    CHECK(c(5.0) == doctest::Approx(3.0));
    CHECK(c.integral(10.0) == doctest::Approx(30.0));
    CHECK(c.integral(5.0) == doctest::Approx(12.5));
    CHECK(c.max_rate() == doctest::Approx(4.0));
}

TEST_CASE("mnl purchase probability identities") {
    ChoiceModel m;
    SUBCASE("all-zero coefficients give a coin flip") {
        const std::vector<double> x = {0.3, 0.7};
        CHECK(mnl_purchase_prob(m, x, 0.5) == doctest::Approx(0.5));
    }
    SUBCASE("log-odds move exactly with beta_price") {
        m.beta0 = 0.4;
        m.beta_price = -4.0;
        m.beta_context = {1.0, -2.0};
        const std::vector<double> x = {0.2, 0.9};
        const double q1 = mnl_purchase_prob(m, x, 0.1);
        const double q2 = mnl_purchase_prob(m, x, 0.6);
        const double lo1 = std::log(q1 / (1.0 - q1));
        const double lo2 = std::log(q2 / (1.0 - q2));
        CHECK(lo1 - lo2 == doctest::Approx(2.0).epsilon(1e-9)); // -beta_price * 0.5
    }
    SUBCASE("two alternatives always normalize") {
        m.beta0 = 3.0;
        m.beta_price = -8.0;
        for (double p : {0.0, 0.3, 1.0}) {
            const double q = mnl_purchase_prob(m, {}, p);
            CHECK(q > 0.0);
            CHECK(q < 1.0);
        }
    }
}

TEST_CASE("simulate_market is deterministic per seed") {
    const ScenarioPresets presets = scenario_presets(5);
    const Dataset a = simulate_market(presets.test);
    const Dataset b = simulate_market(presets.test);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() > 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.rows[i].price == b.rows[i].price);
        CHECK(a.rows[i].label == b.rows[i].label);
        CHECK(a.rows[i].x == b.rows[i].x);
    }
    MarketScenario reseeded = presets.test;
    reseeded.seed += 1;
    const Dataset c = simulate_market(reseeded);
    CHECK((c.size() != a.size() || c.rows[0].price != a.rows[0].price));
}

TEST_CASE("emitted prices respect flight bounds after normalization") {
    const ScenarioPresets presets = scenario_presets(6);
    const Dataset train = simulate_market(presets.train);
    const PriceWindow w = presets.train.effective_window();
    for (const auto& r : train.rows) {
        CHECK(r.price >= 0.0);
        CHECK(r.price <= 1.0);
        const double raw = denormalize_price(r.price, w);
        CHECK(raw >= 129.9); // lowest train flight min_price
        CHECK(raw <= 412.6); // highest train flight max_price
    }
}

TEST_CASE("monotone preset conversion falls across price deciles") {
    ScenarioPresets presets = scenario_presets(7);
    // densify to stabilize the decile estimate
    for (auto& f : presets.train.flights)
        for (auto& k : f.intensity.knots) k.rate *= 4.0;
    for (auto& f : presets.train.flights) f.lambda_max *= 4.0;
    const Dataset data = simulate_market(presets.train);
    REQUIRE(data.size() > 5000);
    const auto rates = decile_conversion(data);
    CHECK(rates.front() > 2.0 * rates.back() + 0.02);
    std::size_t decreasing = 0;
    for (std::size_t d = 0; d + 1 < rates.size(); ++d)
        if (rates[d + 1] <= rates[d] + 0.02) ++decreasing;
    CHECK(decreasing >= 8);
}

TEST_CASE("non-monotone preset conversion does not decrease with price") {
    ScenarioPresets presets = scenario_presets(8);
    for (auto& f : presets.nonmonotone.flights)
        for (auto& k : f.intensity.knots) k.rate *= 2.0;
    for (auto& f : presets.nonmonotone.flights) f.lambda_max *= 2.0;
    const Dataset data = simulate_market(presets.nonmonotone);
    REQUIRE(data.size() > 3000);
    const auto rates = decile_conversion(data);
    std::size_t non_decreasing = 0, run = 0, best_run = 0;
    for (std::size_t d = 0; d + 1 < rates.size(); ++d) {
        if (rates[d + 1] >= rates[d] - 0.02) {
            ++non_decreasing;
            ++run;
        } else {
            run = 0;
        }
        best_run = std::max(best_run, run);
    }
    CHECK(best_run >= 3); // at least 3 adjacent non-decreasing deciles
    CHECK(rates.back() > rates.front());
}

TEST_CASE("bernoulli outcomes track the model probability per price bucket") {
    ScenarioPresets presets = scenario_presets(9);
    MarketScenario scenario = presets.train;
    for (auto& f : scenario.flights)
        for (auto& k : f.intensity.knots) k.rate *= 4.0;
    for (auto& f : scenario.flights) f.lambda_max *= 4.0;
    const Dataset data = simulate_market(scenario);

    // Compare empirical conversion per bucket against the mean model
    // probability in that bucket (the model sees the same contexts).
    const auto& choice = scenario.flights.front().choice;
    constexpr std::size_t kBuckets = 5;
    std::vector<double> expected(kBuckets, 0.0), observed(kBuckets, 0.0), n(kBuckets, 0.0);
    for (const auto& r : data.rows) {
        const auto b =
            std::min(kBuckets - 1, static_cast<std::size_t>(r.price * static_cast<double>(kBuckets)));
        expected[b] += mnl_purchase_prob(choice, r.x, r.price);
        observed[b] += r.label;
        n[b] += 1.0;
    }
    for (std::size_t b = 0; b < kBuckets; ++b) {
        if (n[b] < 200) continue;
        const double pbar = expected[b] / n[b];
        const double se = std::sqrt(std::max(pbar * (1.0 - pbar), 1e-6) / n[b]);
        CHECK(std::abs(observed[b] / n[b] - pbar) < 3.0 * se);
    }
}

TEST_CASE("presets match the experimental design") {
    const ScenarioPresets presets = scenario_presets(3);
    CHECK(presets.train.flights.size() == 8);
    CHECK(presets.test.flights.size() == 2);

    double train_min = 1e9, test_max = 0.0;
    for (const auto& f : presets.train.flights) train_min = std::min(train_min, f.min_price);
    for (const auto& f : presets.test.flights) test_max = std::max(test_max, f.max_price);
    CHECK(test_max < train_min); // test window sits below the train window

    // shared normalization window
    REQUIRE(presets.train.price_window.has_value());
    REQUIRE(presets.test.price_window.has_value());
    CHECK(presets.train.price_window->min == presets.test.price_window->min);
    CHECK(presets.train.price_window->max == presets.test.price_window->max);

    CHECK(presets.train.flights.front().choice.beta_price <= -3.0);

    // non-monotone preset: price windows rise with the trip-length range
    // (price-correlated context), producing the non-decreasing aggregate
    const auto& nm = presets.nonmonotone.flights;
    for (std::size_t i = 1; i < nm.size(); ++i) {
        CHECK(nm[i].min_price > nm[i - 1].min_price);
        CHECK(nm[i].context.ranges[1][0] > nm[i - 1].context.ranges[1][0]);
    }
}

TEST_CASE("scenario json round trip") {
    const ScenarioPresets presets = scenario_presets(4);
    const auto path = (std::filesystem::temp_directory_path() / "nego_scenario.json").string();
    scenario_to_json_file(presets.train, path);
    const MarketScenario back = scenario_from_json_file(path);
    CHECK(back.name == presets.train.name);
    CHECK(back.flights.size() == presets.train.flights.size());
    CHECK(back.horizon == presets.train.horizon);
    REQUIRE(back.price_window.has_value());
    CHECK(back.price_window->max == presets.train.price_window->max);
    CHECK(back.flights[3].choice.beta_price ==
          doctest::Approx(presets.train.flights[3].choice.beta_price));

    const Dataset a = simulate_market(back);
    const Dataset b = simulate_market(presets.train);
    REQUIRE(a.size() == b.size());
    CHECK(a.rows[10].price == b.rows[10].price);
    std::filesystem::remove(path);
}

TEST_CASE("scenario validation rejects malformed specs") {
    MarketScenario s;
    s.name = "bad";
    CHECK_THROWS_AS(s.validate(), scenario_error); // no flights
    FlightSpec f;
    f.id = "f";
    f.min_price = 10.0;
    f.max_price = 5.0;
    s.flights.push_back(f);
    s.horizon = 10.0;
    CHECK_THROWS_AS(s.validate(), scenario_error); // min >= max
}

#include "nego/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "nego/errors.hpp"

namespace nego {

double IntensityCurve::operator()(double t) const {
    if (knots.empty()) return 0.0;
    if (t <= knots.front().t) return knots.front().rate;
    if (t >= knots.back().t) return knots.back().rate;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (t <= knots[i].t) {
            const auto& a = knots[i - 1];
            const auto& b = knots[i];
            const double w = (t - a.t) / (b.t - a.t);
            return a.rate + w * (b.rate - a.rate);
        }
    }
    return knots.back().rate;
}

double IntensityCurve::integral(double t) const {
    if (knots.empty() || t <= 0.0) return 0.0;
    double acc = 0.0;
    double prev_t = 0.0;
    double prev_rate = (*this)(0.0);
    for (const auto& k : knots) {
        if (k.t <= 0.0) {
            prev_t = 0.0;
            prev_rate = (*this)(0.0);
            continue;
        }
        const double seg_end = std::min(k.t, t);
        if (seg_end > prev_t) {
            const double rate_end = (*this)(seg_end);
            acc += 0.5 * (prev_rate + rate_end) * (seg_end - prev_t);
            prev_t = seg_end;
            prev_rate = rate_end;
        }
        if (k.t >= t) return acc;
    }
    if (t > prev_t) acc += knots.back().rate * (t - prev_t); // constant tail
    return acc;
}

double IntensityCurve::max_rate() const {
    double m = 0.0;
    for (const auto& k : knots) m = std::max(m, k.rate);
    return m;
}

void MarketScenario::validate() const {
    if (flights.empty()) throw scenario_error("scenario '" + name + "': needs at least one flight");
    if (!(horizon > 0.0)) throw scenario_error("scenario '" + name + "': horizon must be positive");
    for (const auto& f : flights) {
        if (!(f.min_price >= 0.0) || !(f.min_price < f.max_price))
            throw scenario_error("flight '" + f.id + "': needs 0 <= min_price < max_price");
        if (f.lambda_max <= 0.0 && f.intensity.max_rate() > 0.0)
            throw scenario_error("flight '" + f.id + "': lambda_max must be positive");
        for (const auto& k : f.intensity.knots)
            if (k.rate < 0.0) throw scenario_error("flight '" + f.id + "': negative intensity");
        if (f.intensity.max_rate() > f.lambda_max)
            throw scenario_error("flight '" + f.id + "': intensity exceeds declared lambda_max");
        if (f.context.ranges.empty())
            throw scenario_error("flight '" + f.id + "': context sampler has no features");
    }
    if (price_window && !(price_window->min < price_window->max))
        throw scenario_error("scenario '" + name + "': degenerate price window");
}

PriceWindow MarketScenario::effective_window() const {
    if (price_window) return *price_window;
    PriceWindow w{flights.front().min_price, flights.front().max_price};
    for (const auto& f : flights) {
        w.min = std::min(w.min, f.min_price);
        w.max = std::max(w.max, f.max_price);
    }
    return w;
}

std::vector<double> nhpp_arrivals(const IntensityCurve& intensity, double lambda_max,
                                  double horizon, Rng& rng) {
    std::vector<double> times;
    if (lambda_max <= 0.0) return times;
    double t = 0.0;
    while (true) {
        t += rng.exponential(lambda_max);
        if (t > horizon) break;
        const double rate = intensity(t);
        if (rate > lambda_max)
            throw scenario_error("nhpp_arrivals: intensity " + std::to_string(rate) +
                                 " exceeds lambda_max at t=" + std::to_string(t));
        if (rng.uniform() < rate / lambda_max) times.push_back(t);
    }
    return times;
}

std::vector<double> nhpp_arrivals(const IntensityCurve& intensity, double lambda_max,
                                  double horizon, std::uint64_t seed) {
    Rng rng(seed);
    return nhpp_arrivals(intensity, lambda_max, horizon, rng);
}

double mnl_purchase_prob(const ChoiceModel& model, std::span<const double> x, double p_norm) {
    double u = model.beta0 + model.beta_price * p_norm;
    const std::size_t n = std::min(x.size(), model.beta_context.size());
    for (std::size_t i = 0; i < n; ++i) u += model.beta_context[i] * x[i];
    // softmax over {offer, no-purchase at utility 0}
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

Dataset simulate_market(const MarketScenario& scenario, std::vector<std::string>* warnings) {
    scenario.validate();
    const PriceWindow window = scenario.effective_window();

    Dataset data;
    data.window = window;
    data.provenance = "simulated";
    const std::size_t dim = scenario.flights.front().context.ranges.size();
    data.feature_names = {"days_to_departure", "trip_length", "party_size"};
    if (dim != 3) {
        data.feature_names.clear();
        for (std::size_t i = 0; i < dim; ++i) data.feature_names.push_back("x_" + std::to_string(i));
    }

    for (std::size_t fi = 0; fi < scenario.flights.size(); ++fi) {
        const FlightSpec& flight = scenario.flights[fi];
        if (flight.context.ranges.size() != dim)
            throw scenario_error("flight '" + flight.id + "': context dimension differs");
        Rng rng(derive_seed(scenario.seed, fi));
        const auto arrivals = nhpp_arrivals(flight.intensity, flight.lambda_max, scenario.horizon, rng);
        for (double t : arrivals) {
            Interaction row;
            row.x.resize(dim);
            // Feature 0 is days-to-departure, normalized by the horizon.
            row.x[0] = (scenario.horizon - t) / scenario.horizon;
            for (std::size_t i = 1; i < dim; ++i)
                row.x[i] = rng.uniform(flight.context.ranges[i][0], flight.context.ranges[i][1]);
            const double raw_price = rng.uniform(flight.min_price, flight.max_price);
            row.price = normalize_price(raw_price, window);
            const double prob = mnl_purchase_prob(flight.choice, row.x, row.price);
            row.label = rng.bernoulli(prob) ? 1 : 0;
            data.rows.push_back(std::move(row));
        }
    }

    if (data.rows.empty() && warnings)
        warnings->push_back("simulate_market: scenario '" + scenario.name + "' produced no arrivals");
    return data;
}

namespace {

IntensityCurve ramp(double start_rate, double end_rate, double horizon) {
    return IntensityCurve{{{0.0, start_rate}, {horizon, end_rate}}};
}

FlightSpec make_flight(std::string id, double min_price, double max_price,
                       IntensityCurve intensity, ChoiceModel choice,
                       std::array<double, 2> trip_range) {
    FlightSpec f;
    f.id = std::move(id);
    f.min_price = min_price;
    f.max_price = max_price;
    f.lambda_max = intensity.max_rate();
    f.intensity = std::move(intensity);
    f.choice = std::move(choice);
    // feature 0 (days-to-departure) is derived, its range entry is ignored
    f.context.ranges = {{0.0, 1.0}, trip_range, {0.25, 1.0}};
    return f;
}

} // namespace

ScenarioPresets scenario_presets(std::uint64_t seed) {
    ScenarioPresets presets;
    const double horizon = 30.0;

    // Shared normalization window spanning both flight groups, so the test
    // set occupies the low end of the same [0,1] scale the train set uses.
    const PriceWindow shared{30.0, 420.0};

    // Price-sensitive buyers; late bookers (high days-to-departure value at
    // t near the horizon) convert more.
    ChoiceModel monotone;
    monotone.beta0 = -0.3;
    monotone.beta_price = -6.0;
    monotone.beta_context = {1.6, -0.9, 0.5};

    presets.train.name = "paper-sim-train";
    presets.train.horizon = horizon;
    presets.train.seed = seed;
    presets.train.price_window = shared;
    for (int i = 0; i < 8; ++i) {
        const double lo = 130.0 + 10.0 * i;
        const double hi = 360.0 + 7.5 * i;
        presets.train.flights.push_back(make_flight(
            "long-" + std::to_string(i + 1), lo, hi, ramp(4.0, 12.0, horizon), monotone,
            {0.6, 1.0}));
    }

    presets.test.name = "paper-sim-test";
    presets.test.horizon = horizon;
    presets.test.seed = derive_seed(seed, 101);
    presets.test.price_window = shared;
    for (int i = 0; i < 2; ++i) {
        presets.test.flights.push_back(make_flight(
            "short-" + std::to_string(i + 1), 30.0 + 5.0 * i, 90.0 + 10.0 * i,
            ramp(6.0, 14.0, horizon), monotone, {0.05, 0.3}));
    }

    // Stand-in for the proprietary dataset: aggregate purchase ratio does
    // not decrease with price because per-flight price windows rise with
    // trip-length-driven willingness to pay, while buyers stay rational
    // (conditional demand decreasing in price).
    ChoiceModel nonmono;
    nonmono.beta0 = -2.5;
    nonmono.beta_price = -3.5;
    nonmono.beta_context = {0.8, 8.0, 0.4};
    presets.nonmonotone.name = "nonmono-sim";
    presets.nonmonotone.horizon = horizon;
    presets.nonmonotone.seed = derive_seed(seed, 202);
    presets.nonmonotone.price_window = PriceWindow{40.0, 360.0};
    const double window_lo[4] = {40.0, 90.0, 160.0, 240.0};
    const double window_hi[4] = {120.0, 200.0, 290.0, 360.0};
    const double trip_lo[4] = {0.05, 0.30, 0.50, 0.70};
    const double trip_hi[4] = {0.30, 0.50, 0.75, 0.95};
    for (int i = 0; i < 4; ++i) {
        presets.nonmonotone.flights.push_back(make_flight(
            "anc-" + std::to_string(i + 1), window_lo[i], window_hi[i],
            ramp(9.0, 20.0, horizon), nonmono, {trip_lo[i], trip_hi[i]}));
    }
    return presets;
}

namespace {

nlohmann::json intensity_to_json(const IntensityCurve& c) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& k : c.knots) arr.push_back({{"t", k.t}, {"rate", k.rate}});
    return arr;
}

IntensityCurve intensity_from_json(const nlohmann::json& j) {
    IntensityCurve c;
    for (const auto& k : j) c.knots.push_back({k.at("t").get<double>(), k.at("rate").get<double>()});
    return c;
}

} // namespace

void scenario_to_json_file(const MarketScenario& scenario, const std::string& path) {
    nlohmann::json j;
    j["name"] = scenario.name;
    j["horizon"] = scenario.horizon;
    j["seed"] = scenario.seed;
    if (scenario.price_window)
        j["price_window"] = {{"min", scenario.price_window->min}, {"max", scenario.price_window->max}};
    j["flights"] = nlohmann::json::array();
    for (const auto& f : scenario.flights) {
        nlohmann::json jf;
        jf["id"] = f.id;
        jf["min_price"] = f.min_price;
        jf["max_price"] = f.max_price;
        jf["lambda_max"] = f.lambda_max;
        jf["intensity"] = intensity_to_json(f.intensity);
        jf["choice"] = {{"beta0", f.choice.beta0},
                        {"beta_price", f.choice.beta_price},
                        {"beta_context", f.choice.beta_context}};
        nlohmann::json ranges = nlohmann::json::array();
        for (const auto& r : f.context.ranges) ranges.push_back({r[0], r[1]});
        jf["context_ranges"] = ranges;
        j["flights"].push_back(jf);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("scenario_to_json_file: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
}

MarketScenario scenario_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw scenario_error("scenario file '" + path + "' not found");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw scenario_error("scenario file '" + path + "': " + e.what());
    }
    MarketScenario s;
    try {
        s.name = j.value("name", std::string("scenario"));
        s.horizon = j.at("horizon").get<double>();
        s.seed = j.value("seed", 0ULL);
        if (j.contains("price_window"))
            s.price_window = PriceWindow{j["price_window"].at("min").get<double>(),
                                         j["price_window"].at("max").get<double>()};
        for (const auto& jf : j.at("flights")) {
            FlightSpec f;
            f.id = jf.value("id", std::string("flight"));
            f.min_price = jf.at("min_price").get<double>();
            f.max_price = jf.at("max_price").get<double>();
            f.lambda_max = jf.at("lambda_max").get<double>();
            f.intensity = intensity_from_json(jf.at("intensity"));
            f.choice.beta0 = jf.at("choice").at("beta0").get<double>();
            f.choice.beta_price = jf.at("choice").at("beta_price").get<double>();
            f.choice.beta_context = jf.at("choice").at("beta_context").get<std::vector<double>>();
            for (const auto& r : jf.at("context_ranges"))
                f.context.ranges.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
            s.flights.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw scenario_error("scenario file '" + path + "': " + e.what());
    }
    s.validate();
    return s;
}

} // namespace nego

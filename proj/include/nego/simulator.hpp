#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nego/data.hpp"
#include "nego/rng.hpp"

namespace nego {

/// Arrival rate (events/day) as a piecewise-linear function of time.
struct IntensityCurve {
    struct Knot {
        double t = 0.0;
        double rate = 0.0;
    };
    std::vector<Knot> knots; // ascending t, rates >= 0

    double operator()(double t) const;
    /// Integral of the rate over [0, t].
    double integral(double t) const;
    double max_rate() const;
};

/// Two-alternative logit against a no-purchase utility fixed at zero.
struct ChoiceModel {
    double beta0 = 0.0;
    double beta_price = 0.0; // on the normalized price scale
    std::vector<double> beta_context;
};

/// Uniform sampling ranges for the context features. Feature 0 is
/// days-to-departure and is derived from the arrival time instead of
/// being sampled.
struct ContextSampler {
    std::vector<std::array<double, 2>> ranges;
};

struct FlightSpec {
    std::string id;
    double min_price = 0.0; // currency units
    double max_price = 1.0;
    IntensityCurve intensity;
    double lambda_max = 0.0; // declared proposal rate bound
    ChoiceModel choice;
    ContextSampler context;
};

struct MarketScenario {
    std::string name;
    std::vector<FlightSpec> flights;
    double horizon = 30.0; // booking-window length in days
    std::uint64_t seed = 0;
    /// Shared normalization window; when absent the scenario's own flight
    /// price extremes are used. The paired train/test presets carry the
    /// combined window so both land on the same [0,1] scale.
    std::optional<PriceWindow> price_window;

    void validate() const;
    PriceWindow effective_window() const;
};

/// Thinning (Lewis-Shedler): homogeneous proposals at lambda_max accepted
/// with probability intensity(t)/lambda_max. Times are strictly increasing
/// within [0, horizon]. Throws scenario_error if the intensity exceeds the
/// declared bound at a proposal time.
std::vector<double> nhpp_arrivals(const IntensityCurve& intensity, double lambda_max,
                                  double horizon, std::uint64_t seed);
std::vector<double> nhpp_arrivals(const IntensityCurve& intensity, double lambda_max,
                                  double horizon, Rng& rng);

double mnl_purchase_prob(const ChoiceModel& model, std::span<const double> x, double p_norm);

/// One dataset per scenario: per flight, per NHPP arrival, sample a context
/// and a uniform offered price, normalize it, and draw the purchase from
/// the logit model. Each flight owns a derived seed so per-flight work is
/// order-independent.
Dataset simulate_market(const MarketScenario& scenario,
                        std::vector<std::string>* warnings = nullptr);

struct ScenarioPresets {
    MarketScenario train;       // 8 flights, high price bounds
    MarketScenario test;        // 2 flights, price window below the train one
    MarketScenario nonmonotone; // conversion does not decrease with price
};
ScenarioPresets scenario_presets(std::uint64_t seed = 7);

/// Scenario files are JSON with keys mirroring the structs above.
MarketScenario scenario_from_json_file(const std::string& path);
void scenario_to_json_file(const MarketScenario& scenario, const std::string& path);

} // namespace nego

#pragma once

#include <span>
#include <string>
#include <vector>

#include "nego/data.hpp"
#include "nego/mlp.hpp"
#include "nego/training.hpp"

namespace nego {

/// Forecast-then-optimize seller: a demand forecaster shared with the
/// buyer's architecture, a logistic price-response fit kept for reporting,
/// and an expected-revenue argmax over a fixed price grid.
struct BaselineSeller {
    std::vector<double> price_grid; // ascending, spans [0,1]
    double intercept = 0.0;         // logistic fit: log-odds(demand) ~ a + b*p
    double slope = 0.0;
    bool degenerate_fit = false;    // forecaster ignored price entirely
    Mlp forecaster;
};

struct ForecastHistory {
    std::vector<std::pair<double, double>> epochs; // (train CE, val CE)
    int best_epoch = 0;
};

/// Cross-entropy training of a (context, price) -> purchase probability
/// network with the same architecture and optimizer settings the NegoNets
/// buyer uses.
Mlp train_forecaster(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                     ForecastHistory* history = nullptr);

struct PriceResponse {
    double intercept = 0.0;
    double slope = 0.0;
    bool degenerate = false;
};

/// Least-squares fit of logit(mean demand over contexts) against price on
/// the grid. Degenerate (price-flat) forecasters come back with slope 0 and
/// the flag set.
PriceResponse fit_price_response(const Mlp& forecaster, const Matrix& contexts,
                                 const std::vector<double>& price_grid);

BaselineSeller make_baseline_seller(Mlp forecaster, const Matrix& contexts,
                                    std::size_t grid_points = 101);

/// Index of the revenue-maximizing grid point; exact ties keep the lower
/// price.
std::size_t argmax_revenue(const std::vector<double>& price_grid,
                           const std::vector<double>& purchase_probs);

/// Expected-revenue argmax over the grid; ties break toward the lower price.
double baseline_price(const BaselineSeller& seller, std::span<const double> context);
std::vector<double> baseline_prices(const BaselineSeller& seller, const Matrix& contexts);

void save_baseline(const BaselineSeller& seller, const std::string& dir);
BaselineSeller load_baseline(const std::string& dir);

} // namespace nego

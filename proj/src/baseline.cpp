#include "nego/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "nego/errors.hpp"
#include "nego/ioutil.hpp"
#include "nego/metrics.hpp"
#include "nego/rng.hpp"

namespace nego {

namespace {

Matrix inputs_with_price(const Dataset& data) {
    Matrix m(data.size(), data.dim() + 1);
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < data.dim(); ++c) m(r, c) = data.rows[r].x[c];
        m(r, data.dim()) = data.rows[r].price;
    }
    return m;
}

double mean_ce(const Mlp& net, const Matrix& inputs, const std::vector<int>& labels) {
    const auto out = forward(net, inputs).outputs;
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) acc += cross_entropy(labels[i], out[i]);
    return acc / static_cast<double>(out.size());
}

} // namespace

Mlp train_forecaster(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                     ForecastHistory* history) {
    if (train.size() == 0 || val.size() == 0)
        throw config_error("train_forecaster: train and validation sets must be nonempty");
    cfg.validate(train.size());

    // Same architecture and optimizer settings as the NegoNets buyer.
    Mlp net = mlp_init(train.dim() + 1, cfg.hidden, derive_seed(cfg.seed, 2));
    AdamState opt = AdamState::for_params(net.param_count(), cfg.buyer_lr);
    EarlyStopState stopper;
    stopper.patience = cfg.patience;
    stopper.tol = cfg.early_stop_tol;

    const Matrix val_in = inputs_with_price(val);
    const auto val_labels = val.labels();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(derive_seed(cfg.seed, 3));

    int best_epoch = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffler.shuffle(order);
        double epoch_ce = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t lo = 0; lo < train.size(); lo += cfg.batch_size) {
            const std::size_t hi = std::min(train.size(), lo + cfg.batch_size);
            const std::size_t n = hi - lo;
            Matrix in(n, train.dim() + 1);
            std::vector<int> ys(n);
            for (std::size_t k = 0; k < n; ++k) {
                const Interaction& row = train.rows[order[lo + k]];
                for (std::size_t c = 0; c < train.dim(); ++c) in(k, c) = row.x[c];
                in(k, train.dim()) = row.price;
                ys[k] = row.label;
            }
            const auto fr = forward(net, in);
            const double inv_n = 1.0 / static_cast<double>(n);
            double ce = 0.0;
            std::vector<double> og(n);
            for (std::size_t i = 0; i < n; ++i) {
                ce += cross_entropy(ys[i], fr.outputs[i]);
                og[i] = cross_entropy_dq(ys[i], fr.outputs[i]) * inv_n;
            }
            epoch_ce += ce * inv_n;
            const auto grads = flatten_grads(net, backward(net, fr.trace, og).param_grads);
            auto params = flatten_params(net);
            adam_step(opt, params, grads);
            assign_params(net, params);
            ++n_batches;
        }

        const double val_ce = mean_ce(net, val_in, val_labels);
        if (history)
            history->epochs.emplace_back(epoch_ce / static_cast<double>(n_batches), val_ce);
        const bool stop = early_stop_update(stopper, val_ce, {flatten_params(net)});
        if (stopper.since_improvement == 0) best_epoch = epoch;
        if (stop) break;
    }

    if (!stopper.best_params.empty()) assign_params(net, stopper.best_params[0]);
    if (history) history->best_epoch = best_epoch;
    return net;
}

PriceResponse fit_price_response(const Mlp& forecaster, const Matrix& contexts,
                                 const std::vector<double>& price_grid) {
    if (contexts.rows == 0) throw usage_error("fit_price_response: no contexts");
    if (price_grid.size() < 2) throw config_error("fit_price_response: grid needs >= 2 points");

    // Demand curve: mean forecast over contexts at each grid price.
    const std::size_t g = price_grid.size();
    std::vector<double> demand(g, 0.0);
    Matrix in(contexts.rows, contexts.cols + 1);
    for (std::size_t k = 0; k < g; ++k) {
        for (std::size_t r = 0; r < contexts.rows; ++r) {
            for (std::size_t c = 0; c < contexts.cols; ++c) in(r, c) = contexts(r, c);
            in(r, contexts.cols) = price_grid[k];
        }
        const auto out = forward(forecaster, in).outputs;
        double m = 0.0;
        for (double v : out) m += v;
        demand[k] = m / static_cast<double>(out.size());
    }

    PriceResponse fit;
    double dmin = demand[0], dmax = demand[0];
    for (double d : demand) {
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
    }
    if (dmax - dmin < 1e-12) {
        // Price-insensitive forecaster: flat logistic at the mean demand.
        const double q = std::clamp(demand[0], 1e-7, 1.0 - 1e-7);
        fit.intercept = std::log(q / (1.0 - q));
        fit.slope = 0.0;
        fit.degenerate = true;
        return fit;
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < g; ++k) {
        const double q = std::clamp(demand[k], 1e-7, 1.0 - 1e-7);
        const double z = std::log(q / (1.0 - q));
        sx += price_grid[k];
        sy += z;
        sxx += price_grid[k] * price_grid[k];
        sxy += price_grid[k] * z;
    }
    const double n = static_cast<double>(g);
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

BaselineSeller make_baseline_seller(Mlp forecaster, const Matrix& contexts,
                                    std::size_t grid_points) {
    BaselineSeller seller;
    seller.price_grid = linspace(0.0, 1.0, grid_points);
    const PriceResponse fit = fit_price_response(forecaster, contexts, seller.price_grid);
    seller.intercept = fit.intercept;
    seller.slope = fit.slope;
    seller.degenerate_fit = fit.degenerate;
    seller.forecaster = std::move(forecaster);
    return seller;
}

std::size_t argmax_revenue(const std::vector<double>& price_grid,
                           const std::vector<double>& purchase_probs) {
    if (price_grid.empty() || price_grid.size() != purchase_probs.size())
        throw shape_error("argmax_revenue: grid/probability size mismatch");
    std::size_t best = 0;
    double best_rev = price_grid[0] * purchase_probs[0];
    for (std::size_t k = 1; k < price_grid.size(); ++k) {
        const double rev = price_grid[k] * purchase_probs[k];
        if (rev > best_rev) { // strict: ties keep the lower price
            best_rev = rev;
            best = k;
        }
    }
    return best;
}

double baseline_price(const BaselineSeller& seller, std::span<const double> context) {
    Matrix in(seller.price_grid.size(), context.size() + 1);
    for (std::size_t k = 0; k < seller.price_grid.size(); ++k) {
        for (std::size_t c = 0; c < context.size(); ++c) in(k, c) = context[c];
        in(k, context.size()) = seller.price_grid[k];
    }
    const auto q = forward(seller.forecaster, in).outputs;
    return seller.price_grid[argmax_revenue(seller.price_grid, q)];
}

std::vector<double> baseline_prices(const BaselineSeller& seller, const Matrix& contexts) {
    std::vector<double> out(contexts.rows);
    for (std::size_t r = 0; r < contexts.rows; ++r) out[r] = baseline_price(seller, contexts.row(r));
    return out;
}

void save_baseline(const BaselineSeller& seller, const std::string& dir) {
    save_checkpoint(seller.forecaster, dir + "/forecaster.ckpt");
    nlohmann::json j{{"grid_points", seller.price_grid.size()},
                     {"intercept", seller.intercept},
                     {"slope", seller.slope},
                     {"degenerate_fit", seller.degenerate_fit}};
    write_file_atomic(dir + "/baseline_seller.json", j.dump(2) + "\n");
}

BaselineSeller load_baseline(const std::string& dir) {
    BaselineSeller seller;
    seller.forecaster = load_checkpoint(dir + "/forecaster.ckpt");
    std::ifstream f(dir + "/baseline_seller.json");
    if (!f) throw io_error("load_baseline: missing baseline_seller.json in '" + dir + "'");
    nlohmann::json j;
    f >> j;
    seller.price_grid = linspace(0.0, 1.0, j.at("grid_points").get<std::size_t>());
    seller.intercept = j.at("intercept").get<double>();
    seller.slope = j.at("slope").get<double>();
    seller.degenerate_fit = j.at("degenerate_fit").get<bool>();
    return seller;
}

} // namespace nego

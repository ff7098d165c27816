#include "nego/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "nego/errors.hpp"
#include "nego/rng.hpp"

namespace nego {

void TrainConfig::validate(std::size_t train_size) const {
    if (epochs <= 0) throw config_error("train config: epochs must be positive");
    if (batch_size == 0) throw config_error("train config: batch_size must be positive");
    if (batch_size > train_size)
        throw config_error("train config: batch_size exceeds dataset size");
    if (!(buyer_lr > 0.0 && buyer_lr < 1.0) || !(seller_lr > 0.0 && seller_lr < 1.0))
        throw config_error("train config: learning rates must lie in (0,1)");
    if (buyer_steps <= 0 || seller_steps <= 0)
        throw config_error("train config: steps per side must be positive");
    if (hidden.empty()) throw config_error("train config: hidden widths missing");
    if (patience <= 0) throw config_error("train config: patience must be positive");
    loss.validate();
}

namespace {

struct Batch {
    Matrix contexts;
    std::vector<double> prices;
    std::vector<int> outcomes;
};

Batch gather(const Dataset& data, const std::vector<std::size_t>& idx, std::size_t lo,
             std::size_t hi) {
    Batch b;
    const std::size_t n = hi - lo;
    const std::size_t dim = data.dim();
    b.contexts = Matrix(n, dim);
    b.prices.resize(n);
    b.outcomes.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Interaction& row = data.rows[idx[lo + k]];
        for (std::size_t c = 0; c < dim; ++c) b.contexts(k, c) = row.x[c];
        b.prices[k] = row.price;
        b.outcomes[k] = row.label;
    }
    return b;
}

Matrix with_price_column(const Matrix& contexts, const std::vector<double>& price) {
    Matrix m(contexts.rows, contexts.cols + 1);
    for (std::size_t r = 0; r < contexts.rows; ++r) {
        for (std::size_t c = 0; c < contexts.cols; ++c) m(r, c) = contexts(r, c);
        m(r, contexts.cols) = price[r];
    }
    return m;
}

void add_flat(std::vector<double>& into, const std::vector<double>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
}

} // namespace

SideGradient buyer_loss_gradient(const Mlp& seller, const Mlp& buyer, const Matrix& ctx,
                                 const std::vector<double>& prices, const std::vector<int>& ys,
                                 const LossConfig& cfg) {
    const std::size_t n = ctx.rows;
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto s = forward(seller, ctx).outputs; // fixed w.r.t. buyer params

    std::vector<double> step_up(n), step_down(n);
    std::vector<double> up_price(n), down_price(n);
    for (std::size_t i = 0; i < n; ++i) {
        step_up[i] = std::min(cfg.fd_delta, 1.0 - s[i]);
        step_down[i] = std::min(cfg.fd_delta, s[i]);
        up_price[i] = s[i] + step_up[i];
        down_price[i] = s[i] - step_down[i];
    }

    const auto at_fs = forward(buyer, with_price_column(ctx, s));
    const auto at_p = forward(buyer, with_price_column(ctx, prices));
    const auto at_up = forward(buyer, with_price_column(ctx, up_price));
    const auto at_dn = forward(buyer, with_price_column(ctx, down_price));

    double loss = 0.0;
    std::vector<double> og_fs(n), og_p(n), og_up(n), og_dn(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (at_up.outputs[i] - at_dn.outputs[i]) / (step_up[i] + step_down[i]);
        if (cfg.revenue_in_buyer)
            loss += revenue_term(s[i], at_fs.outputs[i], prices[i], ys[i]);
        loss += pointwise_penalty(d);
        loss += cfg.lambda * cross_entropy(ys[i], at_p.outputs[i]);

        og_fs[i] = cfg.revenue_in_buyer ? s[i] * inv_n : 0.0;
        og_p[i] = cfg.lambda * cross_entropy_dq(ys[i], at_p.outputs[i]) * inv_n;
        const double hinge = d > 0.0 ? inv_n / (step_up[i] + step_down[i]) : 0.0;
        og_up[i] = hinge;
        og_dn[i] = -hinge;
    }
    loss *= inv_n;

    auto grads = flatten_grads(buyer, backward(buyer, at_p.trace, og_p).param_grads);
    add_flat(grads, flatten_grads(buyer, backward(buyer, at_up.trace, og_up).param_grads));
    add_flat(grads, flatten_grads(buyer, backward(buyer, at_dn.trace, og_dn).param_grads));
    if (cfg.revenue_in_buyer)
        add_flat(grads, flatten_grads(buyer, backward(buyer, at_fs.trace, og_fs).param_grads));

    return SideGradient{loss, std::move(grads)};
}

SideGradient seller_objective_gradient(const Mlp& seller, const Mlp& buyer, const Matrix& ctx,
                                       const std::vector<double>& prices,
                                       const std::vector<int>& ys, const LossConfig& cfg) {
    const std::size_t n = ctx.rows;
    const std::size_t dim = ctx.cols;
    const double inv_n = 1.0 / static_cast<double>(n);

    const auto sr = forward(seller, ctx);
    const auto& s = sr.outputs;
    const auto br = forward(buyer, with_price_column(ctx, s));

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        objective += revenue_term(s[i], br.outputs[i], prices[i], ys[i]);
        objective -= cfg.lambda * boundary_penalty(s[i], prices[i], ys[i], cfg);
    }
    objective *= inv_n;

    // d f_b / d price at the suggested price; buyer parameters stay frozen.
    const std::vector<double> ones(n, 1.0);
    const Matrix price_grads = backward(buyer, br.trace, ones).input_grads;

    std::vector<double> coeff(n);
    for (std::size_t i = 0; i < n; ++i) {
        coeff[i] = br.outputs[i] + s[i] * price_grads(i, dim) -
                   cfg.lambda * boundary_subgrad(s[i], prices[i], ys[i], cfg);
    }

    if (cfg.pointwise_in_seller) {
        // Optional: let the shape term shape the seller as well. Chain the
        // hinge through both finite-difference probes (steps held fixed).
        std::vector<double> step_up(n), step_down(n), up_price(n), down_price(n);
        for (std::size_t i = 0; i < n; ++i) {
            step_up[i] = std::min(cfg.fd_delta, 1.0 - s[i]);
            step_down[i] = std::min(cfg.fd_delta, s[i]);
            up_price[i] = s[i] + step_up[i];
            down_price[i] = s[i] - step_down[i];
        }
        const auto at_up = forward(buyer, with_price_column(ctx, up_price));
        const auto at_dn = forward(buyer, with_price_column(ctx, down_price));
        const Matrix g_up = backward(buyer, at_up.trace, ones).input_grads;
        const Matrix g_dn = backward(buyer, at_dn.trace, ones).input_grads;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (at_up.outputs[i] - at_dn.outputs[i]) / (step_up[i] + step_down[i]);
            if (d > 0.0)
                coeff[i] += (g_up(i, dim) - g_dn(i, dim)) / (step_up[i] + step_down[i]);
        }
    }

    std::vector<double> og(n);
    for (std::size_t i = 0; i < n; ++i) og[i] = coeff[i] * inv_n;
    auto grads = flatten_grads(seller, backward(seller, sr.trace, og).param_grads);
    return SideGradient{objective, std::move(grads)};
}

double train_step(Mlp& seller, Mlp& buyer, AdamState& seller_opt, AdamState& buyer_opt,
                  const Matrix& contexts, const std::vector<double>& prices,
                  const std::vector<int>& outcomes, const LossConfig& cfg, Side side) {
    if (contexts.rows == 0) throw usage_error("train_step: empty batch");
    if (prices.size() != contexts.rows || outcomes.size() != contexts.rows)
        throw shape_error("train_step: batch arrays disagree");
    double loss;
    if (side == Side::Buyer) {
        SideGradient sg = buyer_loss_gradient(seller, buyer, contexts, prices, outcomes, cfg);
        auto params = flatten_params(buyer);
        adam_step(buyer_opt, params, sg.grads, /*maximize=*/false);
        assign_params(buyer, params);
        loss = sg.value;
    } else {
        SideGradient sg = seller_objective_gradient(seller, buyer, contexts, prices, outcomes, cfg);
        auto params = flatten_params(seller);
        adam_step(seller_opt, params, sg.grads, /*maximize=*/true);
        assign_params(seller, params);
        loss = sg.value;
    }
    if (!std::isfinite(loss)) throw training_error("train_step: non-finite loss");
    return loss;
}

std::vector<double> suggest_prices(const Mlp& seller, const Matrix& contexts) {
    return forward(seller, contexts).outputs;
}

TrainedNegonets train_negonets(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                               const Mlp* seller_init, const Mlp* buyer_init) {
    if (train.size() == 0 || val.size() == 0)
        throw config_error("train_negonets: train and validation sets must be nonempty");
    if (train.dim() != val.dim())
        throw config_error("train_negonets: train/validation dimensions disagree");
    cfg.validate(train.size());

    const std::size_t dim = train.dim();
    TrainedNegonets result;
    result.seller = seller_init ? *seller_init : mlp_init(dim, cfg.hidden, derive_seed(cfg.seed, 1));
    result.buyer = buyer_init ? *buyer_init : mlp_init(dim + 1, cfg.hidden, derive_seed(cfg.seed, 2));
    if (result.seller.input_dim != dim || result.buyer.input_dim != dim + 1)
        throw config_error("train_negonets: checkpoint dimensions do not match the dataset");

    AdamState seller_opt = AdamState::for_params(result.seller.param_count(), cfg.seller_lr);
    AdamState buyer_opt = AdamState::for_params(result.buyer.param_count(), cfg.buyer_lr);
    EarlyStopState stopper;
    stopper.patience = cfg.patience;
    stopper.tol = cfg.early_stop_tol;

    const Matrix val_ctx = val.contexts();
    const auto val_prices = val.prices();
    const auto val_labels = val.labels();
    const Matrix train_ctx = train.contexts();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(derive_seed(cfg.seed, 3));

    int best_epoch = 0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffler.shuffle(order);

        double buyer_sum = 0.0, seller_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t lo = 0; lo < train.size(); lo += cfg.batch_size) {
            const std::size_t hi = std::min(train.size(), lo + cfg.batch_size);
            const Batch batch = gather(train, order, lo, hi);
            try {
                for (int k = 0; k < cfg.buyer_steps; ++k)
                    buyer_sum += train_step(result.seller, result.buyer, seller_opt, buyer_opt,
                                            batch.contexts, batch.prices, batch.outcomes, cfg.loss,
                                            Side::Buyer);
                for (int k = 0; k < cfg.seller_steps; ++k)
                    seller_sum += train_step(result.seller, result.buyer, seller_opt, buyer_opt,
                                             batch.contexts, batch.prices, batch.outcomes, cfg.loss,
                                             Side::Seller);
            } catch (const training_error& e) {
                throw training_error("epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(n_batches) + ": " + e.what());
            }
            ++n_batches;
        }

        const auto val_terms =
            batch_terms(result.seller, result.buyer, val_ctx, val_prices, val_labels, cfg.loss);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.buyer_loss = buyer_sum / static_cast<double>(n_batches * cfg.buyer_steps);
        rec.seller_objective = seller_sum / static_cast<double>(n_batches * cfg.seller_steps);
        rec.val_buyer_loss = buyer_training_loss(val_terms, cfg.loss);
        rec.val_seller_objective = seller_objective(val_terms, cfg.loss);

        const auto sugg = suggest_prices(result.seller, train_ctx);
        double mean = 0.0;
        for (double v : sugg) mean += v;
        mean /= static_cast<double>(sugg.size());
        double var = 0.0;
        for (double v : sugg) var += (v - mean) * (v - mean);
        rec.suggested_price_std = std::sqrt(var / static_cast<double>(sugg.size()));
        if (rec.suggested_price_std < 1e-3) result.history.mode_collapse_flagged = true;

        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.epochs.push_back(rec);

        for (double v : {rec.buyer_loss, rec.seller_objective, rec.val_buyer_loss,
                         rec.val_seller_objective})
            if (!std::isfinite(v))
                throw training_error("epoch " + std::to_string(epoch) + ": non-finite history value");

        const bool stop = early_stop_update(
            stopper, rec.val_buyer_loss,
            {flatten_params(result.seller), flatten_params(result.buyer)});
        if (stopper.since_improvement == 0) best_epoch = epoch;
        if (stop) break;
    }

    if (!stopper.best_params.empty()) {
        assign_params(result.seller, stopper.best_params[0]);
        assign_params(result.buyer, stopper.best_params[1]);
    }
    result.history.best_epoch = best_epoch;
    return result;
}

std::string render_history(const TrainHistory& history) {
    std::ostringstream out;
    out << "epoch\tbuyer_loss\tseller_objective\tval_buyer_loss\tval_seller_objective\t"
           "suggested_price_std\twall_seconds\n";
    char buf[224];
    for (const auto& r : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.3f\n", r.epoch,
                      r.buyer_loss, r.seller_objective, r.val_buyer_loss, r.val_seller_objective,
                      r.suggested_price_std, r.wall_seconds);
        out << buf;
    }
    return out.str();
}

} // namespace nego

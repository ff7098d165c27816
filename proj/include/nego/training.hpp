#pragma once

#include <cstdint>
#include <vector>

#include "nego/data.hpp"
#include "nego/losses.hpp"
#include "nego/mlp.hpp"
#include "nego/optimizer.hpp"

namespace nego {

struct TrainConfig {
    int epochs = 80;
    std::size_t batch_size = 128;
    double buyer_lr = 0.01;
    double seller_lr = 0.01;
    int buyer_steps = 1;  // buyer half-steps per batch
    int seller_steps = 1; // seller half-steps per batch
    std::uint64_t seed = 1;
    std::vector<std::size_t> hidden = {16, 16, 16}; // three hidden layers + output
    int patience = 10;
    double early_stop_tol = 1e-6;
    LossConfig loss;

    void validate(std::size_t train_size) const;
};

struct EpochRecord {
    int epoch = 0;
    double buyer_loss = 0.0;
    double seller_objective = 0.0;
    double val_buyer_loss = 0.0;
    double val_seller_objective = 0.0;
    double suggested_price_std = 0.0; // mode-collapse monitor
    double wall_seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;       // 1-based epoch the returned snapshot comes from
    bool mode_collapse_flagged = false; // suggested-price std fell below 1e-3
};

struct TrainedNegonets {
    Mlp seller;
    Mlp buyer;
    TrainHistory history;
};

enum class Side { Buyer, Seller };

/// Value and flattened parameter gradient of one side's objective, with the
/// opposing network frozen. The seller's gradient flows through the buyer's
/// price input but never into buyer parameters.
struct SideGradient {
    double value = 0.0;
    std::vector<double> grads;
};
SideGradient buyer_loss_gradient(const Mlp& seller, const Mlp& buyer, const Matrix& contexts,
                                 const std::vector<double>& prices,
                                 const std::vector<int>& outcomes, const LossConfig& cfg);
SideGradient seller_objective_gradient(const Mlp& seller, const Mlp& buyer, const Matrix& contexts,
                                       const std::vector<double>& prices,
                                       const std::vector<int>& outcomes, const LossConfig& cfg);

/// One half-step of the alternation on one batch: updates exactly one
/// network (the other is read-only) and returns that side's scalar loss
/// value at the pre-update parameters.
double train_step(Mlp& seller, Mlp& buyer, AdamState& seller_opt, AdamState& buyer_opt,
                  const Matrix& contexts, const std::vector<double>& prices,
                  const std::vector<int>& outcomes, const LossConfig& cfg, Side side);

/// Alternating minimax training with early stopping on the validation
/// buyer loss; returns the networks snapshotted at the best epoch.
/// Optional initial networks support resuming from a checkpoint pair.
TrainedNegonets train_negonets(const Dataset& train, const Dataset& val, const TrainConfig& cfg,
                               const Mlp* seller_init = nullptr, const Mlp* buyer_init = nullptr);

std::vector<double> suggest_prices(const Mlp& seller, const Matrix& contexts);

/// History table (one row per epoch, tab separated).
std::string render_history(const TrainHistory& history);

} // namespace nego

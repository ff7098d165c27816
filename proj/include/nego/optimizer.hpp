#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace nego {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    static AdamState for_params(std::size_t n, double lr_);
};

/// Standard Adam update with bias correction. maximize=true negates the
/// gradient, turning the step into ascent (the seller side of the game).
/// Throws training_error on non-finite gradients.
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads, bool maximize = false);

struct EarlyStopState {
    double best_loss = std::numeric_limits<double>::infinity();
    int patience = 10;
    int since_improvement = 0;
    double tol = 1e-6; // improvement below this counts as none
    std::vector<std::vector<double>> best_params;
};

/// Returns true when training should stop (patience exceeded). Snapshots
/// `params` whenever the loss improves by more than tol.
bool early_stop_update(EarlyStopState& state, double val_loss,
                       const std::vector<std::vector<double>>& params);

} // namespace nego

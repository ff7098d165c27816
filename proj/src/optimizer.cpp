#include "nego/optimizer.hpp"

#include <cmath>
#include <string>

#include "nego/errors.hpp"

namespace nego {

AdamState AdamState::for_params(std::size_t n, double lr_) {
    AdamState s;
    s.lr = lr_;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grads, bool maximize) {
    if (params.size() != state.m.size() || grads.size() != state.m.size())
        throw shape_error("adam_step: parameter/gradient size mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        if (!std::isfinite(g))
            throw training_error("adam_step: non-finite gradient at index " + std::to_string(i));
        if (maximize) g = -g;
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

bool early_stop_update(EarlyStopState& state, double val_loss,
                       const std::vector<std::vector<double>>& params) {
    if (!std::isfinite(val_loss))
        throw training_error("early_stop_update: non-finite validation loss");
    if (val_loss < state.best_loss - state.tol) {
        state.best_loss = val_loss;
        state.since_improvement = 0;
        state.best_params = params;
        return false;
    }
    state.since_improvement += 1;
    return state.since_improvement > state.patience;
}

} // namespace nego

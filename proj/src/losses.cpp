#include "nego/losses.hpp"

#include <algorithm>
#include <cmath>

#include "nego/errors.hpp"

namespace nego {

namespace {
constexpr double kCeClamp = 1e-7;
}

void LossConfig::validate() const {
    if (!(c1 > 0.0 && c1 < 1.0)) throw config_error("loss config: c1 must lie in (0,1)");
    if (!(c2 > 1.0)) throw config_error("loss config: c2 must exceed 1");
    if (lambda < 0.0) throw config_error("loss config: lambda must be non-negative");
    if (!(fd_delta > 0.0 && fd_delta <= 0.1))
        throw config_error("loss config: fd_delta must lie in (0, 0.1]");
    if (!(classification_threshold > 0.0 && classification_threshold < 1.0))
        throw config_error("loss config: classification threshold must lie in (0,1)");
}

double lower_bound(double p, int y, double c1) {
    return y == 1 ? p : c1 * p;
}

double upper_bound(double p, int y, double c2) {
    return y == 1 ? c2 * p : p;
}

double boundary_penalty(double f_s, double p, int y, const LossConfig& cfg) {
    const double lo = lower_bound(p, y, cfg.c1);
    const double hi = upper_bound(p, y, cfg.c2);
    return std::max(0.0, lo - f_s) + std::max(0.0, f_s - hi);
}

double boundary_subgrad(double f_s, double p, int y, const LossConfig& cfg) {
    const double lo = lower_bound(p, y, cfg.c1);
    const double hi = upper_bound(p, y, cfg.c2);
    if (f_s < lo) return -1.0;
    if (f_s > hi) return 1.0;
    return 0.0;
}

double cross_entropy(int y, double q) {
    const double qc = std::clamp(q, kCeClamp, 1.0 - kCeClamp);
    return y == 1 ? -std::log(qc) : -std::log(1.0 - qc);
}

double cross_entropy_dq(int y, double q) {
    const double qc = std::clamp(q, kCeClamp, 1.0 - kCeClamp);
    return y == 1 ? -1.0 / qc : 1.0 / (1.0 - qc);
}

double revenue_term(double f_s, double f_b_at_fs, double p, int y) {
    return f_s * f_b_at_fs - p * static_cast<double>(y);
}

SensitivityProbe sensitivity_probe(const Mlp& buyer, std::span<const double> x, double s,
                                   double fd_delta) {
    SensitivityProbe probe;
    probe.step_up = std::min(fd_delta, 1.0 - s);
    probe.step_down = std::min(fd_delta, s);
    if (probe.step_up < 0.0) probe.step_up = 0.0;
    if (probe.step_down < 0.0) probe.step_down = 0.0;

    Matrix in(2, x.size() + 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        in(0, i) = x[i];
        in(1, i) = x[i];
    }
    in(0, x.size()) = s + probe.step_up;
    in(1, x.size()) = s - probe.step_down;
    const auto out = forward(buyer, in).outputs;
    probe.f_up = out[0];
    probe.f_down = out[1];
    probe.value = (probe.f_up - probe.f_down) / (probe.step_up + probe.step_down);
    return probe;
}

double sensitivity_estimate(const Mlp& buyer, std::span<const double> x, double s,
                            double fd_delta) {
    return sensitivity_probe(buyer, x, s, fd_delta).value;
}

double pointwise_penalty(double d) {
    return std::max(0.0, d);
}

BatchTerms batch_terms(const Mlp& seller, const Mlp& buyer, const Matrix& contexts,
                       const std::vector<double>& prices, const std::vector<int>& outcomes,
                       const LossConfig& cfg) {
    const std::size_t n = contexts.rows;
    if (prices.size() != n || outcomes.size() != n)
        throw shape_error("batch_terms: context/price/outcome sizes disagree");
    if (n == 0) throw usage_error("batch_terms: empty batch");

    BatchTerms terms;
    terms.p = prices;
    terms.y = outcomes;
    terms.f_s = forward(seller, contexts).outputs;

    const std::size_t dim = contexts.cols;
    Matrix at_fs(n, dim + 1);
    Matrix at_p(n, dim + 1);
    Matrix up(n, dim + 1);
    Matrix down(n, dim + 1);
    std::vector<double> step_up(n), step_down(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double s = terms.f_s[r];
        step_up[r] = std::min(cfg.fd_delta, 1.0 - s);
        step_down[r] = std::min(cfg.fd_delta, s);
        for (std::size_t c = 0; c < dim; ++c) {
            const double v = contexts(r, c);
            at_fs(r, c) = v;
            at_p(r, c) = v;
            up(r, c) = v;
            down(r, c) = v;
        }
        at_fs(r, dim) = s;
        at_p(r, dim) = prices[r];
        up(r, dim) = s + step_up[r];
        down(r, dim) = s - step_down[r];
    }

    terms.f_b_at_fs = forward(buyer, at_fs).outputs;
    terms.f_b_at_p = forward(buyer, at_p).outputs;
    const auto f_up = forward(buyer, up).outputs;
    const auto f_down = forward(buyer, down).outputs;
    terms.sens.resize(n);
    for (std::size_t r = 0; r < n; ++r)
        terms.sens[r] = (f_up[r] - f_down[r]) / (step_up[r] + step_down[r]);
    return terms;
}

double buyer_loss(const BatchTerms& batch, const LossConfig& cfg) {
    if (batch.size() == 0) throw usage_error("buyer_loss: empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        acc += revenue_term(batch.f_s[i], batch.f_b_at_fs[i], batch.p[i], batch.y[i]);
        acc += pointwise_penalty(batch.sens[i]);
        acc += cfg.lambda * cross_entropy(batch.y[i], batch.f_b_at_p[i]);
    }
    return acc / static_cast<double>(batch.size());
}

double buyer_training_loss(const BatchTerms& batch, const LossConfig& cfg) {
    double acc = buyer_loss(batch, cfg) * static_cast<double>(batch.size());
    if (!cfg.revenue_in_buyer) {
        for (std::size_t i = 0; i < batch.size(); ++i)
            acc -= revenue_term(batch.f_s[i], batch.f_b_at_fs[i], batch.p[i], batch.y[i]);
    }
    return acc / static_cast<double>(batch.size());
}

double seller_objective(const BatchTerms& batch, const LossConfig& cfg) {
    if (batch.size() == 0) throw usage_error("seller_objective: empty batch");
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        acc += revenue_term(batch.f_s[i], batch.f_b_at_fs[i], batch.p[i], batch.y[i]);
        acc -= cfg.lambda * boundary_penalty(batch.f_s[i], batch.p[i], batch.y[i], cfg);
    }
    return acc / static_cast<double>(batch.size());
}

} // namespace nego

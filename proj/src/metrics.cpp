#include "nego/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nego/errors.hpp"
#include "nego/rng.hpp"

namespace nego {

std::size_t validate_records(std::vector<EvalRecord>& records) {
    const std::size_t before = records.size();
    std::erase_if(records, [](const EvalRecord& r) { return r.y == 1 && r.p <= 0.0; });
    return before - records.size();
}

namespace {

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
                         static_cast<double>(fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(tp) / denom;
}

double f1_of(const std::vector<EvalRecord>& records, double threshold) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
        const int pred = r.q >= threshold ? 1 : 0;
        if (pred == 1 && r.y == 1) ++tp;
        else if (pred == 1 && r.y == 0) ++fp;
        else if (pred == 0 && r.y == 1) ++fn;
    }
    return f1_from_counts(tp, fp, fn);
}

} // namespace

double f1_score(const std::vector<EvalRecord>& records, double threshold) {
    if (records.empty()) throw usage_error("f1_score: no records");
    return f1_of(records, threshold);
}

double f1_bootstrap_std(const std::vector<EvalRecord>& records, double threshold,
                        std::size_t resamples, std::uint64_t seed) {
    if (records.empty()) throw usage_error("f1_bootstrap_std: no records");
    Rng rng(seed);
    std::vector<double> scores(resamples);
    std::vector<EvalRecord> sample(records.size());
    for (std::size_t b = 0; b < resamples; ++b) {
        for (auto& s : sample)
            s = records[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(records.size()) - 1))];
        scores[b] = f1_of(sample, threshold);
    }
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(resamples);
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    return std::sqrt(var / static_cast<double>(resamples));
}

MonotonicityScore monotonicity_score(const Mlp& buyer, const Matrix& contexts,
                                     const std::vector<double>& price_grid) {
    if (price_grid.size() < 3)
        throw config_error("monotonicity_score: price grid needs at least 3 points");
    for (std::size_t i = 1; i < price_grid.size(); ++i)
        if (!(price_grid[i] > price_grid[i - 1]))
            throw config_error("monotonicity_score: price grid must be ascending");
    if (contexts.rows == 0) throw usage_error("monotonicity_score: no contexts");

    const std::size_t g = price_grid.size();
    // Batch all (context, grid point) pairs through one forward pass.
    Matrix in(contexts.rows * g, contexts.cols + 1);
    for (std::size_t r = 0; r < contexts.rows; ++r) {
        for (std::size_t k = 0; k < g; ++k) {
            const std::size_t row = r * g + k;
            for (std::size_t c = 0; c < contexts.cols; ++c) in(row, c) = contexts(r, c);
            in(row, contexts.cols) = price_grid[k];
        }
    }
    const auto out = forward(buyer, in).outputs;

    // Ties satisfy both conditions; differences below kTieTol are treated as
    // ties so that saturated network regions (probabilities pinned at the
    // clamp) do not register microscopic curvature as violations.
    constexpr double kTieTol = 1e-6;
    std::vector<double> scores(contexts.rows);
    for (std::size_t r = 0; r < contexts.rows; ++r) {
        const double* q = out.data() + r * g;
        std::size_t dec_ok = 0;
        for (std::size_t k = 0; k + 1 < g; ++k)
            if (q[k + 1] <= q[k] + kTieTol) ++dec_ok;
        std::size_t cvx_ok = 0;
        for (std::size_t k = 0; k + 2 < g; ++k)
            if (q[k + 2] - 2.0 * q[k + 1] + q[k] >= -kTieTol) ++cvx_ok;
        const double frac_dec = static_cast<double>(dec_ok) / static_cast<double>(g - 1);
        const double frac_cvx = static_cast<double>(cvx_ok) / static_cast<double>(g - 2);
        scores[r] = 0.5 * frac_dec + 0.5 * frac_cvx;
    }

    MonotonicityScore ms;
    for (double s : scores) ms.mean += s;
    ms.mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - ms.mean) * (s - ms.mean);
    ms.std = std::sqrt(var / static_cast<double>(scores.size()));
    return ms;
}

namespace {

RatioMetrics ratio_metrics(const std::vector<EvalRecord>& records, int outcome, bool increase) {
    if (records.empty()) throw usage_error("ratio metrics: no records");
    std::size_t with_outcome = 0, moved = 0, both = 0;
    for (const auto& r : records) {
        const bool outcome_hit = r.y == outcome;
        const bool moved_hit = increase ? r.f_s > r.p : r.f_s < r.p;
        if (outcome_hit) ++with_outcome;
        if (moved_hit) ++moved;
        if (outcome_hit && moved_hit) ++both;
    }
    RatioMetrics m;
    if (with_outcome > 0)
        m.recall = static_cast<double>(both) / static_cast<double>(with_outcome);
    if (moved > 0) m.precision = static_cast<double>(both) / static_cast<double>(moved);
    if (m.recall && m.precision) {
        const double sum = *m.recall + *m.precision;
        m.f1 = sum == 0.0 ? 0.0 : 2.0 * (*m.recall) * (*m.precision) / sum;
    }
    return m;
}

} // namespace

RatioMetrics price_decrease_metrics(const std::vector<EvalRecord>& records) {
    return ratio_metrics(records, 0, false);
}

RatioMetrics price_increase_metrics(const std::vector<EvalRecord>& records) {
    return ratio_metrics(records, 1, true);
}

std::optional<double> regret_score(const std::vector<EvalRecord>& records) {
    std::vector<double> regrets;
    for (const auto& r : records) {
        if (r.y != 1) continue;
        if (r.p <= 0.0) throw usage_error("regret_score: purchase with non-positive price");
        regrets.push_back(std::max(0.0, 1.0 - r.f_s / r.p));
    }
    if (regrets.empty()) return std::nullopt;
    std::sort(regrets.begin(), regrets.end());
    const std::size_t n = regrets.size();
    if (n % 2 == 1) return regrets[n / 2];
    return 0.5 * (regrets[n / 2 - 1] + regrets[n / 2]);
}

MetricsReport evaluate_records(const std::string& model_name, std::vector<EvalRecord> records,
                               const Mlp* buyer_for_monotonicity, const Matrix& contexts,
                               const std::vector<double>& price_grid, double threshold) {
    MetricsReport rep;
    rep.model = model_name;
    rep.rejected_records = validate_records(records);
    if (records.empty()) throw usage_error("evaluate_records: no valid records");
    rep.n = records.size();
    for (const auto& r : records) (r.y == 1 ? rep.purchases : rep.non_purchases) += 1;

    rep.f1 = f1_score(records, threshold);
    rep.f1_std = f1_bootstrap_std(records, threshold);
    bool any_pred = false, any_true = false;
    for (const auto& r : records) {
        if (r.q >= threshold) any_pred = true;
        if (r.y == 1) any_true = true;
    }
    rep.f1_degenerate = !any_pred && !any_true;

    if (buyer_for_monotonicity)
        rep.monotonicity = monotonicity_score(*buyer_for_monotonicity, contexts, price_grid);
    rep.decrease = price_decrease_metrics(records);
    rep.increase = price_increase_metrics(records);
    rep.rs = regret_score(records);
    return rep;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt(*v) : std::string("n/a");
}

} // namespace

std::string render_report_keys(const std::vector<MetricsReport>& reports) {
    std::ostringstream out;
    for (const auto& r : reports) {
        out << r.model << ".n " << r.n << "\n";
        out << r.model << ".purchases " << r.purchases << "\n";
        out << r.model << ".non_purchases " << r.non_purchases << "\n";
        out << r.model << ".rejected " << r.rejected_records << "\n";
        out << r.model << ".f1 " << fmt(r.f1) << "\n";
        out << r.model << ".f1_std " << fmt(r.f1_std) << "\n";
        if (r.f1_degenerate) out << r.model << ".f1_degenerate 1\n";
        out << r.model << ".m " << fmt(r.monotonicity.mean) << "\n";
        out << r.model << ".m_std " << fmt(r.monotonicity.std) << "\n";
        out << r.model << ".pdr " << fmt_opt(r.decrease.recall) << "\n";
        out << r.model << ".pdp " << fmt_opt(r.decrease.precision) << "\n";
        out << r.model << ".pdf1 " << fmt_opt(r.decrease.f1) << "\n";
        out << r.model << ".pir " << fmt_opt(r.increase.recall) << "\n";
        out << r.model << ".pip " << fmt_opt(r.increase.precision) << "\n";
        out << r.model << ".pif1 " << fmt_opt(r.increase.f1) << "\n";
        out << r.model << ".rs " << fmt_opt(r.rs) << "\n";
    }
    return out.str();
}

std::string render_report_table(const std::vector<MetricsReport>& reports) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s %-20s %-20s %-10s %-10s %-10s\n", "model", "f1", "m",
                  "pdf1", "pif1", "rs");
    out << line;
    for (const auto& r : reports) {
        const std::string f1 = fmt(r.f1) + "+-" + fmt(r.f1_std);
        const std::string m = fmt(r.monotonicity.mean) + "+-" + fmt(r.monotonicity.std);
        std::snprintf(line, sizeof(line), "%-10s %-20s %-20s %-10s %-10s %-10s\n", r.model.c_str(),
                      f1.c_str(), m.c_str(), fmt_opt(r.decrease.f1).c_str(),
                      fmt_opt(r.increase.f1).c_str(), fmt_opt(r.rs).c_str());
        out << line;
    }
    return out.str();
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

} // namespace nego

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nego/linalg.hpp"
#include "nego/mlp.hpp"

namespace nego {

struct EvalRecord {
    double p = 0.0;  // offered price
    double f_s = 0.0; // suggested price
    double q = 0.0;  // predicted purchase probability
    int y = 0;       // outcome
};

/// Drops records that cannot be scored (a purchase offered at price zero
/// has no defined regret); returns the number removed.
std::size_t validate_records(std::vector<EvalRecord>& records);

double f1_score(const std::vector<EvalRecord>& records, double threshold);

/// Standard deviation of F1 over bootstrap resamples (the variance source
/// behind the reported "+-").
double f1_bootstrap_std(const std::vector<EvalRecord>& records, double threshold,
                        std::size_t resamples = 100, std::uint64_t seed = 1234);

struct MonotonicityScore {
    double mean = 0.0;
    double std = 0.0;
};

/// Diminishing-returns score of the buyer over a price grid: per context,
/// 50/50 mix of the fraction of adjacent pairs with non-increasing output
/// and adjacent triples with non-negative second difference. Ties satisfy
/// both (differences under 1e-6 count as ties). Mean and std are over
/// contexts. Note the ceiling: a sigmoid-shaped curve is concave on its
/// upper shoulder, so even an ideally monotone buyer scores below 1 unless
/// its saturated regions are numerically flat.
MonotonicityScore monotonicity_score(const Mlp& buyer, const Matrix& contexts,
                                     const std::vector<double>& price_grid);

struct RatioMetrics {
    std::optional<double> recall;
    std::optional<double> precision;
    std::optional<double> f1;
};

/// PDR / PDP / PDF1: suggesting lower prices on non-purchases.
RatioMetrics price_decrease_metrics(const std::vector<EvalRecord>& records);
/// PIR / PIP / PIF1: suggesting higher prices on purchases.
RatioMetrics price_increase_metrics(const std::vector<EvalRecord>& records);

/// Median over purchases of max(0, 1 - f_s/p).
std::optional<double> regret_score(const std::vector<EvalRecord>& records);

struct MetricsReport {
    std::string model;
    double f1 = 0.0;
    double f1_std = 0.0;
    bool f1_degenerate = false; // no positives on either side
    MonotonicityScore monotonicity;
    RatioMetrics decrease;
    RatioMetrics increase;
    std::optional<double> rs;
    std::size_t n = 0;
    std::size_t purchases = 0;
    std::size_t non_purchases = 0;
    std::size_t rejected_records = 0;
};

MetricsReport evaluate_records(const std::string& model_name, std::vector<EvalRecord> records,
                               const Mlp* buyer_for_monotonicity, const Matrix& contexts,
                               const std::vector<double>& price_grid, double threshold);

/// Canonical flat key/value rendering; absent metrics print as "n/a".
std::string render_report_keys(const std::vector<MetricsReport>& reports);
/// Aligned side-by-side table (one row per model).
std::string render_report_table(const std::vector<MetricsReport>& reports);

std::vector<double> linspace(double lo, double hi, std::size_t points);

} // namespace nego

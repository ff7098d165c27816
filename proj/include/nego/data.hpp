#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nego/linalg.hpp"

namespace nego {

/// One market event: context, normalized offered price, outcome.
struct Interaction {
    std::vector<double> x;
    double price = 0.0; // in [0,1]
    int label = 0;      // 0 or 1
};

struct PriceWindow {
    double min = 0.0;
    double max = 1.0;
};

struct Dataset {
    std::vector<std::string> feature_names;
    PriceWindow window;          // raw currency window behind the [0,1] prices
    std::string provenance = "external"; // "simulated" | "external"
    std::vector<Interaction> rows;

    std::size_t size() const { return rows.size(); }
    std::size_t dim() const { return feature_names.size(); }

    Matrix contexts() const;
    std::vector<double> prices() const;
    std::vector<int> labels() const;

    /// Throws ingestion_error on any invariant violation (row-indexed).
    void validate() const;
};

/// CSV schema: header x_0,...,x_{D-1},price,label. A sidecar metadata file
/// at <path>.meta.json carries the normalization window and provenance.
Dataset load_csv(const std::string& path, std::vector<std::string>* warnings = nullptr);
void save_csv(const Dataset& data, const std::string& path);

double normalize_price(double raw, const PriceWindow& w);
double denormalize_price(double normalized, const PriceWindow& w);
std::vector<double> normalize_prices(const std::vector<double>& raw, const PriceWindow& w);

struct SplitResult {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Disjoint shuffled partition; defaults follow the 20% test then 80-20
/// train/validation protocol.
SplitResult split(const Dataset& data, double test_frac, double val_frac_of_remaining,
                  std::uint64_t seed);

/// Two-way variant for datasets whose test set lives elsewhere (whole-flight
/// splits in the simulation experiments).
std::pair<Dataset, Dataset> split_train_val(const Dataset& data, double val_frac,
                                            std::uint64_t seed);

Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx);

} // namespace nego

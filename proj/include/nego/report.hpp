#pragma once

#include <string>
#include <vector>

#include "nego/metrics.hpp"

namespace nego {

/// Offered-price histogram over [0,1] (the Fig. 2 analogue as data).
std::string price_histogram_tsv(const std::vector<double>& prices, std::size_t bins = 20);

/// Conversion rate per equal-width price bucket with frequencies (Fig. 3
/// analogue).
std::string conversion_by_bucket_tsv(const std::vector<double>& prices,
                                     const std::vector<int>& labels, std::size_t buckets = 10);

/// Suggested-vs-offered 2-D histogram split by outcome (Fig. 4 analogue).
/// Emits exactly bins*bins*2 data rows.
std::string heatmap_tsv(const std::vector<EvalRecord>& records, std::size_t bins = 20);

} // namespace nego

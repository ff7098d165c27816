#include "nego/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace nego {

namespace {

std::size_t bucket_of(double v, std::size_t bins) {
    auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
    return std::min(b, bins - 1); // v == 1.0 lands in the top bucket
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

std::string price_histogram_tsv(const std::vector<double>& prices, std::size_t bins) {
    std::vector<std::size_t> counts(bins, 0);
    for (double p : prices) counts[bucket_of(std::clamp(p, 0.0, 1.0), bins)] += 1;
    std::ostringstream out;
    out << "bin_lo\tbin_hi\tcount\n";
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / static_cast<double>(bins);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(bins);
        out << fmt(lo) << "\t" << fmt(hi) << "\t" << counts[b] << "\n";
    }
    return out.str();
}

std::string conversion_by_bucket_tsv(const std::vector<double>& prices,
                                     const std::vector<int>& labels, std::size_t buckets) {
    std::vector<std::size_t> n(buckets, 0), pos(buckets, 0);
    for (std::size_t i = 0; i < prices.size(); ++i) {
        const std::size_t b = bucket_of(std::clamp(prices[i], 0.0, 1.0), buckets);
        n[b] += 1;
        if (labels[i] == 1) pos[b] += 1;
    }
    std::ostringstream out;
    out << "bucket\tprice_lo\tprice_hi\tn\tpurchases\trate\n";
    for (std::size_t b = 0; b < buckets; ++b) {
        const double lo = static_cast<double>(b) / static_cast<double>(buckets);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(buckets);
        const double rate = n[b] == 0 ? 0.0 : static_cast<double>(pos[b]) / static_cast<double>(n[b]);
        out << b << "\t" << fmt(lo) << "\t" << fmt(hi) << "\t" << n[b] << "\t" << pos[b] << "\t"
            << fmt(rate) << "\n";
    }
    return out.str();
}

std::string heatmap_tsv(const std::vector<EvalRecord>& records, std::size_t bins) {
    std::vector<std::size_t> counts(bins * bins * 2, 0);
    for (const auto& r : records) {
        const std::size_t sb = bucket_of(std::clamp(r.f_s, 0.0, 1.0), bins);
        const std::size_t ob = bucket_of(std::clamp(r.p, 0.0, 1.0), bins);
        const std::size_t y = r.y == 1 ? 1 : 0;
        counts[(sb * bins + ob) * 2 + y] += 1;
    }
    std::ostringstream out;
    out << "suggested_lo\tsuggested_hi\toffered_lo\toffered_hi\toutcome\tcount\n";
    for (std::size_t sb = 0; sb < bins; ++sb) {
        for (std::size_t ob = 0; ob < bins; ++ob) {
            for (std::size_t y = 0; y < 2; ++y) {
                out << fmt(static_cast<double>(sb) / static_cast<double>(bins)) << "\t"
                    << fmt(static_cast<double>(sb + 1) / static_cast<double>(bins)) << "\t"
                    << fmt(static_cast<double>(ob) / static_cast<double>(bins)) << "\t"
                    << fmt(static_cast<double>(ob + 1) / static_cast<double>(bins)) << "\t" << y
                    << "\t" << counts[(sb * bins + ob) * 2 + y] << "\n";
            }
        }
    }
    return out.str();
}

} // namespace nego

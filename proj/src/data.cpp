#include "nego/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nego/errors.hpp"
#include "nego/ioutil.hpp"
#include "nego/rng.hpp"

namespace nego {

Matrix Dataset::contexts() const {
    Matrix m(rows.size(), dim());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < dim(); ++c) m(r, c) = rows[r].x[c];
    return m;
}

std::vector<double> Dataset::prices() const {
    std::vector<double> p(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) p[r] = rows[r].price;
    return p;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) y[r] = rows[r].label;
    return y;
}

void Dataset::validate() const {
    if (feature_names.empty()) throw ingestion_error("dataset: no feature names");
    if (!(window.min < window.max)) throw ingestion_error("dataset: degenerate price window");
    std::vector<std::string> bad;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.x.size() != dim()) {
            bad.push_back("row " + std::to_string(r) + ": wrong feature count");
            continue;
        }
        for (double v : row.x)
            if (!std::isfinite(v)) bad.push_back("row " + std::to_string(r) + ": non-finite feature");
        if (!std::isfinite(row.price) || row.price < 0.0 || row.price > 1.0)
            bad.push_back("row " + std::to_string(r) + ": price outside [0,1]");
        if (row.label != 0 && row.label != 1)
            bad.push_back("row " + std::to_string(r) + ": label not in {0,1}");
    }
    if (!bad.empty()) {
        std::string msg = "dataset validation failed:";
        for (const auto& b : bad) msg += "\n  " + b;
        throw ingestion_error(msg);
    }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

bool parse_cell(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

} // namespace

Dataset load_csv(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream f(path);
    if (!f) throw ingestion_error("load_csv: cannot open '" + path + "'");

    std::string header;
    if (!std::getline(f, header)) throw ingestion_error("load_csv: '" + path + "' is empty (no header)");
    const auto cols = split_line(header);
    if (cols.size() < 3 || cols[cols.size() - 2] != "price" || cols.back() != "label")
        throw ingestion_error("load_csv: header must end with price,label columns");
    const std::size_t dim = cols.size() - 2;
    for (std::size_t i = 0; i < dim; ++i) {
        if (cols[i] != "x_" + std::to_string(i) && cols[i].empty())
            throw ingestion_error("load_csv: bad feature column name '" + cols[i] + "'");
    }

    Dataset data;
    data.feature_names.assign(cols.begin(), cols.begin() + static_cast<std::ptrdiff_t>(dim));

    std::vector<std::string> errors;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != cols.size()) {
            errors.push_back("row " + std::to_string(line_no) + ": expected " +
                             std::to_string(cols.size()) + " cells, got " + std::to_string(cells.size()));
            continue;
        }
        Interaction row;
        row.x.resize(dim);
        bool ok = true;
        for (std::size_t i = 0; i < dim && ok; ++i) {
            if (!parse_cell(cells[i], row.x[i]) || !std::isfinite(row.x[i])) {
                errors.push_back("row " + std::to_string(line_no) + ": non-numeric cell '" + cells[i] + "'");
                ok = false;
            }
        }
        double price = 0.0, label = 0.0;
        if (ok && (!parse_cell(cells[dim], price) || !std::isfinite(price))) {
            errors.push_back("row " + std::to_string(line_no) + ": non-numeric price");
            ok = false;
        }
        if (ok && (price < 0.0 || price > 1.0)) {
            errors.push_back("row " + std::to_string(line_no) + ": price " + cells[dim] +
                             " outside [0,1]");
            ok = false;
        }
        if (ok && (!parse_cell(cells[dim + 1], label) || (label != 0.0 && label != 1.0))) {
            errors.push_back("row " + std::to_string(line_no) + ": label must be 0 or 1");
            ok = false;
        }
        if (!ok) continue;
        row.price = price;
        row.label = static_cast<int>(label);
        data.rows.push_back(std::move(row));
    }

    if (!errors.empty()) {
        std::string msg = "load_csv: '" + path + "' has invalid rows:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ingestion_error(msg);
    }

    // Sidecar metadata is optional on ingest; defaults are the unit window.
    std::ifstream meta(path + ".meta.json");
    if (meta) {
        nlohmann::json j;
        try {
            meta >> j;
        } catch (const std::exception& e) {
            throw ingestion_error("load_csv: bad sidecar metadata: " + std::string(e.what()));
        }
        data.window.min = j.value("window_min", 0.0);
        data.window.max = j.value("window_max", 1.0);
        data.provenance = j.value("provenance", std::string("external"));
        if (j.contains("feature_names")) {
            const auto names = j["feature_names"].get<std::vector<std::string>>();
            if (names.size() == dim) data.feature_names = names;
        }
    }

    if (data.rows.empty() && warnings)
        warnings->push_back("load_csv: '" + path + "' contains a header but no rows");
    data.validate();
    return data;
}

void save_csv(const Dataset& data, const std::string& path) {
    data.validate();
    std::ostringstream out;
    for (std::size_t i = 0; i < data.dim(); ++i) out << "x_" << i << ",";
    out << "price,label\n";
    char buf[40];
    for (const auto& row : data.rows) {
        for (double v : row.x) {
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.9g", row.price);
        out << buf << "," << row.label << "\n";
    }
    write_file_atomic(path, out.str());
    nlohmann::json meta{{"schema_version", 1},
                        {"feature_names", data.feature_names},
                        {"window_min", data.window.min},
                        {"window_max", data.window.max},
                        {"provenance", data.provenance}};
    write_file_atomic(path + ".meta.json", meta.dump(2) + "\n");
}

double normalize_price(double raw, const PriceWindow& w) {
    if (!(w.min < w.max)) throw config_error("normalize_price: degenerate window");
    const double v = (raw - w.min) / (w.max - w.min);
    return std::clamp(v, 0.0, 1.0);
}

double denormalize_price(double normalized, const PriceWindow& w) {
    if (!(w.min < w.max)) throw config_error("denormalize_price: degenerate window");
    return w.min + normalized * (w.max - w.min);
}

std::vector<double> normalize_prices(const std::vector<double>& raw, const PriceWindow& w) {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = normalize_price(raw[i], w);
    return out;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.feature_names = data.feature_names;
    out.window = data.window;
    out.provenance = data.provenance;
    out.rows.reserve(idx.size());
    for (std::size_t i : idx) out.rows.push_back(data.rows[i]);
    return out;
}

SplitResult split(const Dataset& data, double test_frac, double val_frac_of_remaining,
                  std::uint64_t seed) {
    if (!(test_frac > 0.0 && test_frac < 1.0) ||
        !(val_frac_of_remaining > 0.0 && val_frac_of_remaining < 1.0))
        throw config_error("split: fractions must lie in (0,1)");
    const std::size_t n = data.size();
    if (n < 5) throw config_error("split: need at least 5 rows");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);

    const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(n)));
    const std::size_t n_rem = n - n_test;
    const auto n_val =
        static_cast<std::size_t>(std::llround(val_frac_of_remaining * static_cast<double>(n_rem)));

    std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> val_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_test),
                                     idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    std::vector<std::size_t> train_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_test + n_val),
                                       idx.end());

    return SplitResult{subset(data, train_idx), subset(data, val_idx), subset(data, test_idx)};
}

std::pair<Dataset, Dataset> split_train_val(const Dataset& data, double val_frac,
                                            std::uint64_t seed) {
    if (!(val_frac > 0.0 && val_frac < 1.0))
        throw config_error("split_train_val: fraction must lie in (0,1)");
    const std::size_t n = data.size();
    if (n < 2) throw config_error("split_train_val: need at least 2 rows");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);

    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n))));
    std::vector<std::size_t> val_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    return {subset(data, train_idx), subset(data, val_idx)};
}

} // namespace nego

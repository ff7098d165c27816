#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nego/errors.hpp"

namespace nego {

/// Dense row-major matrix of doubles. Rows are the batch dimension
/// throughout the library.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows_in) {
    if (rows_in.empty()) return {};
    Matrix m(rows_in.size(), rows_in.front().size());
    for (std::size_t r = 0; r < rows_in.size(); ++r) {
        if (rows_in[r].size() != m.cols)
            throw shape_error("matrix_from_rows: ragged input rows");
        for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows_in[r][c];
    }
    return m;
}

} // namespace nego

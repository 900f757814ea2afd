#include "blobkit/matrix.hpp"

#include "blobkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace blobkit {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw InvalidArgument("matrix data has " + std::to_string(data_.size()) +
                              " values, expected " + std::to_string(rows_ * cols_));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t k = 0; k < n; ++k) m(k, k) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& lhs, const Matrix& rhs) {
    if (lhs.cols() != rhs.rows()) {
        throw InvalidArgument("matrix product dimension mismatch: " + std::to_string(lhs.rows()) +
                              "x" + std::to_string(lhs.cols()) + " * " +
                              std::to_string(rhs.rows()) + "x" + std::to_string(rhs.cols()));
    }
    Matrix out(lhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < lhs.rows(); ++i) {
        auto dst = out.row(i);
        for (std::size_t k = 0; k < lhs.cols(); ++k) {
            const double a = lhs(i, k);
            const auto src = rhs.row(k);
            for (std::size_t j = 0; j < rhs.cols(); ++j) dst[j] += a * src[j];
        }
    }
    return out;
}

}  // namespace blobkit

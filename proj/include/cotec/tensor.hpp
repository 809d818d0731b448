#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cotec {

/// Dimensions (n_1, ..., n_m) of a dense order-m tensor.
/// Order is at least 1 and every dimension is at least 1; the total
/// element count must fit the platform index type.
class Shape {
public:
    Shape() = default;

    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty())
            throw std::invalid_argument("Shape: order must be >= 1");
        std::size_t total = 1;
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            if (dims_[j] == 0)
                throw std::invalid_argument("Shape: dimension " +
                                            std::to_string(j) + " is zero");
            if (total > std::numeric_limits<std::size_t>::max() / dims_[j])
                throw std::invalid_argument(
                    "Shape: element count overflows the index type");
            total *= dims_[j];
        }
        count_ = total;
    }

    Shape(std::initializer_list<std::size_t> dims)
        : Shape(std::vector<std::size_t>(dims)) {}

    std::size_t order() const { return dims_.size(); }
    std::size_t dim(std::size_t j) const { return dims_.at(j); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t count() const { return count_; }

    bool operator==(const Shape& other) const { return dims_ == other.dims_; }
    bool operator!=(const Shape& other) const { return !(*this == other); }

    /// Row-major flat offset of a multi-index (last index fastest).
    std::size_t flat_index(const std::vector<std::size_t>& idx) const {
        if (idx.size() != dims_.size())
            throw std::invalid_argument("Shape::flat_index: order mismatch");
        std::size_t flat = 0;
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            if (idx[j] >= dims_[j])
                throw std::out_of_range("Shape::flat_index: index out of range "
                                        "on dimension " + std::to_string(j));
            flat = flat * dims_[j] + idx[j];
        }
        return flat;
    }

    /// Inverse of flat_index.
    std::vector<std::size_t> multi_index(std::size_t flat) const {
        std::vector<std::size_t> idx(dims_.size());
        for (std::size_t j = dims_.size(); j-- > 0;) {
            idx[j] = flat % dims_[j];
            flat /= dims_[j];
        }
        return idx;
    }

    std::string to_string() const {
        std::string s;
        for (std::size_t j = 0; j < dims_.size(); ++j) {
            if (j) s += "x";
            s += std::to_string(dims_[j]);
        }
        return s;
    }

private:
    std::vector<std::size_t> dims_;
    std::size_t count_ = 0;
};

/// Dense order-m tensor, row-major storage (last index fastest).
/// Values are immutable after construction except through mutable_data(),
/// which is only used while assembling a tensor. All entries must be finite.
class DenseTensor {
public:
    DenseTensor() = default;

    DenseTensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_.count())
            throw std::invalid_argument(
                "DenseTensor: data length " + std::to_string(data_.size()) +
                " does not match shape " + shape_.to_string());
        for (std::size_t i = 0; i < data_.size(); ++i) {
            if (!std::isfinite(data_[i]))
                throw std::invalid_argument(
                    "DenseTensor: non-finite entry at flat index " +
                    std::to_string(i));
        }
    }

    static DenseTensor zeros(const Shape& shape) {
        return DenseTensor(shape, std::vector<double>(shape.count(), 0.0));
    }

    const Shape& shape() const { return shape_; }
    std::size_t order() const { return shape_.order(); }
    std::size_t size() const { return data_.size(); }

    std::span<const double> data() const { return data_; }
    std::vector<double>& mutable_data() { return data_; }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double at(const std::vector<std::size_t>& idx) const {
        return data_[shape_.flat_index(idx)];
    }

    bool same_values(const DenseTensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Dense row-major matrix, the building block of multilinear products.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c)
        : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols)
            throw std::invalid_argument("Matrix: data length mismatch");
    }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) t.at(c, r) = at(r, c);
        return t;
    }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: inner dimensions differ");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double v = a.at(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j)
                out.at(i, j) += v * b.at(k, j);
        }
    return out;
}

/// One matrix per tensor mode; matrix j must have n_j columns.
using MatrixList = std::vector<Matrix>;

/// Single-mode product: applies `mat` (p x n_mode) along `mode`.
/// Output shape equals the input shape with dims[mode] replaced by p.
inline DenseTensor mode_product(const DenseTensor& a, const Matrix& mat,
                                std::size_t mode) {
    const Shape& s = a.shape();
    if (mode >= s.order())
        throw std::out_of_range("mode_product: mode out of range");
    if (mat.cols != s.dim(mode))
        throw std::invalid_argument(
            "mode_product: matrix has " + std::to_string(mat.cols) +
            " columns but mode " + std::to_string(mode) + " has extent " +
            std::to_string(s.dim(mode)));

    std::size_t inner = 1;
    for (std::size_t j = mode + 1; j < s.order(); ++j) inner *= s.dim(j);
    const std::size_t n = s.dim(mode);
    const std::size_t outer = s.count() / (n * inner);

    std::vector<std::size_t> out_dims = s.dims();
    out_dims[mode] = mat.rows;
    DenseTensor out = DenseTensor::zeros(Shape(out_dims));

    const double* src = a.data().data();
    double* dst = out.mutable_data().data();
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src_block = src + o * n * inner;
        double* dst_block = dst + o * mat.rows * inner;
        for (std::size_t j = 0; j < n; ++j) {
            const double* src_row = src_block + j * inner;
            for (std::size_t i = 0; i < mat.rows; ++i) {
                const double coef = mat.at(i, j);
                if (coef == 0.0) continue;
                double* dst_row = dst_block + i * inner;
                for (std::size_t t = 0; t < inner; ++t)
                    dst_row[t] += coef * src_row[t];
            }
        }
    }
    return out;
}

/// Multilinear matrix multiplication (P_1, ..., P_m) . A, computed as m
/// successive single-mode products.
inline DenseTensor multilinear_multiply(const MatrixList& mats,
                                        const DenseTensor& a) {
    if (mats.size() != a.order())
        throw std::invalid_argument(
            "multilinear_multiply: got " + std::to_string(mats.size()) +
            " matrices for an order-" + std::to_string(a.order()) +
            " tensor");
    for (std::size_t j = 0; j < mats.size(); ++j) {
        if (mats[j].cols != a.shape().dim(j))
            throw std::invalid_argument(
                "multilinear_multiply: matrix " + std::to_string(j) + " has " +
                std::to_string(mats[j].cols) + " columns but mode " +
                std::to_string(j) + " has extent " +
                std::to_string(a.shape().dim(j)));
    }
    DenseTensor result = a;
    for (std::size_t j = 0; j < mats.size(); ++j)
        result = mode_product(result, mats[j], j);
    return result;
}

inline double inner_product(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("inner_product: shape mismatch (" +
                                    a.shape().to_string() + " vs " +
                                    b.shape().to_string() + ")");
    double sum = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) sum += da[i] * db[i];
    return sum;
}

/// Entrywise l_p norm, p >= 1.
inline double lp_norm(const DenseTensor& a, double p) {
    if (!(p >= 1.0))
        throw std::domain_error("lp_norm: p must be >= 1");
    double sum = 0.0;
    for (double v : a.data()) sum += std::pow(std::fabs(v), p);
    return std::pow(sum, 1.0 / p);
}

inline double frobenius_norm(const DenseTensor& a) {
    return std::sqrt(inner_product(a, a));
}

inline DenseTensor subtract(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("subtract: shape mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return DenseTensor(a.shape(), std::move(out));
}

inline DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape())
        throw std::invalid_argument("add: shape mismatch");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return DenseTensor(a.shape(), std::move(out));
}

inline DenseTensor scale(const DenseTensor& a, double factor) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * a[i];
    return DenseTensor(a.shape(), std::move(out));
}

/// Slices with index i fixed on dimension `dim`, each flattened to a vector
/// with the remaining indices in row-major order. Fiber i has length
/// count / n_dim; the n_dim fibers together reproduce the tensor.
inline std::vector<std::vector<double>> fibers_along(const DenseTensor& a,
                                                     std::size_t dim) {
    const Shape& s = a.shape();
    if (dim >= s.order())
        throw std::out_of_range("fibers_along: dimension " +
                                std::to_string(dim) + " out of range for an "
                                "order-" + std::to_string(s.order()) +
                                " tensor");
    std::size_t inner = 1;
    for (std::size_t j = dim + 1; j < s.order(); ++j) inner *= s.dim(j);
    const std::size_t n = s.dim(dim);
    const std::size_t outer = s.count() / (n * inner);

    std::vector<std::vector<double>> fibers(
        n, std::vector<double>(outer * inner));
    const double* src = a.data().data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = src + (o * n + i) * inner;
            double* dst = fibers[i].data() + o * inner;
            for (std::size_t t = 0; t < inner; ++t) dst[t] = row[t];
        }
    return fibers;
}

}  // namespace cotec

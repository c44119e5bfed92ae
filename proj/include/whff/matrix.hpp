#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "whff/error.hpp"

namespace whff {

/// Non-owning row-major view over a contiguous block of rows.
template <typename T>
class MatrixView {
public:
    MatrixView() = default;
    MatrixView(std::span<T> data, std::size_t rows, std::size_t cols)
        : data_(data), rows_(rows), cols_(cols) {
        if (data.size() != rows * cols) {
            throw InvalidArgument("MatrixView: data size does not match rows*cols");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<T> data() const noexcept { return data_; }
    std::span<T> row(std::size_t i) const { return data_.subspan(i * cols_, cols_); }
    T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    /// Rows [first, first + count) as a view sharing this storage.
    MatrixView row_range(std::size_t first, std::size_t count) const {
        if (first > rows_ || count > rows_ - first) {
            throw LookupError("MatrixView: row range [" + std::to_string(first) + ", " +
                              std::to_string(first + count) + ") outside " +
                              std::to_string(rows_) + " rows");
        }
        return MatrixView(data_.subspan(first * cols_, count * cols_), count, cols_);
    }

private:
    std::span<T> data_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

template <typename T>
class DenseMatrix {
public:
    using value_type = T;

    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows * cols) {
            throw InvalidArgument("DenseMatrix: data size does not match rows*cols");
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::span<const T> row(std::size_t i) const {
        return std::span<const T>(data_).subspan(i * cols_, cols_);
    }

    MatrixView<const T> view() const { return {std::span<const T>(data_), rows_, cols_}; }
    MatrixView<T> mutable_view() { return {std::span<T>(data_), rows_, cols_}; }

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Compressed sparse row matrix with binary32 values.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint64_t> row_offsets{0};
    std::vector<std::uint32_t> col_indices;
    std::vector<float> values;

    std::size_t nnz() const noexcept { return values.size(); }
    std::size_t row_nnz(std::size_t i) const { return row_offsets[i + 1] - row_offsets[i]; }

    /// Throws InvalidArgument unless offsets are monotone, columns strictly
    /// increase within each row and every index is in range.
    void validate() const;

    bool operator==(const CsrMatrix&) const = default;
};

struct DiagonalMatrix {
    std::vector<float> diagonal;

    std::size_t size() const noexcept { return diagonal.size(); }
    bool operator==(const DiagonalMatrix&) const = default;
};

} // namespace whff

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cohash {

/// Dense row-major matrix. The only container used for features, codes and
/// model parameters; heavier linear algebra lives next to its callers.
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    T* row(std::size_t i) { return data_.data() + i * cols_; }
    const T* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::span<T> row_span(std::size_t i) { return {row(i), cols_}; }
    std::span<const T> row_span(std::size_t i) const { return {row(i), cols_}; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Mat&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using MatF = Mat<float>;
using MatD = Mat<double>;
using MatU8 = Mat<std::uint8_t>;

}  // namespace cohash

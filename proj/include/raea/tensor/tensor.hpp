// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace raea::tensor {

using Shape = std::vector<std::size_t>;

/// Dense row-major array of doubles. Most ops view it as a matrix: a rank-1
/// tensor of length d is treated as 1 x d.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }
    static Tensor row(std::vector<double> values);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
    std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
    const std::vector<double>& vec() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    void fill(double v);
    void add_inplace(const Tensor& other);
    void scale_inplace(double s);
    bool all_finite() const;
    /// Same shape, with the element count checked.
    Tensor reshaped(Shape shape) const;
    std::string shape_str() const;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const Shape& shape);

/// Bitwise equality of the underlying doubles (distinguishes -0.0 and NaN payloads).
bool bit_identical(const Tensor& a, const Tensor& b);

}  // namespace raea::tensor

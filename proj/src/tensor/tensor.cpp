// SPDX-License-Identifier: Apache-2.0
#include "raea/tensor/tensor.hpp"

#include <cmath>
#include <cstring>

#include "raea/common/error.hpp"

namespace raea::tensor {

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (auto d : shape_) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive");
    }
    data_.assign(shape_product(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto d : shape_) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive");
    }
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("shape " + shape_str() + " does not match " + std::to_string(data_.size()) +
                             " values");
    }
}

Tensor Tensor::row(std::vector<double> values) {
    const auto n = values.size();
    return Tensor({1, n}, std::move(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged rows");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.empty()) return 0;
    if (shape_.size() == 1) return 1;
    return shape_product(shape_) / shape_.back();
}

std::size_t Tensor::cols() const noexcept { return shape_.empty() ? 0 : shape_.back(); }

void Tensor::fill(double v) {
    for (auto& x : data_) x = v;
}

void Tensor::add_inplace(const Tensor& other) {
    if (other.size() != size()) throw DimensionError("add_inplace size mismatch");
    const double* src = other.data();
    double* dst = data_.data();
    for (std::size_t i = 0, n = data_.size(); i < n; ++i) dst[i] += src[i];
}

void Tensor::scale_inplace(double s) {
    for (auto& x : data_) x *= s;
}

bool Tensor::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

bool bit_identical(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace raea::tensor

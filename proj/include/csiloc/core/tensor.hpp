#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "csiloc/core/error.hpp"

namespace csiloc {

/// Extents of a rank <= 4 tensor. Unused trailing extents are zero.
struct Shape {
    std::array<std::size_t, 4> ext{};
    std::size_t rank = 0;

    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims) {
        if (dims.size() > 4) throw ShapeError("tensor rank above 4");
        for (auto d : dims) {
            if (d == 0) throw ShapeError("tensor extents must be positive");
            ext[rank++] = d;
        }
    }

    [[nodiscard]] std::size_t operator[](std::size_t i) const { return ext[i]; }

    [[nodiscard]] std::size_t numel() const {
        if (rank == 0) return 0;
        std::size_t n = 1;
        for (std::size_t i = 0; i < rank; ++i) n *= ext[i];
        return n;
    }

    [[nodiscard]] std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < rank; ++i) {
            if (i) s += ",";
            s += std::to_string(ext[i]);
        }
        return s + ")";
    }

    friend bool operator==(const Shape& a, const Shape& b) {
        return a.rank == b.rank && a.ext == b.ext;
    }
};

/// Dense row-major array, last axis fastest.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(const Shape& shape, T fill = T{0})
        : shape_(shape), data_(shape.numel(), fill) {}
    BasicTensor(const Shape& shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.numel())
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_.str());
    }

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] std::size_t rank() const { return shape_.rank; }
    [[nodiscard]] std::size_t dim(std::size_t i) const { return shape_.ext[i]; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    [[nodiscard]] T* data() { return data_.data(); }
    [[nodiscard]] const T* data() const { return data_.data(); }
    [[nodiscard]] std::span<T> span() { return data_; }
    [[nodiscard]] std::span<const T> span() const { return data_; }
    [[nodiscard]] std::vector<T>& values() { return data_; }
    [[nodiscard]] const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t i0, std::size_t i1) { return data_[i0 * shape_[1] + i1]; }
    const T& at(std::size_t i0, std::size_t i1) const { return data_[i0 * shape_[1] + i1]; }
    T& at(std::size_t i0, std::size_t i1, std::size_t i2) {
        return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
    }
    const T& at(std::size_t i0, std::size_t i1, std::size_t i2) const {
        return data_[(i0 * shape_[1] + i1) * shape_[2] + i2];
    }
    T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
        return data_[((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
    }
    const T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
        return data_[((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3];
    }

    /// Same data viewed under a new shape with equal element count.
    [[nodiscard]] BasicTensor reshaped(const Shape& s) const {
        if (s.numel() != data_.size())
            throw ShapeError("cannot reshape " + shape_.str() + " to " + s.str());
        return BasicTensor(s, data_);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    BasicTensor& operator+=(const BasicTensor& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    BasicTensor& operator-=(const BasicTensor& o) {
        require_same_shape(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    BasicTensor& operator*=(T a) {
        for (auto& v : data_) v *= a;
        return *this;
    }

    friend BasicTensor operator+(BasicTensor a, const BasicTensor& b) { return a += b; }
    friend BasicTensor operator-(BasicTensor a, const BasicTensor& b) { return a -= b; }
    friend BasicTensor operator*(T s, BasicTensor a) { return a *= s; }

    friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

    void require_same_shape(const BasicTensor& o, const char* what) const {
        if (!(shape_ == o.shape_))
            throw ShapeError(std::string("shape mismatch in ") + what + ": " + shape_.str() +
                             " vs " + o.shape_.str());
    }

    template <typename U>
    [[nodiscard]] BasicTensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return BasicTensor<U>(shape_, std::move(out));
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<double>;

} // namespace csiloc

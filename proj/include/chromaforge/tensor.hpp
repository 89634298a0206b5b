#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "chromaforge/errors.hpp"

namespace chromaforge {

/// Dense row-major tensor of 64-bit floats.
///
/// Elementwise arithmetic requires exact shape agreement; the only implicit
/// broadcast is scalar-tensor. In-place ops need exclusive access, everything
/// else is safe to share across threads.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape, double fill = 0.0);
    static Tensor from_data(std::vector<size_t> shape, std::vector<double> data);

    const std::vector<size_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t size() const { return data_.size(); }
    size_t dim(size_t i) const { return shape_.at(i); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double& operator()(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
    double operator()(size_t i, size_t j) const { return data_[i * shape_[1] + j]; }
    double& operator()(size_t i, size_t j, size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double operator()(size_t i, size_t j, size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(const Tensor& other);
    Tensor& operator+=(double s);
    Tensor& operator*=(double s);

    /// Reinterpret as a new shape with the same element count.
    Tensor reshaped(std::vector<size_t> new_shape) const;

    double sum() const;
    double max() const;
    /// Index of the maximum; smallest index wins ties.
    size_t argmax() const;
    Tensor clamped(double lo, double hi) const;

private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor operator*(double s, Tensor a);
Tensor operator+(Tensor a, double s);

double dot(const Tensor& a, const Tensor& b);

/// [m,k] x [k,n] -> [m,n], or [m,k] x [k] -> [m].
Tensor matmul(const Tensor& a, const Tensor& b);

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

} // namespace chromaforge

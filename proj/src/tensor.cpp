#include "chromaforge/tensor.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace chromaforge {

namespace {

size_t shape_product(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<size_t>& shape) {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

} // namespace

Tensor::Tensor(std::vector<size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor Tensor::from_data(std::vector<size_t> shape, std::vector<double> data) {
    if (shape_product(shape) != data.size())
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()) + " differ");
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require_same_shape(*this, other, "add");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    require_same_shape(*this, other, "sub");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(const Tensor& other) {
    require_same_shape(*this, other, "mul");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] *= other.data_[i];
    return *this;
}

Tensor& Tensor::operator+=(double s) {
    for (double& v : data_) v += s;
    return *this;
}

Tensor& Tensor::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Tensor Tensor::reshaped(std::vector<size_t> new_shape) const {
    if (shape_product(new_shape) != data_.size())
        throw ShapeError("reshape to " + shape_str(new_shape) + " changes element count");
    Tensor t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
}

double Tensor::sum() const {
    double s = 0.0;
    for (double v : data_) s += v;
    return s;
}

double Tensor::max() const {
    if (data_.empty()) throw ValueError("max of empty tensor");
    return *std::max_element(data_.begin(), data_.end());
}

size_t Tensor::argmax() const {
    if (data_.empty()) throw ValueError("argmax of empty tensor");
    size_t best = 0;
    for (size_t i = 1; i < data_.size(); ++i)
        if (data_[i] > data_[best]) best = i;
    return best;
}

Tensor Tensor::clamped(double lo, double hi) const {
    Tensor out = *this;
    for (double& v : out.data_) v = std::clamp(v, lo, hi);
    return out;
}

Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }
Tensor operator*(Tensor a, const Tensor& b) { a *= b; return a; }
Tensor operator*(Tensor a, double s) { a *= s; return a; }
Tensor operator*(double s, Tensor a) { a *= s; return a; }
Tensor operator+(Tensor a, double s) { a += s; return a; }

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2)
        throw ShapeError("matmul: left operand must be rank 2");
    const size_t m = a.dim(0), k = a.dim(1);
    if (b.rank() == 1) {
        if (b.dim(0) != k)
            throw ShapeError("matmul: inner dimensions disagree");
        Tensor out({m});
        for (size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (size_t j = 0; j < k; ++j) s += a(i, j) * b[j];
            out[i] = s;
        }
        return out;
    }
    if (b.rank() != 2 || b.dim(0) != k)
        throw ShapeError("matmul: inner dimensions disagree");
    const size_t n = b.dim(1);
    Tensor out({m, n});
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (size_t t = 0; t < k; ++t) s += a(i, t) * b(t, j);
            out(i, j) = s;
        }
    return out;
}

} // namespace chromaforge

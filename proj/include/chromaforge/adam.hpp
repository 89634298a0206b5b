#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "chromaforge/errors.hpp"

namespace chromaforge {

/// Adam with bias correction; the single optimizer used by training and the
/// gradient attacks.
class Adam {
public:
    explicit Adam(size_t n, double lr = 0.001, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void step(double* params, const double* grad, size_t n) {
        if (n != m_.size()) throw ShapeError("adam state size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t i = 0; i < n; ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
            const double mhat = m_[i] / bc1;
            const double vhat = v_[i] / bc2;
            params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }

    void reset() {
        std::fill(m_.begin(), m_.end(), 0.0);
        std::fill(v_.begin(), v_.end(), 0.0);
        t_ = 0;
    }

    double learning_rate() const { return lr_; }
    long steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

} // namespace chromaforge

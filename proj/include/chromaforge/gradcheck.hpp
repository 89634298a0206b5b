#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace chromaforge {

/// Shared finite-difference policy: central differences, relative error
/// |a - fd| / max(1, |a|, |fd|).
double grad_rel_err(double analytic, double fd);

inline constexpr double kGradTolerance = 1e-5;

struct GradCheckReport {
    int trials = 0;
    double filter_theta = 0.0;      // max relative error observed
    double penalty = 0.0;
    double classifier_input = 0.0;
    double classifier_weights = 0.0;

    double worst() const;
    bool passed(double tol = kGradTolerance) const { return worst() < tol; }
    nlohmann::json to_json() const;
};

/// module: "filter" (curve + penalty gradients), "classifier" (input + weight
/// gradients) or "all". Each trial draws a fresh configuration from the seed
/// and checks every coordinate of a small instance against central
/// differences.
GradCheckReport run_gradcheck(const std::string& module, int trials, uint64_t seed);

} // namespace chromaforge

#pragma once

#include "chromaforge/image.hpp"

namespace chromaforge {

/// Perturbation sizes in the reporting units used throughout: L0 as a
/// percentage of changed coordinates, L2 in [0,1] pixel units, L-infinity
/// rescaled to [0,255].
struct PerturbationNorms {
    double l0_percent = 0.0;
    double l2 = 0.0;
    double linf_255 = 0.0;
};

/// l0_threshold defines "changed" (|diff| above it). l0_spatial counts whole
/// pixels (any channel changed) instead of individual channel coordinates.
PerturbationNorms perturbation_norms(const Image& original, const Image& adversarial,
                                     double l0_threshold = 1e-9,
                                     bool l0_spatial = false);

} // namespace chromaforge

#include "chromaforge/metrics.hpp"

#include <cmath>

#include "chromaforge/errors.hpp"
#include "chromaforge/kernels.hpp"

namespace chromaforge {

PerturbationNorms perturbation_norms(const Image& original, const Image& adversarial,
                                     double l0_threshold, bool l0_spatial) {
    if (!original.same_shape(adversarial))
        throw ShapeError("perturbation_norms: image shapes differ");
    if (original.size() == 0) throw ValueError("perturbation_norms: empty images");

    PerturbationNorms n;
    size_t changed = 0;
    double linf = 0.0;
    if (l0_spatial) {
        for (size_t p = 0; p < original.num_pixels(); ++p) {
            bool any = false;
            for (int c = 0; c < 3; ++c) {
                const double d =
                    std::fabs(original.pixels[p * 3 + c] - adversarial.pixels[p * 3 + c]);
                if (d > l0_threshold) any = true;
                if (d > linf) linf = d;
            }
            if (any) ++changed;
        }
        n.l0_percent = 100.0 * static_cast<double>(changed)
                       / static_cast<double>(original.num_pixels());
    } else {
        for (size_t i = 0; i < original.size(); ++i) {
            const double d = std::fabs(original.pixels[i] - adversarial.pixels[i]);
            if (d > l0_threshold) ++changed;
            if (d > linf) linf = d;
        }
        n.l0_percent = 100.0 * static_cast<double>(changed)
                       / static_cast<double>(original.size());
    }
    n.l2 = std::sqrt(kernels::block_sum_sq_diff(original.pixels.data(),
                                                adversarial.pixels.data(),
                                                original.size()));
    n.linf_255 = 255.0 * linf;
    return n;
}

} // namespace chromaforge

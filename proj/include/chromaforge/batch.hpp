#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chromaforge/attacks.hpp"
#include "chromaforge/image.hpp"

namespace chromaforge {

using BatchAttackFn =
    std::function<AttackResult(const LabeledImage& img, uint64_t per_image_seed)>;

/// Run independent per-image attacks, possibly in parallel. Each image gets
/// the seed derive_seed(global_seed, index), and results come back in input
/// order, so the output is identical for any job count. jobs <= 0 uses the
/// OpenMP default.
std::vector<AttackResult> run_batch(const std::vector<LabeledImage>& images,
                                    uint64_t global_seed, int jobs,
                                    const BatchAttackFn& fn);

} // namespace chromaforge

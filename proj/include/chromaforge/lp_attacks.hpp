#pragma once

#include "chromaforge/attacks.hpp"
#include "chromaforge/classifier.hpp"

namespace chromaforge {

/// Pixel-space baseline settings. epsilon/alpha are in [0,1] pixel units.
/// alpha = 0 means "epsilon / 5" (the 10-step preset).
struct LpConfig {
    double epsilon = 2.0 / 255.0;
    double alpha = 0.0;
    int iterations = 10;
    double kappa = 40.0;     // confidence for the L2 attack's margin loss
    int cw_search_steps = 3; // balance-factor line search rounds
    int cw_inner_iters = 100;
    double learning_rate = 0.01;

    void validate() const;
    double resolved_alpha() const { return alpha > 0.0 ? alpha : epsilon / 5.0; }
};

/// Single ascent step on cross-entropy: clamp01(x + eps * sign(grad)),
/// sign(0) = 0. Implemented as bim with one step of size eps.
AttackResult fgsm(const Classifier& model, const LabeledImage& img, double epsilon);

/// Iterative FGSM: per-step perturbation state clipped to [-eps, eps], pixels
/// to [0,1], gradient re-evaluated at each iterate.
AttackResult bim(const Classifier& model, const LabeledImage& img,
                 const LpConfig& cfg);

/// L2 attack in tanh space: x' = (tanh(arctanh(2x-1) + w) + 1)/2, minimizing
/// ||x'-x||^2 + balance * margin loss with Adam; the balance factor is line
/// searched across rounds (x10 on failure, /10 on success, w reset each
/// round). Returns the lowest-L2 success, else the last iterate.
AttackResult cw_l2(const Classifier& model, const LabeledImage& img,
                   const LpConfig& cfg);

} // namespace chromaforge

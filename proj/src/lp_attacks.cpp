#include "chromaforge/lp_attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chromaforge/adam.hpp"
#include "chromaforge/errors.hpp"
#include "chromaforge/kernels.hpp"

namespace chromaforge {

void LpConfig::validate() const {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw ValueError("epsilon must be in [0,1)"); // 0 = the degenerate no-op bound
    const double a = resolved_alpha();
    if (epsilon > 0.0 ? !(a > 0.0 && a <= epsilon) : a != 0.0)
        throw ValueError("alpha must satisfy 0 < alpha <= epsilon");
    if (iterations < 1) throw ValueError("iterations must be >= 1");
    if (cw_search_steps < 1 || cw_inner_iters < 1)
        throw ValueError("cw search structure must be positive");
    if (learning_rate <= 0.0) throw ValueError("learning_rate must be > 0");
    if (kappa < 0.0) throw ValueError("kappa must be >= 0");
}

namespace {

int argmax_label(const std::vector<double>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

AttackResult skipped_result(const std::string& method, const LabeledImage& img,
                            int pred) {
    AttackResult res;
    res.method = method;
    res.status = AttackStatus::AlreadyMisclassified;
    res.true_label = img.label;
    res.label_before = pred;
    res.label_after = pred;
    res.success = pred != img.label;
    res.adversarial = img.image;
    res.norms = perturbation_norms(img.image, res.adversarial);
    return res;
}

} // namespace

AttackResult bim(const Classifier& model, const LabeledImage& img,
                 const LpConfig& cfg) {
    cfg.validate();
    if (img.label < 0 || img.label >= model.num_classes())
        throw ValueError("image label out of range");
    const double eps = cfg.epsilon;
    const double alpha = cfg.resolved_alpha();

    const int pred0 = model.predict(img.image);
    if (pred0 != img.label)
        return skipped_result(cfg.iterations == 1 && alpha == eps ? "fgsm" : "bim",
                              img, pred0);

    AttackResult res;
    res.method = cfg.iterations == 1 && alpha == eps ? "fgsm" : "bim";
    res.true_label = img.label;
    res.label_before = pred0;

    const size_t n = img.image.size();
    std::vector<double> delta(n, 0.0);
    Image x = img.image;
    for (int it = 1; it <= cfg.iterations; ++it) {
        res.iterations_used = it;
        const auto tr = model.forward(x);
        if (it > 1 && res.first_success < 0
            && argmax_label(tr.logits) != img.label)
            res.first_success = it - 1; // x is the result of the previous step
        // Ascend cross-entropy of the true label.
        const auto d_logits = cross_entropy_logit_grad(tr.probs, img.label);
        const Image g = model.backward(tr, d_logits, nullptr);
        for (size_t i = 0; i < n; ++i) {
            delta[i] = std::clamp(delta[i] + alpha * sign0(g.pixels[i]), -eps, eps);
            x.pixels[i] = std::clamp(img.image.pixels[i] + delta[i], 0.0, 1.0);
        }
    }
    // clamp01(orig + delta) can round one ulp past the bound; nudge those
    // pixels back so the returned image satisfies |adv - orig| <= eps exactly.
    for (size_t i = 0; i < n; ++i) {
        while (x.pixels[i] - img.image.pixels[i] > eps)
            x.pixels[i] = std::nextafter(x.pixels[i], -1.0);
        while (x.pixels[i] - img.image.pixels[i] < -eps)
            x.pixels[i] = std::nextafter(x.pixels[i], 2.0);
    }
    res.label_after = model.predict(x);
    res.success = res.label_after != img.label;
    if (res.success && res.first_success < 0) res.first_success = cfg.iterations;
    res.status = res.success ? AttackStatus::Succeeded : AttackStatus::Failed;
    res.adversarial = std::move(x);
    res.norms = perturbation_norms(img.image, res.adversarial);
    return res;
}

AttackResult fgsm(const Classifier& model, const LabeledImage& img, double epsilon) {
    LpConfig cfg;
    cfg.epsilon = epsilon;
    cfg.alpha = epsilon;
    cfg.iterations = 1;
    return bim(model, img, cfg);
}

AttackResult cw_l2(const Classifier& model, const LabeledImage& img,
                   const LpConfig& cfg) {
    cfg.validate();
    if (img.label < 0 || img.label >= model.num_classes())
        throw ValueError("image label out of range");

    const int pred0 = model.predict(img.image);
    if (pred0 != img.label) return skipped_result("cw", img, pred0);

    AttackResult res;
    res.method = "cw";
    res.true_label = img.label;
    res.label_before = pred0;

    const size_t n = img.image.size();
    std::vector<double> anchor(n); // arctanh(2x-1) of the nudged original
    for (size_t i = 0; i < n; ++i) {
        const double xi = std::clamp(img.image.pixels[i], 1e-6, 1.0 - 1e-6);
        anchor[i] = std::atanh(2.0 * xi - 1.0);
    }

    double balance = 1.0;
    double best_l2 = std::numeric_limits<double>::infinity();
    Image best_adv;
    int best_label = -1;
    Image last_adv;
    int last_label = -1;
    int global_iter = 0;

    std::vector<double> w(n);
    std::vector<double> grad(n);
    Image x(img.image.height, img.image.width);
    for (int round = 0; round < cfg.cw_search_steps; ++round) {
        std::fill(w.begin(), w.end(), 0.0);
        Adam opt(n, cfg.learning_rate);
        bool round_success = false;
        for (int it = 1; it <= cfg.cw_inner_iters; ++it) {
            ++global_iter;
            for (size_t i = 0; i < n; ++i)
                x.pixels[i] = 0.5 * (std::tanh(anchor[i] + w[i]) + 1.0);
            const auto tr = model.forward(x);
            auto [floss, fgrad] = cw_loss(tr.logits, img.label, cfg.kappa);
            const int pred = argmax_label(tr.logits);
            if (pred != img.label) {
                round_success = true;
                if (res.first_success < 0) res.first_success = global_iter;
                const double l2 = std::sqrt(kernels::block_sum_sq_diff(
                    x.pixels.data(), img.image.pixels.data(), n));
                if (l2 < best_l2) {
                    best_l2 = l2;
                    best_adv = x;
                    best_label = pred;
                }
            }
            const Image dx = model.backward(tr, fgrad, nullptr);
            for (size_t i = 0; i < n; ++i) {
                const double t = 2.0 * x.pixels[i] - 1.0; // tanh(anchor + w)
                const double dxdw = 0.5 * (1.0 - t * t);
                grad[i] = (2.0 * (x.pixels[i] - img.image.pixels[i])
                           + balance * dx.pixels[i])
                          * dxdw;
            }
            opt.step(w.data(), grad.data(), n);
        }
        last_adv = x;
        last_label = argmax_label(model.logits(x));
        balance = round_success ? balance / 10.0 : balance * 10.0;
    }
    res.iterations_used = global_iter;
    res.success = best_label >= 0;
    res.status = res.success ? AttackStatus::Succeeded : AttackStatus::Failed;
    if (res.success) {
        res.adversarial = std::move(best_adv);
        res.label_after = best_label;
    } else {
        res.adversarial = std::move(last_adv);
        res.label_after = last_label;
    }
    res.norms = perturbation_norms(img.image, res.adversarial);
    return res;
}

} // namespace chromaforge

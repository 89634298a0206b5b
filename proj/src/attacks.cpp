#include "chromaforge/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chromaforge/adam.hpp"
#include "chromaforge/errors.hpp"
#include "chromaforge/kernels.hpp"
#include "chromaforge/rng.hpp"

namespace chromaforge {

void AttackConfig::validate() const {
    if (pieces < 1) throw ValueError("K must be >= 1");
    if (lambda < 0.0 || !std::isfinite(lambda))
        throw ValueError("lambda must be finite and >= 0");
    if (kappa < 0.0 || !std::isfinite(kappa))
        throw ValueError("kappa must be finite and >= 0");
    if (max_iters < 1) throw ValueError("max_iters must be >= 1");
    if (learning_rate <= 0.0) throw ValueError("learning_rate must be > 0");
    if (early_stop_patience < 1) throw ValueError("early_stop_patience must be >= 1");
}

std::string attack_status_name(AttackStatus s) {
    switch (s) {
    case AttackStatus::Succeeded: return "succeeded";
    case AttackStatus::Failed: return "failed";
    case AttackStatus::AlreadyMisclassified: return "already_misclassified";
    }
    throw ValueError("unknown attack status");
}

void SemanticMask::validate() const {
    if (regions.num_regions < 1) throw ValueError("mask needs at least one region");
    if (regions.region.size() != regions.height * regions.width)
        throw ShapeError("mask region buffer does not match dimensions");
    for (int r : regions.region)
        if (r < 0 || r >= regions.num_regions)
            throw ValueError("mask assigns a pixel to a nonexistent region");
    if (weights.size() != static_cast<size_t>(regions.num_regions))
        throw ValueError("weights off simplex: need one weight per region");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw ValueError("weights off simplex: negative or non-finite entry");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw ValueError("weights off simplex: sum = " + std::to_string(sum));
}

std::pair<double, std::vector<double>> cw_loss(const std::vector<double>& logits,
                                               int true_label, double kappa) {
    const size_t m = logits.size();
    if (m < 2) throw ValueError("cw_loss needs at least 2 logits");
    if (true_label < 0 || static_cast<size_t>(true_label) >= m)
        throw ValueError("true_label out of range");
    int runner = true_label == 0 ? 1 : 0;
    for (size_t i = 0; i < m; ++i) {
        if (static_cast<int>(i) == true_label) continue;
        if (logits[i] > logits[runner]) runner = static_cast<int>(i);
    }
    const double margin = logits[static_cast<size_t>(true_label)]
                          - logits[static_cast<size_t>(runner)];
    std::vector<double> grad(m, 0.0);
    if (margin >= -kappa) { // active branch; clipped at -kappa otherwise
        grad[static_cast<size_t>(true_label)] = 1.0;
        grad[static_cast<size_t>(runner)] = -1.0;
    }
    return {std::max(margin, -kappa), std::move(grad)};
}

namespace {

int argmax_label(const std::vector<double>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

/// Adversarial term of the objective and its logit gradient.
std::pair<double, std::vector<double>> adversarial_loss(const Classifier::Trace& tr,
                                                        int label,
                                                        const AttackConfig& cfg) {
    if (cfg.loss == AttackLoss::CwMargin) return cw_loss(tr.logits, label, cfg.kappa);
    // Cross-entropy mode: descend on log p_label (drives p_label down).
    std::vector<double> g(tr.probs.size());
    for (size_t i = 0; i < g.size(); ++i)
        g[i] = (static_cast<int>(i) == label ? 1.0 : 0.0) - tr.probs[i];
    const double loss =
        std::log(std::max(tr.probs[static_cast<size_t>(label)], 1e-300));
    return {loss, std::move(g)};
}

struct CurveVariant {
    std::string method;
    const SemanticMask* mask = nullptr;   // null: one filter everywhere
    std::vector<double> weights{1.0};     // per-region penalty weights
    const Image* style_target = nullptr;  // non-null: style distance penalty
};

AttackResult finish_skipped(const Classifier& model, const LabeledImage& img,
                            const CurveVariant& var, int pieces, int pred) {
    AttackResult res;
    res.method = var.method;
    res.status = AttackStatus::AlreadyMisclassified;
    res.true_label = img.label;
    res.label_before = pred;
    res.label_after = pred;
    res.success = pred != img.label;
    res.adversarial = img.image;
    const int n = var.mask ? var.mask->regions.num_regions : 1;
    res.region_params.assign(static_cast<size_t>(n), FilterParams::identity(pieces));
    if (n == 1) res.params = res.region_params.front();
    res.norms = perturbation_norms(img.image, res.adversarial);
    (void)model;
    return res;
}

/// One loop serves ace, style and semantic so the degenerate cases coincide
/// arithmetically: a single all-zero region with weight 1.0 multiplies every
/// penalty term by exactly 1, and lambda = 0 multiplies it by exactly 0.
AttackResult run_curve_attack(const Classifier& model, const LabeledImage& img,
                              const AttackConfig& cfg, const CurveVariant& var) {
    cfg.validate();
    if (img.label < 0 || img.label >= model.num_classes())
        throw ValueError("image label out of range");
    if (var.style_target && !var.style_target->same_shape(img.image))
        throw ShapeError("style target shape does not match image");

    const int n = var.mask ? var.mask->regions.num_regions : 1;
    const int pieces = cfg.pieces;
    const size_t per = 3 * static_cast<size_t>(pieces);
    const double uniform = 1.0 / static_cast<double>(pieces);

    const int pred0 = model.predict(img.image);
    if (pred0 != img.label) return finish_skipped(model, img, var, pieces, pred0);

    AttackResult res;
    res.method = var.method;
    res.true_label = img.label;
    res.label_before = pred0;

    std::vector<FilterParams> thetas(static_cast<size_t>(n),
                                     FilterParams::identity(pieces));
    Adam opt(static_cast<size_t>(n) * per, cfg.learning_rate);
    std::vector<double> flat(static_cast<size_t>(n) * per);
    std::vector<double> grad(static_cast<size_t>(n) * per);

    bool succeeded_ever = false;
    double best_selector = std::numeric_limits<double>::infinity();
    std::vector<FilterParams> best_thetas;
    Image best_adv;
    int best_label = -1;

    double best_total = std::numeric_limits<double>::infinity();
    int plateau = 0;

    Image last_adv;
    int last_label = -1;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        res.iterations_used = it;
        Image adv = var.mask
                        ? apply_filter_masked(thetas, var.mask->regions, img.image)
                        : apply_filter(thetas[0], img.image);
        const auto tr = model.forward(adv);
        auto [adv_loss, d_logits] = adversarial_loss(tr, img.label, cfg);

        // Raw penalty doubles as the best-iterate selector (lowest deviation
        // among successes), so it is computed even at lambda = 0.
        double pen_raw = 0.0;
        if (var.style_target) {
            pen_raw = kernels::block_sum_sq_diff(adv.pixels.data(),
                                                 var.style_target->pixels.data(),
                                                 adv.pixels.size());
        } else {
            for (int f = 0; f < n; ++f)
                pen_raw += var.weights[static_cast<size_t>(f)]
                           * deviation_penalty(thetas[static_cast<size_t>(f)]);
        }
        const double pen_weighted = cfg.lambda * pen_raw;
        const double total = adv_loss + pen_weighted;
        res.trace.push_back({adv_loss, pen_weighted});

        const int pred = argmax_label(tr.logits);
        if (pred != img.label) {
            if (!succeeded_ever) res.first_success = it;
            succeeded_ever = true;
            if (pen_raw < best_selector) {
                best_selector = pen_raw;
                best_thetas = thetas;
                best_adv = adv;
                best_label = pred;
            }
        }

        if (total <= best_total - 1e-4)
            plateau = 0;
        else
            ++plateau;
        best_total = std::min(best_total, total);

        const bool stop = (succeeded_ever && plateau >= cfg.early_stop_patience)
                          || it == cfg.max_iters;
        if (!stop) {
            Image d_filtered = model.backward(tr, d_logits, nullptr);
            if (var.style_target && cfg.lambda != 0.0) {
                const double coef = cfg.lambda * 2.0;
                for (size_t i = 0; i < d_filtered.pixels.size(); ++i)
                    d_filtered.pixels[i] +=
                        coef * (adv.pixels[i] - var.style_target->pixels[i]);
            }
            if (var.mask) {
                const auto gs = filter_grad_theta_masked(thetas, var.mask->regions,
                                                         img.image, d_filtered);
                for (int f = 0; f < n; ++f)
                    std::copy(gs[static_cast<size_t>(f)].data(),
                              gs[static_cast<size_t>(f)].data() + per,
                              grad.begin() + static_cast<size_t>(f) * per);
            } else {
                const Tensor g = filter_grad_theta(thetas[0], img.image, d_filtered);
                std::copy(g.data(), g.data() + per, grad.begin());
            }
            if (!var.style_target && cfg.lambda != 0.0) {
                for (int f = 0; f < n; ++f) {
                    const double coef =
                        cfg.lambda * var.weights[static_cast<size_t>(f)] * 2.0;
                    const double* th = thetas[static_cast<size_t>(f)].theta.data();
                    double* gf = grad.data() + static_cast<size_t>(f) * per;
                    for (size_t j = 0; j < per; ++j)
                        gf[j] += coef * (th[j] - uniform);
                }
            }
            for (int f = 0; f < n; ++f)
                std::copy(thetas[static_cast<size_t>(f)].theta.data(),
                          thetas[static_cast<size_t>(f)].theta.data() + per,
                          flat.begin() + static_cast<size_t>(f) * per);
            opt.step(flat.data(), grad.data(), flat.size());
            for (int f = 0; f < n; ++f) {
                std::copy(flat.begin() + static_cast<size_t>(f) * per,
                          flat.begin() + static_cast<size_t>(f + 1) * per,
                          thetas[static_cast<size_t>(f)].theta.data());
                thetas[static_cast<size_t>(f)] =
                    project_simplex(thetas[static_cast<size_t>(f)]);
            }
        }
        last_adv = std::move(adv);
        last_label = pred;
        if (stop) break;
    }

    res.success = succeeded_ever;
    res.status = succeeded_ever ? AttackStatus::Succeeded : AttackStatus::Failed;
    if (succeeded_ever) {
        res.region_params = std::move(best_thetas);
        res.adversarial = std::move(best_adv);
        res.label_after = best_label;
    } else {
        res.region_params = std::move(thetas);
        res.adversarial = std::move(last_adv);
        res.label_after = last_label;
    }
    if (n == 1) res.params = res.region_params.front();
    res.norms = perturbation_norms(img.image, res.adversarial);
    return res;
}

} // namespace

AttackResult ace_attack(const Classifier& model, const LabeledImage& img,
                        const AttackConfig& cfg) {
    CurveVariant var;
    var.method = "ace";
    return run_curve_attack(model, img, cfg, var);
}

AttackResult style_guided_attack(const Classifier& model, const LabeledImage& img,
                                 const Image& target, const AttackConfig& cfg) {
    CurveVariant var;
    var.method = "ace-style";
    var.style_target = &target;
    return run_curve_attack(model, img, cfg, var);
}

AttackResult semantic_attack(const Classifier& model, const LabeledImage& img,
                             const SemanticMask& mask, const AttackConfig& cfg) {
    mask.validate();
    if (mask.regions.height != img.image.height
        || mask.regions.width != img.image.width)
        throw ShapeError("mask shape does not match image");
    CurveVariant var;
    var.method = "ace-semantic";
    var.mask = &mask;
    var.weights = mask.weights;
    return run_curve_attack(model, img, cfg, var);
}

AttackResult random_search_attack(const Classifier& model, const LabeledImage& img,
                                  const AttackConfig& cfg) {
    cfg.validate();
    if (img.label < 0 || img.label >= model.num_classes())
        throw ValueError("image label out of range");

    CurveVariant var;
    var.method = "random-search";
    const int pred0 = model.predict(img.image);
    if (pred0 != img.label)
        return finish_skipped(model, img, var, cfg.pieces, pred0);

    AttackResult res;
    res.method = var.method;
    res.true_label = img.label;
    res.label_before = pred0;

    Rng rng(cfg.seed);
    FilterParams sample;
    sample.pieces = cfg.pieces;
    sample.theta = Tensor({3, static_cast<size_t>(cfg.pieces)}, 0.0);
    Image last_adv;
    int last_label = -1;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        res.iterations_used = it;
        for (size_t i = 0; i < sample.theta.size(); ++i)
            sample.theta[i] = rng.uniform();
        if (cfg.rs_project) sample = project_simplex(sample);
        Image adv = apply_filter(sample, img.image);
        const auto logits = model.logits(adv);
        const double adv_loss = cw_loss(logits, img.label, cfg.kappa).first;
        res.trace.push_back({adv_loss, cfg.lambda * deviation_penalty(sample)});
        const int pred = argmax_label(logits);
        if (pred != img.label) {
            res.first_success = it;
            res.success = true;
            res.status = AttackStatus::Succeeded;
            res.params = sample;
            res.region_params = {sample};
            res.adversarial = std::move(adv);
            res.label_after = pred;
            res.norms = perturbation_norms(img.image, res.adversarial);
            return res;
        }
        last_adv = std::move(adv);
        last_label = pred;
    }
    res.success = false;
    res.status = AttackStatus::Failed;
    res.params = sample;
    res.region_params = {sample};
    res.adversarial = std::move(last_adv);
    res.label_after = last_label;
    res.norms = perturbation_norms(img.image, res.adversarial);
    return res;
}

nlohmann::json result_to_json(const AttackResult& r) {
    nlohmann::json j{{"method", r.method},
                     {"status", attack_status_name(r.status)},
                     {"success", r.success},
                     {"labels",
                      {{"true", r.true_label},
                       {"before", r.label_before},
                       {"after", r.label_after}}},
                     {"iterations", r.iterations_used},
                     {"first_success", r.first_success},
                     {"norms",
                      {{"l0_percent", r.norms.l0_percent},
                       {"l2", r.norms.l2},
                       {"linf255", r.norms.linf_255}}}};
    if (r.params) j["params"] = filter_to_json(*r.params);
    if (r.region_params.size() > 1) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : r.region_params) arr.push_back(filter_to_json(p));
        j["region_params"] = std::move(arr);
    }
    return j;
}

} // namespace chromaforge

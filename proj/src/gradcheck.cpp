#include "chromaforge/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "chromaforge/classifier.hpp"
#include "chromaforge/color_filter.hpp"
#include "chromaforge/errors.hpp"
#include "chromaforge/rng.hpp"

namespace chromaforge {
namespace {

// Step sizes: the curve is linear in theta and the penalty quadratic, so a
// fairly large step keeps cancellation noise down; the classifier checks use
// a smaller one to stay on the same side of relu/maxpool kinks.
constexpr double kFilterStep = 1e-6;
constexpr double kClassifierStep = 1e-7;

Image random_image(Rng& rng, size_t h, size_t w, double lo, double hi) {
    Image img(h, w);
    for (double& p : img.pixels) p = rng.uniform(lo, hi);
    return img;
}

FilterParams random_simplex_filter(Rng& rng, int pieces) {
    Tensor t(std::vector<size_t>{3, static_cast<size_t>(pieces)});
    // Raws bounded away from zero keep every slope positive after projection,
    // so curve values stay strictly inside (0,1) and the clamp never bites.
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.2, 1.0);
    return project_simplex(FilterParams(pieces, std::move(t)));
}

double filter_objective(const FilterParams& params, const Image& img,
                        const Image& weights) {
    Image out = apply_filter(params, img);
    double j = 0.0;
    for (size_t i = 0; i < out.pixels.size(); ++i) j += weights.pixels[i] * out.pixels[i];
    return j;
}

double check_filter_theta(Rng& rng) {
    static const int kPieces[] = {1, 2, 4, 8};
    int pieces = kPieces[rng.below(4)];
    FilterParams params = random_simplex_filter(rng, pieces);
    Image img = random_image(rng, 5, 6, 0.02, 0.98);
    Image weights = random_image(rng, 5, 6, -1.0, 1.0);

    Tensor analytic = filter_grad_theta(params, img, weights);
    double worst = 0.0;
    for (size_t i = 0; i < params.theta.size(); ++i) {
        FilterParams p = params;
        p.theta[i] += kFilterStep;
        double hi = filter_objective(p, img, weights);
        p.theta[i] = params.theta[i] - kFilterStep;
        double lo = filter_objective(p, img, weights);
        double fd = (hi - lo) / (2.0 * kFilterStep);
        worst = std::max(worst, grad_rel_err(analytic[i], fd));
    }
    return worst;
}

double check_penalty(Rng& rng) {
    static const int kPieces[] = {1, 3, 8, 16};
    int pieces = kPieces[rng.below(4)];
    FilterParams params(pieces, Tensor(std::vector<size_t>{3, static_cast<size_t>(pieces)}));
    for (size_t i = 0; i < params.theta.size(); ++i) params.theta[i] = rng.uniform(0.0, 1.0);

    Tensor analytic = deviation_penalty_grad(params);
    double worst = 0.0;
    for (size_t i = 0; i < params.theta.size(); ++i) {
        FilterParams p = params;
        p.theta[i] += kFilterStep;
        double hi = deviation_penalty(p);
        p.theta[i] = params.theta[i] - kFilterStep;
        double lo = deviation_penalty(p);
        double fd = (hi - lo) / (2.0 * kFilterStep);
        worst = std::max(worst, grad_rel_err(analytic[i], fd));
    }
    return worst;
}

Classifier tiny_model(Rng& rng, int trial) {
    uint64_t seed = rng.next_u64();
    if (trial % 2 == 0) {
        std::vector<LayerSpec> layers{
            {LayerKind::Conv3x3, 4, 0}, {LayerKind::Relu, 0, 0},
            {LayerKind::MaxPool2x2, 0, 0}, {LayerKind::Flatten, 0, 0},
            {LayerKind::Dense, 0, 3},   {LayerKind::Softmax, 0, 0}};
        Classifier model(std::move(layers), 8, 8, 3, "tiny-cnn");
        model.init_glorot(seed);
        return model;
    }
    std::vector<LayerSpec> layers{
        {LayerKind::Flatten, 0, 0}, {LayerKind::Dense, 0, 12},
        {LayerKind::Relu, 0, 0},    {LayerKind::Dense, 0, 3},
        {LayerKind::Softmax, 0, 0}};
    Classifier model(std::move(layers), 6, 6, 3, "tiny-mlp");
    model.init_glorot(seed);
    return model;
}

double logit_objective(const Classifier& model, const Image& img,
                       const std::vector<double>& coeffs) {
    std::vector<double> z = model.logits(img);
    double j = 0.0;
    for (size_t i = 0; i < z.size(); ++i) j += coeffs[i] * z[i];
    return j;
}

double check_classifier_input(Rng& rng, int trial) {
    Classifier model = tiny_model(rng, trial);
    Image img = random_image(rng, model.input_height(), model.input_width(), 0.05, 0.95);
    std::vector<double> coeffs(model.num_classes());
    for (double& c : coeffs) c = rng.uniform(-1.0, 1.0);

    Image analytic = model.input_gradient(img, coeffs);
    double worst = 0.0;
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        Image p = img;
        p.pixels[i] += kClassifierStep;
        double hi = logit_objective(model, p, coeffs);
        p.pixels[i] = img.pixels[i] - kClassifierStep;
        double lo = logit_objective(model, p, coeffs);
        double fd = (hi - lo) / (2.0 * kClassifierStep);
        worst = std::max(worst, grad_rel_err(analytic.pixels[i], fd));
    }
    return worst;
}

double check_classifier_weights(Rng& rng, int trial) {
    Classifier model = tiny_model(rng, trial);
    Image img = random_image(rng, model.input_height(), model.input_width(), 0.05, 0.95);
    std::vector<double> coeffs(model.num_classes());
    for (double& c : coeffs) c = rng.uniform(-1.0, 1.0);

    std::vector<double> analytic(model.num_params(), 0.0);
    model.weight_gradient(img, coeffs, analytic);
    double worst = 0.0;
    for (size_t i = 0; i < model.num_params(); ++i) {
        double saved = model.params()[i];
        model.params()[i] = saved + kClassifierStep;
        double hi = logit_objective(model, img, coeffs);
        model.params()[i] = saved - kClassifierStep;
        double lo = logit_objective(model, img, coeffs);
        model.params()[i] = saved;
        double fd = (hi - lo) / (2.0 * kClassifierStep);
        worst = std::max(worst, grad_rel_err(analytic[i], fd));
    }
    return worst;
}

} // namespace

double grad_rel_err(double analytic, double fd) {
    return std::abs(analytic - fd) /
           std::max({1.0, std::abs(analytic), std::abs(fd)});
}

double GradCheckReport::worst() const {
    return std::max({filter_theta, penalty, classifier_input, classifier_weights});
}

nlohmann::json GradCheckReport::to_json() const {
    return {{"trials", trials},
            {"filter_theta", filter_theta},
            {"penalty", penalty},
            {"classifier_input", classifier_input},
            {"classifier_weights", classifier_weights},
            {"worst", worst()},
            {"tolerance", kGradTolerance},
            {"passed", passed()}};
}

GradCheckReport run_gradcheck(const std::string& module, int trials, uint64_t seed) {
    if (module != "filter" && module != "classifier" && module != "all")
        throw ValueError("gradcheck module must be filter, classifier or all");
    if (trials < 1) throw ValueError("gradcheck needs at least one trial");

    GradCheckReport report;
    report.trials = trials;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
        if (module != "classifier") {
            report.filter_theta = std::max(report.filter_theta, check_filter_theta(rng));
            report.penalty = std::max(report.penalty, check_penalty(rng));
        }
        if (module != "filter") {
            report.classifier_input =
                std::max(report.classifier_input, check_classifier_input(rng, t));
            report.classifier_weights =
                std::max(report.classifier_weights, check_classifier_weights(rng, t));
        }
    }
    return report;
}

} // namespace chromaforge

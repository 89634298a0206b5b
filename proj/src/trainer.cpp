#include "chromaforge/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "chromaforge/adam.hpp"
#include "chromaforge/errors.hpp"
#include "chromaforge/rng.hpp"

namespace chromaforge {

TrainReport train(Classifier& model, const std::vector<LabeledImage>& data,
                  const TrainConfig& cfg) {
    if (data.empty()) throw ValueError("training set is empty");
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw ValueError("epochs and batch_size must be positive");
    for (const LabeledImage& ex : data)
        if (ex.label < 0 || ex.label >= model.num_classes())
            throw ValueError("training label out of range");

    TrainReport report;
    Adam opt(model.num_params(), cfg.learning_rate);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> d_params(model.num_params());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed, static_cast<uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);

        double loss_sum = 0.0;
        size_t correct = 0;
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(cfg.batch_size)) {
            const size_t stop =
                std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            std::fill(d_params.begin(), d_params.end(), 0.0);
            for (size_t i = start; i < stop; ++i) {
                const LabeledImage& ex = data[order[i]];
                const auto trace = model.forward(ex.image);
                loss_sum += cross_entropy(trace.probs, ex.label);
                int pred = 0;
                for (size_t k = 1; k < trace.logits.size(); ++k)
                    if (trace.logits[k] > trace.logits[pred])
                        pred = static_cast<int>(k);
                if (pred == ex.label) ++correct;
                const auto d_logits = cross_entropy_logit_grad(trace.probs, ex.label);
                model.backward(trace, d_logits, &d_params);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : d_params) g *= inv;
            opt.step(model.params().data(), d_params.data(), d_params.size());
        }
        const double mean_loss = loss_sum / static_cast<double>(data.size());
        if (!std::isfinite(mean_loss))
            throw ValueError("training diverged: non-finite loss at epoch "
                             + std::to_string(epoch));
        report.epoch_loss.push_back(mean_loss);
        report.epoch_accuracy.push_back(static_cast<double>(correct)
                                        / static_cast<double>(data.size()));
        if (cfg.verbose)
            std::fprintf(stderr, "epoch %3d  loss %.4f  acc %.4f\n", epoch + 1,
                         mean_loss, report.epoch_accuracy.back());
    }
    return report;
}

double evaluate_accuracy(const Classifier& model,
                         const std::vector<LabeledImage>& data) {
    if (data.empty()) throw ValueError("evaluation set is empty");
    size_t correct = 0;
    for (const LabeledImage& ex : data)
        if (model.predict(ex.image) == ex.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace chromaforge

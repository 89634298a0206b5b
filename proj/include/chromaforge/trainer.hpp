#pragma once

#include <cstdint>
#include <vector>

#include "chromaforge/classifier.hpp"
#include "chromaforge/image.hpp"

namespace chromaforge {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 1e-3;
    uint64_t seed = 0; // drives the per-epoch shuffles
    bool verbose = false;
};

struct TrainReport {
    std::vector<double> epoch_loss;     // mean cross-entropy per epoch
    std::vector<double> epoch_accuracy; // training accuracy per epoch
};

/// Minibatch Adam on softmax cross-entropy. Shuffles are seeded per epoch, so
/// a (model seed, train seed) pair reproduces the run exactly. Throws
/// ValueError if the loss goes non-finite.
TrainReport train(Classifier& model, const std::vector<LabeledImage>& data,
                  const TrainConfig& cfg);

double evaluate_accuracy(const Classifier& model,
                         const std::vector<LabeledImage>& data);

} // namespace chromaforge

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chromaforge/classifier.hpp"
#include "chromaforge/color_filter.hpp"
#include "chromaforge/image.hpp"
#include "chromaforge/metrics.hpp"

namespace chromaforge {

enum class AttackLoss { CwMargin, CrossEntropy };

struct AttackConfig {
    int pieces = 64;             // K
    double lambda = 5.0;         // balance factor
    double kappa = 0.0;          // confidence margin of the hinge loss
    int max_iters = 500;
    double learning_rate = 0.01; // Adam step
    int early_stop_patience = 50;
    uint64_t seed = 0;           // drives random search; curve attacks are seedless
    AttackLoss loss = AttackLoss::CwMargin;
    bool rs_project = true;      // project random-search samples to the simplex

    void validate() const;
};

enum class AttackStatus { Succeeded, Failed, AlreadyMisclassified };

std::string attack_status_name(AttackStatus s);

/// Per-iteration loss terms; penalty is the lambda-weighted term as it enters
/// the total objective (so a lambda of 0 records exact zeros).
struct TracePoint {
    double adv_loss = 0.0;
    double penalty = 0.0;
};

struct SemanticMask {
    RegionMask regions;
    std::vector<double> weights; // one per region, on the simplex

    void validate() const; // weights match region count, nonnegative, sum to 1
};

struct AttackResult {
    std::string method;
    AttackStatus status = AttackStatus::Failed;
    bool success = false;  // model mislabels `adversarial`
    int true_label = -1;
    int label_before = -1; // model prediction on the original
    int label_after = -1;  // model prediction on `adversarial`
    int iterations_used = 0;
    int first_success = -1; // 1-based iteration of the first misclassification
    std::optional<FilterParams> params;      // single-filter attacks
    std::vector<FilterParams> region_params; // semantic attack, one per region
    Image adversarial;
    PerturbationNorms norms; // vs the original image
    std::vector<TracePoint> trace;
};

/// JSON view (params, success, iterations, norms, labels + method/status);
/// the loss trace stays in-memory only.
nlohmann::json result_to_json(const AttackResult& r);

/// Hinge margin over logits: max(Z_l - max_{i != l} Z_i, -kappa), with the
/// runner-up at the smallest index on ties. Returns the loss and its
/// subgradient (+1 at l, -1 at the runner-up; zeros when clipped at -kappa).
std::pair<double, std::vector<double>> cw_loss(const std::vector<double>& logits,
                                               int true_label, double kappa);

/// Gradient descent on cw_loss(model(filter(x))) + lambda * deviation penalty,
/// starting from the identity filter, Adam + per-channel simplex projection.
AttackResult ace_attack(const Classifier& model, const LabeledImage& img,
                        const AttackConfig& cfg);

/// Same budget, no gradients: uniform theta draws (projected when
/// cfg.rs_project), first success wins.
AttackResult random_search_attack(const Classifier& model, const LabeledImage& img,
                                  const AttackConfig& cfg);

/// Deviation penalty replaced by ||filtered - target||_2^2 with the gradient
/// flowing through the filter.
AttackResult style_guided_attack(const Classifier& model, const LabeledImage& img,
                                 const Image& target, const AttackConfig& cfg);

/// One filter per mask region, composited; penalty = lambda * sum_n w_n *
/// deviation(theta_n); Adam + projection per region.
AttackResult semantic_attack(const Classifier& model, const LabeledImage& img,
                             const SemanticMask& mask, const AttackConfig& cfg);

} // namespace chromaforge

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chromaforge/attacks.hpp"
#include "chromaforge/classifier.hpp"

namespace chromaforge {

/// One row of the Table-style reports. Norms and mean_iters are averaged over
/// successful attacks only (absent when none succeeded); n is the number of
/// attacked images (or the agreement count for transfer rows).
struct EvalRow {
    std::string method;
    std::string model_src = "-";
    std::string model_dst = "-";
    int n = 0;
    std::optional<double> success_pct;
    std::optional<double> l0_pct;
    std::optional<double> l2;
    std::optional<double> linf255;
    std::optional<double> mean_iters;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Group results by method (first-seen order), skipping already-misclassified
/// inputs. Throws ValueError on empty input.
EvalReport summarize(const std::vector<AttackResult>& results);

/// Deterministic shortest round-trip decimal for doubles, shared by every CSV
/// writer so reruns are byte-identical.
std::string format_double(double v);

struct TransferEntry {
    int agreement = 0;                // pair denominator
    std::optional<double> success_pct; // absent when agreement == 0
    std::optional<double> l0_pct, l2, linf255, mean_iters; // over successes on src
};

struct TransferMatrix {
    std::vector<std::string> models; // names, row = source, column = destination
    std::vector<std::vector<TransferEntry>> entries;

    EvalReport report(const std::string& method) const;
};

/// attack(model, image, image_index) -> AttackResult; called once per
/// (source model, correctly classified image). Entry (A,B) = share of images
/// that both A and B classify correctly whose A-adversarial B mislabels.
using AttackFn =
    std::function<AttackResult(const Classifier&, const LabeledImage&, size_t)>;

TransferMatrix transfer_matrix(const std::vector<const Classifier*>& models,
                               const std::vector<std::string>& names,
                               const std::vector<LabeledImage>& images,
                               const AttackFn& attack);

} // namespace chromaforge

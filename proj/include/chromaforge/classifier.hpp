#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "chromaforge/image.hpp"

namespace chromaforge {

enum class LayerKind { Conv3x3, Relu, MaxPool2x2, Flatten, Dense, Softmax };

struct LayerSpec {
    LayerKind kind;
    int out_channels = 0; // Conv3x3
    int units = 0;        // Dense
};

std::string layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

/// Sequential image classifier over [H][W][C] doubles. Parameters live in one
/// flat vector (conv blocks as [Cout][3][3][Cin] + bias, dense as [Out][In] +
/// bias) so optimizers and serialization can treat the model as a single
/// array. Softmax must be the final layer; logits are the values entering it.
class Classifier {
public:
    Classifier(std::vector<LayerSpec> layers, size_t in_h, size_t in_w, int in_c,
               std::string arch_name = "custom");

    /// "mlp-small" or "cnn-small"; weights Glorot-uniform from the seed.
    static Classifier make_preset(const std::string& arch, int num_classes,
                                  uint64_t seed);
    static std::vector<std::string> preset_names();

    /// Every layer boundary activation; acts[0] is the flattened input,
    /// acts[i] the output of layer i-1. probs is the softmax output.
    struct Trace {
        std::vector<std::vector<double>> acts;
        std::vector<std::vector<int>> pool_argmax;
        std::vector<double> logits;
        std::vector<double> probs;
    };

    Trace forward(const Image& img) const;
    std::vector<double> logits(const Image& img) const;
    std::vector<double> probabilities(const Image& img) const;
    /// Argmax of the logits, smallest index on ties.
    int predict(const Image& img) const;

    /// Backpropagate d(loss)/d(logits). When d_params is non-null the
    /// per-example weight gradient is ACCUMULATED into it (batch callers zero
    /// it first and divide by the batch size themselves). Returns
    /// d(loss)/d(input pixel).
    Image backward(const Trace& trace, const std::vector<double>& d_logits,
                   std::vector<double>* d_params) const;

    Image input_gradient(const Image& img, const std::vector<double>& d_logits) const;
    void weight_gradient(const Image& img, const std::vector<double>& d_logits,
                         std::vector<double>& d_params) const;

    void init_glorot(uint64_t seed);

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    size_t num_params() const { return params_.size(); }
    int num_classes() const { return num_classes_; }
    size_t input_height() const { return in_h_; }
    size_t input_width() const { return in_w_; }
    int input_channels() const { return in_c_; }
    const std::string& arch_name() const { return arch_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }

    nlohmann::json to_json() const;
    static Classifier from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static Classifier load(const std::string& path);

private:
    struct Stage { // resolved per-layer geometry
        LayerSpec spec;
        size_t in_h, in_w;
        int in_c;
        size_t out_h, out_w;
        int out_c;
        size_t param_offset = 0; // into params_
        size_t weight_count = 0; // excludes bias
        size_t bias_count = 0;
    };

    void resolve_shapes();

    std::vector<LayerSpec> layers_;
    std::vector<Stage> stages_;
    std::vector<double> params_;
    size_t in_h_, in_w_;
    int in_c_;
    int num_classes_ = 0;
    std::string arch_;
};

/// Mean cross-entropy helpers shared by the trainer and the CLI.
double cross_entropy(const std::vector<double>& probs, int label);
/// d(loss)/d(logits) for softmax + cross-entropy: probs - onehot(label).
std::vector<double> cross_entropy_logit_grad(const std::vector<double>& probs,
                                             int label);

} // namespace chromaforge

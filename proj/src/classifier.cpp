#include "chromaforge/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chromaforge/errors.hpp"
#include "chromaforge/kernels.hpp"
#include "chromaforge/rng.hpp"

namespace chromaforge {

namespace {
constexpr int kModelFormatVersion = 1;
} // namespace

std::string layer_kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Conv3x3: return "conv3x3";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2x2: return "maxpool2x2";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
    }
    throw ValueError("unknown layer kind");
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv3x3") return LayerKind::Conv3x3;
    if (name == "relu") return LayerKind::Relu;
    if (name == "maxpool2x2") return LayerKind::MaxPool2x2;
    if (name == "flatten") return LayerKind::Flatten;
    if (name == "dense") return LayerKind::Dense;
    if (name == "softmax") return LayerKind::Softmax;
    throw ValueError("unknown layer kind: " + name);
}

Classifier::Classifier(std::vector<LayerSpec> layers, size_t in_h, size_t in_w,
                       int in_c, std::string arch_name)
    : layers_(std::move(layers)), in_h_(in_h), in_w_(in_w), in_c_(in_c),
      arch_(std::move(arch_name)) {
    resolve_shapes();
}

void Classifier::resolve_shapes() {
    if (layers_.empty()) throw ValueError("classifier needs at least one layer");
    if (layers_.back().kind != LayerKind::Softmax)
        throw ValueError("classifier must end with softmax");
    if (in_h_ == 0 || in_w_ == 0 || in_c_ < 1)
        throw ValueError("classifier input shape is empty");

    stages_.clear();
    size_t h = in_h_, w = in_w_;
    int c = in_c_;
    bool flat = false;
    size_t flat_n = 0;
    size_t offset = 0;
    for (size_t li = 0; li < layers_.size(); ++li) {
        const LayerSpec& spec = layers_[li];
        Stage st;
        st.spec = spec;
        st.in_h = h;
        st.in_w = w;
        st.in_c = c;
        switch (spec.kind) {
        case LayerKind::Conv3x3:
            if (flat) throw ValueError("conv3x3 after flatten");
            if (spec.out_channels < 1) throw ValueError("conv3x3 needs out_channels");
            st.weight_count = static_cast<size_t>(spec.out_channels) * 9 * c;
            st.bias_count = static_cast<size_t>(spec.out_channels);
            c = spec.out_channels;
            break;
        case LayerKind::Relu:
            break;
        case LayerKind::MaxPool2x2:
            if (flat) throw ValueError("maxpool2x2 after flatten");
            if (h % 2 != 0 || w % 2 != 0)
                throw ValueError("maxpool2x2 needs even spatial dims");
            h /= 2;
            w /= 2;
            break;
        case LayerKind::Flatten:
            if (flat) throw ValueError("flatten applied twice");
            flat = true;
            flat_n = h * w * static_cast<size_t>(c);
            break;
        case LayerKind::Dense:
            if (!flat) throw ValueError("dense requires flatten first");
            if (spec.units < 1) throw ValueError("dense needs units");
            st.weight_count = static_cast<size_t>(spec.units) * flat_n;
            st.bias_count = static_cast<size_t>(spec.units);
            flat_n = static_cast<size_t>(spec.units);
            break;
        case LayerKind::Softmax:
            if (li + 1 != layers_.size()) throw ValueError("softmax must be last");
            if (!flat) throw ValueError("softmax requires a flat input");
            break;
        }
        st.out_h = h;
        st.out_w = w;
        st.out_c = c;
        if (flat) {
            st.out_h = 1;
            st.out_w = 1;
            st.out_c = static_cast<int>(flat_n);
            if (spec.kind == LayerKind::Flatten) {
                st.in_h = 1; // flatten is a no-op on the flat buffer
                st.in_w = 1;
                st.in_c = static_cast<int>(flat_n);
            }
        }
        st.param_offset = offset;
        offset += st.weight_count + st.bias_count;
        stages_.push_back(st);
    }
    params_.assign(offset, 0.0);
    num_classes_ = stages_.back().out_c;
    if (num_classes_ < 2) throw ValueError("classifier needs >= 2 classes");
}

void Classifier::init_glorot(uint64_t seed) {
    Rng rng(seed);
    for (const Stage& st : stages_) {
        if (st.weight_count == 0) continue;
        size_t fan_in = 0, fan_out = 0;
        if (st.spec.kind == LayerKind::Conv3x3) {
            fan_in = 9 * static_cast<size_t>(st.in_c);
            fan_out = 9 * static_cast<size_t>(st.spec.out_channels);
        } else {
            fan_in = st.weight_count / st.bias_count;
            fan_out = st.bias_count;
        }
        const double limit =
            std::sqrt(6.0 / (static_cast<double>(fan_in) + static_cast<double>(fan_out)));
        for (size_t i = 0; i < st.weight_count; ++i)
            params_[st.param_offset + i] = rng.uniform(-limit, limit);
        for (size_t i = 0; i < st.bias_count; ++i)
            params_[st.param_offset + st.weight_count + i] = 0.0;
    }
}

Classifier Classifier::make_preset(const std::string& arch, int num_classes,
                                   uint64_t seed) {
    if (num_classes < 2) throw ValueError("presets need >= 2 classes");
    std::vector<LayerSpec> layers;
    if (arch == "mlp-small") {
        layers = {{LayerKind::Flatten},
                  {LayerKind::Dense, 0, 128},
                  {LayerKind::Relu},
                  {LayerKind::Dense, 0, num_classes},
                  {LayerKind::Softmax}};
    } else if (arch == "cnn-small") {
        layers = {{LayerKind::Conv3x3, 16, 0},
                  {LayerKind::Relu},
                  {LayerKind::MaxPool2x2},
                  {LayerKind::Conv3x3, 32, 0},
                  {LayerKind::Relu},
                  {LayerKind::MaxPool2x2},
                  {LayerKind::Flatten},
                  {LayerKind::Dense, 0, num_classes},
                  {LayerKind::Softmax}};
    } else {
        throw ValueError("unknown architecture preset: " + arch);
    }
    Classifier model(std::move(layers), 32, 32, 3, arch);
    model.init_glorot(seed);
    return model;
}

std::vector<std::string> Classifier::preset_names() {
    return {"mlp-small", "cnn-small"};
}

Classifier::Trace Classifier::forward(const Image& img) const {
    if (img.height != in_h_ || img.width != in_w_ || in_c_ != 3)
        throw ShapeError("image shape does not match classifier input");
    Trace tr;
    tr.acts.reserve(stages_.size() + 1);
    tr.acts.push_back(img.pixels);
    for (const Stage& st : stages_) {
        const std::vector<double>& in = tr.acts.back();
        std::vector<double> out;
        switch (st.spec.kind) {
        case LayerKind::Conv3x3: {
            out.resize(st.out_h * st.out_w * static_cast<size_t>(st.out_c));
            const double* w = params_.data() + st.param_offset;
            const double* b = w + st.weight_count;
            kernels::conv3x3_forward(in.data(), st.in_h, st.in_w, st.in_c, w, b,
                                     st.out_c, out.data());
            break;
        }
        case LayerKind::Relu:
            out.resize(in.size());
            kernels::relu_forward(in.data(), in.size(), out.data());
            break;
        case LayerKind::MaxPool2x2: {
            out.resize(st.out_h * st.out_w * static_cast<size_t>(st.out_c));
            std::vector<int> argmax(out.size());
            kernels::maxpool2x2_forward(in.data(), st.in_h, st.in_w, st.in_c,
                                        out.data(), argmax.data());
            tr.pool_argmax.push_back(std::move(argmax));
            break;
        }
        case LayerKind::Flatten:
            out = in;
            break;
        case LayerKind::Dense: {
            const size_t n_in = in.size();
            const size_t n_out = st.bias_count;
            out.resize(n_out);
            const double* w = params_.data() + st.param_offset;
            const double* b = w + st.weight_count;
            kernels::dense_forward(in.data(), n_in, w, b, n_out, out.data());
            break;
        }
        case LayerKind::Softmax: {
            tr.logits = in;
            const double m = *std::max_element(in.begin(), in.end());
            out.resize(in.size());
            double denom = 0.0;
            for (size_t i = 0; i < in.size(); ++i) {
                out[i] = std::exp(in[i] - m);
                denom += out[i];
            }
            for (double& v : out) v /= denom;
            tr.probs = out;
            break;
        }
        }
        tr.acts.push_back(std::move(out));
    }
    return tr;
}

std::vector<double> Classifier::logits(const Image& img) const {
    return forward(img).logits;
}

std::vector<double> Classifier::probabilities(const Image& img) const {
    return forward(img).probs;
}

int Classifier::predict(const Image& img) const {
    const auto z = logits(img);
    int best = 0;
    for (size_t i = 1; i < z.size(); ++i)
        if (z[i] > z[best]) best = static_cast<int>(i);
    return best;
}

Image Classifier::backward(const Trace& trace, const std::vector<double>& d_logits,
                           std::vector<double>* d_params) const {
    if (d_logits.size() != static_cast<size_t>(num_classes_))
        throw ShapeError("d_logits size does not match class count");
    if (d_params && d_params->size() != params_.size())
        throw ShapeError("d_params size does not match parameter count");

    std::vector<double> grad = d_logits; // gradient w.r.t. current layer OUTPUT
    int pool_idx = static_cast<int>(trace.pool_argmax.size());
    // The softmax stage is skipped: d_logits is already the gradient at its input.
    for (size_t i = stages_.size() - 1; i > 0; --i) {
        const Stage& st = stages_[i - 1];
        const std::vector<double>& in = trace.acts[i - 1];
        std::vector<double> d_in;
        switch (st.spec.kind) {
        case LayerKind::Conv3x3: {
            const double* w = params_.data() + st.param_offset;
            d_in.resize(in.size());
            if (d_params) {
                double* dw = d_params->data() + st.param_offset;
                double* db = dw + st.weight_count;
                kernels::conv3x3_backward_weights(in.data(), grad.data(), st.in_h,
                                                  st.in_w, st.in_c, st.out_c, dw, db);
            }
            kernels::conv3x3_backward_input(grad.data(), st.in_h, st.in_w, st.out_c,
                                            w, st.in_c, d_in.data());
            break;
        }
        case LayerKind::Relu:
            d_in.resize(in.size());
            kernels::relu_backward(in.data(), grad.data(), in.size(), d_in.data());
            break;
        case LayerKind::MaxPool2x2: {
            --pool_idx;
            d_in.resize(in.size());
            kernels::maxpool2x2_backward(grad.data(), st.out_h, st.out_w, st.out_c,
                                         trace.pool_argmax[pool_idx].data(), st.in_h,
                                         st.in_w, d_in.data());
            break;
        }
        case LayerKind::Flatten:
            d_in = grad;
            break;
        case LayerKind::Dense: {
            const double* w = params_.data() + st.param_offset;
            const size_t n_in = in.size();
            const size_t n_out = st.bias_count;
            d_in.resize(n_in);
            if (d_params) {
                double* dw = d_params->data() + st.param_offset;
                double* db = dw + st.weight_count;
                kernels::dense_backward_weights(in.data(), grad.data(), n_in, n_out,
                                                dw, db);
            }
            kernels::dense_backward_input(grad.data(), n_out, w, n_in, d_in.data());
            break;
        }
        case LayerKind::Softmax:
            d_in = grad; // unreachable: loop starts below the softmax stage
            break;
        }
        grad = std::move(d_in);
    }
    Image g(in_h_, in_w_);
    if (grad.size() != g.pixels.size())
        throw ShapeError("input gradient size mismatch");
    g.pixels = std::move(grad);
    return g;
}

Image Classifier::input_gradient(const Image& img,
                                 const std::vector<double>& d_logits) const {
    return backward(forward(img), d_logits, nullptr);
}

void Classifier::weight_gradient(const Image& img, const std::vector<double>& d_logits,
                                 std::vector<double>& d_params) const {
    backward(forward(img), d_logits, &d_params);
}

nlohmann::json Classifier::to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerSpec& l : layers_) {
        nlohmann::json jl{{"kind", layer_kind_name(l.kind)}};
        if (l.kind == LayerKind::Conv3x3) jl["out_channels"] = l.out_channels;
        if (l.kind == LayerKind::Dense) jl["units"] = l.units;
        layers.push_back(std::move(jl));
    }
    return nlohmann::json{{"format_version", kModelFormatVersion},
                          {"arch", arch_},
                          {"input", {{"h", in_h_}, {"w", in_w_}, {"c", in_c_}}},
                          {"layers", std::move(layers)},
                          {"params", params_}};
}

Classifier Classifier::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("format_version"))
        throw IoError(IoErrorKind::CorruptFile, "model json missing format_version");
    const int ver = j.at("format_version").get<int>();
    if (ver != kModelFormatVersion)
        throw IoError(IoErrorKind::VersionMismatch,
                      "model format_version " + std::to_string(ver)
                          + " unsupported (expected "
                          + std::to_string(kModelFormatVersion) + ")");
    try {
        std::vector<LayerSpec> layers;
        for (const auto& jl : j.at("layers")) {
            LayerSpec l{layer_kind_from_name(jl.at("kind").get<std::string>())};
            if (l.kind == LayerKind::Conv3x3)
                l.out_channels = jl.at("out_channels").get<int>();
            if (l.kind == LayerKind::Dense) l.units = jl.at("units").get<int>();
            layers.push_back(l);
        }
        const auto& in = j.at("input");
        Classifier model(std::move(layers), in.at("h").get<size_t>(),
                         in.at("w").get<size_t>(), in.at("c").get<int>(),
                         j.value("arch", std::string("custom")));
        auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != model.params_.size())
            throw IoError(IoErrorKind::CorruptFile,
                          "model params length " + std::to_string(params.size())
                              + " != expected "
                              + std::to_string(model.params_.size()));
        model.params_ = std::move(params);
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorKind::CorruptFile,
                      "model json malformed: " + std::string(e.what()));
    } catch (const ValueError& e) {
        throw IoError(IoErrorKind::CorruptFile,
                      "model json invalid: " + std::string(e.what()));
    }
}

void Classifier::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError(IoErrorKind::Unwritable, "cannot write " + path);
    out << to_json().dump() << "\n";
    if (!out) throw IoError(IoErrorKind::Unwritable, "short write to " + path);
}

Classifier Classifier::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorKind::CorruptFile,
                      "model json parse failed: " + std::string(e.what()));
    }
    return from_json(j);
}

double cross_entropy(const std::vector<double>& probs, int label) {
    if (label < 0 || static_cast<size_t>(label) >= probs.size())
        throw ValueError("label out of range");
    return -std::log(std::max(probs[static_cast<size_t>(label)], 1e-300));
}

std::vector<double> cross_entropy_logit_grad(const std::vector<double>& probs,
                                             int label) {
    if (label < 0 || static_cast<size_t>(label) >= probs.size())
        throw ValueError("label out of range");
    std::vector<double> g = probs;
    g[static_cast<size_t>(label)] -= 1.0;
    return g;
}

} // namespace chromaforge

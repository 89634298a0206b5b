#include "chromaforge/color_filter.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include "chromaforge/errors.hpp"
#include "chromaforge/kernels.hpp"

namespace chromaforge {

namespace {

/// prefix[c][k] = sum of the first k slopes of channel c; length K+1 per channel.
std::vector<double> build_prefixes(const Tensor& theta, int pieces) {
    std::vector<double> prefix(3 * (static_cast<size_t>(pieces) + 1));
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        prefix[static_cast<size_t>(c) * (pieces + 1)] = 0.0;
        for (int i = 0; i < pieces; ++i) {
            acc += theta[static_cast<size_t>(c) * pieces + i];
            prefix[static_cast<size_t>(c) * (pieces + 1) + i + 1] = acc;
        }
    }
    return prefix;
}

void check_image_params(const FilterParams& params, const Image& img) {
    params.validate();
    if (img.height == 0 || img.width == 0)
        throw ValueError("filter applied to an empty image");
}

void check_masked(const std::vector<FilterParams>& params, const RegionMask& mask,
                  const Image& img) {
    if (params.empty()) throw ValueError("masked filter needs at least one region");
    for (const auto& p : params) {
        p.validate();
        if (p.pieces != params.front().pieces)
            throw ValueError("masked filter regions must share K");
    }
    if (mask.height != img.height || mask.width != img.width)
        throw ShapeError("mask shape does not match image");
    if (mask.num_regions != static_cast<int>(params.size()))
        throw ShapeError("mask region count does not match params");
}

/// Flatten per-region thetas into the [n][3][K] layout the kernels expect.
std::vector<double> pack_thetas(const std::vector<FilterParams>& params) {
    const int pieces = params.front().pieces;
    std::vector<double> flat(params.size() * 3 * static_cast<size_t>(pieces));
    for (size_t f = 0; f < params.size(); ++f)
        std::copy(params[f].theta.data(),
                  params[f].theta.data() + 3 * static_cast<size_t>(pieces),
                  flat.begin() + f * 3 * static_cast<size_t>(pieces));
    return flat;
}

std::vector<double> pack_prefixes(const std::vector<FilterParams>& params) {
    const int pieces = params.front().pieces;
    std::vector<double> flat(params.size() * 3 * (static_cast<size_t>(pieces) + 1));
    for (size_t f = 0; f < params.size(); ++f) {
        const auto pre = build_prefixes(params[f].theta, pieces);
        std::copy(pre.begin(), pre.end(),
                  flat.begin() + f * 3 * (static_cast<size_t>(pieces) + 1));
    }
    return flat;
}

} // namespace

FilterParams::FilterParams(int k, Tensor t) : pieces(k), theta(std::move(t)) {
    validate();
}

FilterParams FilterParams::identity(int pieces) {
    if (pieces < 1) throw ValueError("K must be >= 1");
    FilterParams p;
    p.pieces = pieces;
    p.theta = Tensor({3, static_cast<size_t>(pieces)},
                     1.0 / static_cast<double>(pieces));
    return p;
}

void FilterParams::validate() const {
    if (pieces < 1) throw ValueError("K must be >= 1");
    if (theta.rank() != 2 || theta.dim(0) != 3
        || theta.dim(1) != static_cast<size_t>(pieces))
        throw ShapeError("theta must be [3][K]");
    for (size_t i = 0; i < theta.size(); ++i)
        if (!std::isfinite(theta[i])) throw ValueError("theta has non-finite entries");
}

int piece_index(int pieces, double x) {
    if (pieces < 1) throw ValueError("K must be >= 1");
    if (!(x >= 0.0 && x <= 1.0))
        throw ValueError("curve input " + std::to_string(x) + " outside [0,1]");
    return kernels::piece_of(x, pieces);
}

Image apply_filter(const FilterParams& params, const Image& img) {
    check_image_params(params, img);
    Image out(img.height, img.width);
    const auto prefix = build_prefixes(params.theta, params.pieces);
    kernels::apply_curves(img.pixels.data(), out.pixels.data(), img.num_pixels(), 3,
                          params.pieces, params.theta.data(), prefix.data(),
                          nullptr, 1);
    return out;
}

Tensor filter_grad_theta(const FilterParams& params, const Image& img,
                         const Image& upstream) {
    check_image_params(params, img);
    if (!img.same_shape(upstream))
        throw ShapeError("upstream gradient shape does not match image");
    Tensor grad({3, static_cast<size_t>(params.pieces)}, 0.0);
    kernels::curve_grad_theta(img.pixels.data(), upstream.pixels.data(),
                              img.num_pixels(), 3, params.pieces, nullptr, 1,
                              grad.data());
    return grad;
}

Image filter_grad_input(const FilterParams& params, const Image& img,
                        const Image& upstream) {
    check_image_params(params, img);
    if (!img.same_shape(upstream))
        throw ShapeError("upstream gradient shape does not match image");
    Image out(img.height, img.width);
    kernels::curve_grad_input(img.pixels.data(), upstream.pixels.data(),
                              img.num_pixels(), 3, params.pieces,
                              params.theta.data(), nullptr, 1, out.pixels.data());
    return out;
}

Image apply_filter_masked(const std::vector<FilterParams>& params,
                          const RegionMask& mask, const Image& img) {
    check_masked(params, mask, img);
    const int pieces = params.front().pieces;
    const auto thetas = pack_thetas(params);
    const auto prefixes = pack_prefixes(params);
    Image out(img.height, img.width);
    kernels::apply_curves(img.pixels.data(), out.pixels.data(), img.num_pixels(), 3,
                          pieces, thetas.data(), prefixes.data(),
                          mask.region.data(), static_cast<int>(params.size()));
    return out;
}

std::vector<Tensor> filter_grad_theta_masked(const std::vector<FilterParams>& params,
                                             const RegionMask& mask, const Image& img,
                                             const Image& upstream) {
    check_masked(params, mask, img);
    if (!img.same_shape(upstream))
        throw ShapeError("upstream gradient shape does not match image");
    const int pieces = params.front().pieces;
    std::vector<double> flat(params.size() * 3 * static_cast<size_t>(pieces));
    kernels::curve_grad_theta(img.pixels.data(), upstream.pixels.data(),
                              img.num_pixels(), 3, pieces, mask.region.data(),
                              static_cast<int>(params.size()), flat.data());
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (size_t f = 0; f < params.size(); ++f) {
        Tensor g({3, static_cast<size_t>(pieces)}, 0.0);
        std::copy(flat.begin() + f * 3 * static_cast<size_t>(pieces),
                  flat.begin() + (f + 1) * 3 * static_cast<size_t>(pieces),
                  g.data());
        grads.push_back(std::move(g));
    }
    return grads;
}

FilterParams project_simplex(const FilterParams& params) {
    params.validate();
    FilterParams out = params;
    const int pieces = params.pieces;
    for (int c = 0; c < 3; ++c) {
        double* row = out.theta.data() + static_cast<size_t>(c) * pieces;
        double sum = 0.0;
        for (int i = 0; i < pieces; ++i) {
            if (row[i] < 0.0) row[i] = 0.0;
            sum += row[i];
        }
        if (sum <= 0.0) {
            for (int i = 0; i < pieces; ++i) row[i] = 1.0 / pieces;
        } else {
            for (int i = 0; i < pieces; ++i) row[i] /= sum;
        }
    }
    return out;
}

double deviation_penalty(const FilterParams& params) {
    params.validate();
    const double uniform = 1.0 / params.pieces;
    double s = 0.0;
    for (size_t i = 0; i < params.theta.size(); ++i) {
        const double d = params.theta[i] - uniform;
        s += d * d;
    }
    return s;
}

Tensor deviation_penalty_grad(const FilterParams& params) {
    params.validate();
    const double uniform = 1.0 / params.pieces;
    Tensor g({3, static_cast<size_t>(params.pieces)}, 0.0);
    for (size_t i = 0; i < params.theta.size(); ++i)
        g[i] = 2.0 * (params.theta[i] - uniform);
    return g;
}

nlohmann::json filter_to_json(const FilterParams& params) {
    params.validate();
    nlohmann::json rows = nlohmann::json::array();
    for (int c = 0; c < 3; ++c) {
        nlohmann::json row = nlohmann::json::array();
        for (int i = 0; i < params.pieces; ++i)
            row.push_back(params.theta[static_cast<size_t>(c) * params.pieces + i]);
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"K", params.pieces}, {"theta", std::move(rows)}};
}

FilterParams filter_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("K") || !j.contains("theta"))
        throw IoError(IoErrorKind::CorruptFile, "filter json needs K and theta");
    const int pieces = j.at("K").get<int>();
    const auto& rows = j.at("theta");
    if (!rows.is_array() || rows.size() != 3)
        throw IoError(IoErrorKind::CorruptFile, "filter theta must have 3 rows");
    FilterParams p;
    p.pieces = pieces;
    if (pieces < 1) throw IoError(IoErrorKind::CorruptFile, "filter K must be >= 1");
    p.theta = Tensor({3, static_cast<size_t>(pieces)}, 0.0);
    for (int c = 0; c < 3; ++c) {
        if (!rows[c].is_array() || rows[c].size() != static_cast<size_t>(pieces))
            throw IoError(IoErrorKind::CorruptFile, "filter theta row length != K");
        for (int i = 0; i < pieces; ++i)
            p.theta[static_cast<size_t>(c) * pieces + i] = rows[c][i].get<double>();
    }
    p.validate();
    return p;
}

void save_filter(const FilterParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(IoErrorKind::Unwritable, "cannot write " + path);
    out << filter_to_json(params).dump(2) << "\n";
}

FilterParams load_filter(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoErrorKind::CorruptFile,
                      "filter json parse failed: " + std::string(e.what()));
    }
    return filter_from_json(j);
}

namespace {

/// Slopes sampled from a smooth monotone tone curve C: theta_i = C(i/K)-C((i-1)/K),
/// which sums to 1 when C fixes the endpoints.
FilterParams from_tone_curves(int pieces, double (*r)(double), double (*g)(double),
                              double (*b)(double)) {
    FilterParams p;
    p.pieces = pieces;
    p.theta = Tensor({3, static_cast<size_t>(pieces)}, 0.0);
    double (*curves[3])(double) = {r, g, b};
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < pieces; ++i) {
            const double lo = static_cast<double>(i) / pieces;
            const double hi = static_cast<double>(i + 1) / pieces;
            p.theta[static_cast<size_t>(c) * pieces + i] = curves[c](hi) - curves[c](lo);
        }
    return project_simplex(p);
}

double curve_identity(double x) { return x; }
double curve_lift(double x) { return std::pow(x, 0.75); }
double curve_drop(double x) { return std::pow(x, 1.35); }
double curve_scurve(double x) { return x * x * (3.0 - 2.0 * x); }
double curve_flat(double x) { return 0.25 * x + 0.75 * curve_scurve(x); }

} // namespace

FilterParams style_preset(const std::string& name, int pieces) {
    if (pieces < 1) throw ValueError("K must be >= 1");
    if (name == "warm") return from_tone_curves(pieces, curve_lift, curve_identity, curve_drop);
    if (name == "cool") return from_tone_curves(pieces, curve_drop, curve_identity, curve_lift);
    if (name == "contrast")
        return from_tone_curves(pieces, curve_scurve, curve_scurve, curve_scurve);
    if (name == "fade") return from_tone_curves(pieces, curve_flat, curve_flat, curve_flat);
    throw ValueError("unknown style preset: " + name);
}

std::vector<std::string> style_preset_names() {
    return {"warm", "cool", "contrast", "fade"};
}

} // namespace chromaforge

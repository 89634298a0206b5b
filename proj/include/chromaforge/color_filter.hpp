#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "chromaforge/image.hpp"
#include "chromaforge/image_io.hpp"
#include "chromaforge/tensor.hpp"

namespace chromaforge {

/// Piecewise-linear color curve bank: one K-piece curve per RGB channel.
/// theta[c][i] is the slope of piece i scaled so that a simplex-constrained
/// row (nonnegative, summing to 1) maps [0,1] onto [0,1] monotonically.
/// The curve value at x is the sum of the slopes of the completed pieces
/// plus the fractional progress through the active one.
struct FilterParams {
    int pieces = 0;  // K
    Tensor theta;    // [3][K]

    FilterParams() : theta(std::vector<size_t>{3, 1}, 0.0) {}
    FilterParams(int k, Tensor t);

    /// Uniform slopes 1/K: the exact identity map.
    static FilterParams identity(int pieces);

    /// Shape [3][K], K >= 1, all entries finite. Throws ShapeError/ValueError.
    void validate() const;

    bool same_shape(const FilterParams& o) const {
        return pieces == o.pieces && theta.same_shape(o.theta);
    }
};

/// 1-based index of the piece containing x; x = 1 belongs to piece K.
/// Throws ValueError outside [0,1].
int piece_index(int pieces, double x);

/// Apply the curves to every pixel; output clamped to [0,1].
Image apply_filter(const FilterParams& params, const Image& img);

/// d(loss)/d(theta) given upstream = d(loss)/d(filtered pixel), same shape
/// as img. Returns a [3][K] tensor.
Tensor filter_grad_theta(const FilterParams& params, const Image& img,
                         const Image& upstream);

/// d(loss)/d(input pixel): upstream scaled by the active piece's slope K*theta.
Image filter_grad_input(const FilterParams& params, const Image& img,
                        const Image& upstream);

/// Per-region variant: region r of the mask gets params[r]. All entries must
/// share K and the mask must match the image shape.
Image apply_filter_masked(const std::vector<FilterParams>& params,
                          const RegionMask& mask, const Image& img);

std::vector<Tensor> filter_grad_theta_masked(const std::vector<FilterParams>& params,
                                             const RegionMask& mask, const Image& img,
                                             const Image& upstream);

/// Project each channel row onto the probability simplex: clamp negatives to
/// zero, renormalize to sum 1; an all-zero row resets to uniform 1/K.
FilterParams project_simplex(const FilterParams& params);

/// Sum over channels and pieces of (theta - 1/K)^2.
double deviation_penalty(const FilterParams& params);

/// Gradient of deviation_penalty: 2*(theta - 1/K).
Tensor deviation_penalty_grad(const FilterParams& params);

nlohmann::json filter_to_json(const FilterParams& params);
FilterParams filter_from_json(const nlohmann::json& j);
void save_filter(const FilterParams& params, const std::string& path);
FilterParams load_filter(const std::string& path);

/// Built-in stylistic tone curves usable as style-attack targets:
/// "warm", "cool", "contrast", "fade". Throws ValueError for other names.
FilterParams style_preset(const std::string& name, int pieces);
std::vector<std::string> style_preset_names();

} // namespace chromaforge

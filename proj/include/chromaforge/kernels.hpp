#pragma once

#include <cstddef>

namespace chromaforge::kernels {

// OpenMP-parallel inner loops shared by the filter, the classifier and the
// metrics. Every kernel is deterministic for any thread count: parallel
// loops run over output elements whose accumulations stay serial, and
// scalar reductions use fixed-size blocks merged in block order. Layouts
// are channels-last: activations [H][W][C], conv weights [Cout][3][3][Cin],
// dense weights [Out][In].

/// 1-based piece index of x in [0,1] for a K-piece curve; x = 1 maps to K,
/// integral K*x enters the upper piece.
inline int piece_of(double x, int pieces) {
    if (x >= 1.0) return pieces;
    return static_cast<int>(static_cast<double>(pieces) * x) + 1;
}

/// Map pixels through per-channel piecewise-linear curves. `region` assigns
/// each pixel one of `num_filters` curves (null means curve 0 everywhere).
/// thetas is [num_filters][channels][K], prefixes [num_filters][channels][K+1]
/// with prefixes[..][k] = sum of the first k slopes. Output is clamped to
/// [0,1] to absorb the <=1e-9 slack allowed on the slope sums.
void apply_curves(const double* in, double* out, size_t num_pixels, int channels,
                  int pieces, const double* thetas, const double* prefixes,
                  const int* region, int num_filters);

/// Accumulate d(loss)/d(theta) for every curve given upstream = d(loss)/d(out)
/// per pixel value. d_thetas [num_filters][channels][K] is zeroed first.
void curve_grad_theta(const double* in, const double* upstream, size_t num_pixels,
                      int channels, int pieces, const int* region, int num_filters,
                      double* d_thetas);

/// d(loss)/d(in) for the curve map: upstream times the local slope K*theta_k.
void curve_grad_input(const double* in, const double* upstream, size_t num_pixels,
                      int channels, int pieces, const double* thetas,
                      const int* region, int num_filters, double* d_in);

/// 3x3 same-padding convolution, stride 1.
void conv3x3_forward(const double* in, size_t h, size_t w, int cin,
                     const double* weights, const double* bias, int cout,
                     double* out);

void conv3x3_backward_input(const double* d_out, size_t h, size_t w, int cout,
                            const double* weights, int cin, double* d_in);

/// Accumulates into d_weights/d_bias (callers zero them before a batch).
void conv3x3_backward_weights(const double* in, const double* d_out, size_t h,
                              size_t w, int cin, int cout, double* d_weights,
                              double* d_bias);

void dense_forward(const double* in, size_t n_in, const double* weights,
                   const double* bias, size_t n_out, double* out);

void dense_backward_input(const double* d_out, size_t n_out, const double* weights,
                          size_t n_in, double* d_in);

/// Accumulates into d_weights/d_bias.
void dense_backward_weights(const double* in, const double* d_out, size_t n_in,
                            size_t n_out, double* d_weights, double* d_bias);

void relu_forward(const double* in, size_t n, double* out);

/// Subgradient 0 at exactly 0.
void relu_backward(const double* in, const double* d_out, size_t n, double* d_in);

/// 2x2 max pooling, stride 2; h and w must be even. argmax records the flat
/// input index of the winning element, first maximum in (dy,dx) scan order.
void maxpool2x2_forward(const double* in, size_t h, size_t w, int c, double* out,
                        int* argmax);

void maxpool2x2_backward(const double* d_out, size_t out_h, size_t out_w, int c,
                         const int* argmax, size_t h, size_t w, double* d_in);

/// Deterministic blocked reduction: per-block partial sums combined in block
/// order, so the result is independent of the thread count.
double block_sum(const double* v, size_t n);

/// Sum of (a[i]-b[i])^2 with the same blocked scheme.
double block_sum_sq_diff(const double* a, const double* b, size_t n);

} // namespace chromaforge::kernels

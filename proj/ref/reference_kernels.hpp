#pragma once

#include <cstddef>
#include <vector>

namespace chromaforge::ref {

// Plain serial re-implementations of the hot kernels, written as literal
// definitions (threshold scans, straight nested loops, no blocking and no
// pragmas). Tests compare the OpenMP kernels against these; the benchmark
// target measures the gap.

/// One K-piece curve at x: scan pieces for the containing interval, sum the
/// slopes below it, add the fractional part of the active piece.
double curve_value(const double* theta, int pieces, double x);

/// Per-channel curve map over interleaved pixels, theta is [channels][K].
void apply_curves(const double* in, double* out, size_t num_pixels, int channels,
                  int pieces, const double* theta);

void conv3x3_forward(const double* in, size_t h, size_t w, int cin,
                     const double* weights, const double* bias, int cout,
                     double* out);

void dense_forward(const double* in, size_t n_in, const double* weights,
                   const double* bias, size_t n_out, double* out);

void relu(const double* in, size_t n, double* out);

void maxpool2x2(const double* in, size_t h, size_t w, int c, double* out);

double sum(const double* v, size_t n);

double sum_sq_diff(const double* a, const double* b, size_t n);

std::vector<double> softmax(const std::vector<double>& z);

} // namespace chromaforge::ref

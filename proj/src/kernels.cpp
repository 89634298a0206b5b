#include "chromaforge/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace chromaforge::kernels {

namespace {
constexpr size_t kBlock = 4096;        // reduction block, fixed for determinism
constexpr size_t kParMin = 2048;       // skip OpenMP below this many outputs
} // namespace

void apply_curves(const double* in, double* out, size_t num_pixels, int channels,
                  int pieces, const double* thetas, const double* prefixes,
                  const int* region, int num_filters) {
    const size_t n = num_pixels * static_cast<size_t>(channels);
    const size_t theta_stride = static_cast<size_t>(channels) * pieces;
    const size_t prefix_stride = static_cast<size_t>(channels) * (pieces + 1);
#pragma omp parallel for schedule(static) if (n >= kParMin)
    for (size_t p = 0; p < num_pixels; ++p) {
        const int f = region ? region[p] : 0;
        const double* th = thetas + static_cast<size_t>(f) * theta_stride;
        const double* pre = prefixes + static_cast<size_t>(f) * prefix_stride;
        for (int c = 0; c < channels; ++c) {
            const double x = in[p * channels + c];
            const int k = piece_of(x, pieces);
            const double within = static_cast<double>(pieces) * x
                                  - static_cast<double>(k - 1);
            double y = pre[c * (pieces + 1) + (k - 1)]
                       + within * th[c * pieces + (k - 1)];
            out[p * channels + c] = std::clamp(y, 0.0, 1.0);
        }
    }
    (void)num_filters;
}

void curve_grad_theta(const double* in, const double* upstream, size_t num_pixels,
                      int channels, int pieces, const int* region, int num_filters,
                      double* d_thetas) {
    const size_t params = static_cast<size_t>(num_filters) * channels * pieces;
    std::fill(d_thetas, d_thetas + params, 0.0);
    const size_t nblocks = (num_pixels + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks * params, 0.0);
#pragma omp parallel for schedule(static) if (num_pixels >= kParMin)
    for (size_t b = 0; b < nblocks; ++b) {
        double* acc = partial.data() + b * params;
        const size_t lo = b * kBlock;
        const size_t hi = std::min(lo + kBlock, num_pixels);
        for (size_t p = lo; p < hi; ++p) {
            const int f = region ? region[p] : 0;
            double* facc = acc + static_cast<size_t>(f) * channels * pieces;
            for (int c = 0; c < channels; ++c) {
                const double g = upstream[p * channels + c];
                if (g == 0.0) continue;
                const double x = in[p * channels + c];
                const int k = piece_of(x, pieces);
                double* row = facc + static_cast<size_t>(c) * pieces;
                // dF/dtheta_i = 1 below the active piece, the fractional
                // position within it, 0 above.
                for (int i = 0; i < k - 1; ++i) row[i] += g;
                const double within = static_cast<double>(pieces) * x
                                      - static_cast<double>(k - 1);
                row[k - 1] += g * within;
            }
        }
    }
    for (size_t b = 0; b < nblocks; ++b) {
        const double* acc = partial.data() + b * params;
        for (size_t i = 0; i < params; ++i) d_thetas[i] += acc[i];
    }
}

void curve_grad_input(const double* in, const double* upstream, size_t num_pixels,
                      int channels, int pieces, const double* thetas,
                      const int* region, int num_filters, double* d_in) {
    const size_t theta_stride = static_cast<size_t>(channels) * pieces;
#pragma omp parallel for schedule(static) if (num_pixels >= kParMin)
    for (size_t p = 0; p < num_pixels; ++p) {
        const int f = region ? region[p] : 0;
        const double* th = thetas + static_cast<size_t>(f) * theta_stride;
        for (int c = 0; c < channels; ++c) {
            const double x = in[p * channels + c];
            const int k = piece_of(x, pieces);
            d_in[p * channels + c] = upstream[p * channels + c]
                                     * static_cast<double>(pieces)
                                     * th[c * pieces + (k - 1)];
        }
    }
    (void)num_filters;
}

void conv3x3_forward(const double* in, size_t h, size_t w, int cin,
                     const double* weights, const double* bias, int cout,
                     double* out) {
    const auto H = static_cast<ptrdiff_t>(h);
    const auto W = static_cast<ptrdiff_t>(w);
    // Repacked as [tap][cin][cout] the out-channel loop runs over contiguous
    // memory and vectorizes even for tiny cin. Each (tap, co) pair still sums
    // its products in ci order into its own partial, so values match the
    // straight [co][tap][cin] walk bit for bit.
    std::vector<double> packed(static_cast<size_t>(9) * cin * cout);
    for (int co = 0; co < cout; ++co)
        for (int tap = 0; tap < 9; ++tap)
            for (int ci = 0; ci < cin; ++ci)
                packed[(static_cast<size_t>(tap) * cin + ci) * cout + co] =
                    weights[(static_cast<size_t>(co) * 9 + tap) * cin + ci];
#pragma omp parallel if (h * w >= kParMin / 8)
    {
        std::vector<double> tmp(static_cast<size_t>(cout));
        double* t = tmp.data();
#pragma omp for schedule(static)
        for (ptrdiff_t y = 0; y < H; ++y) {
            for (ptrdiff_t x = 0; x < W; ++x) {
                double* o = out + (y * W + x) * cout;
                for (int co = 0; co < cout; ++co) o[co] = bias[co];
                for (int dy = -1; dy <= 1; ++dy) {
                    const ptrdiff_t yy = y + dy;
                    if (yy < 0 || yy >= H) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        const ptrdiff_t xx = x + dx;
                        if (xx < 0 || xx >= W) continue;
                        const double* src = in + (yy * W + xx) * cin;
                        const double* wt =
                            packed.data() +
                            (static_cast<size_t>(dy + 1) * 3 + (dx + 1)) * cin *
                                static_cast<size_t>(cout);
                        for (int co = 0; co < cout; ++co) t[co] = 0.0;
                        for (int ci = 0; ci < cin; ++ci) {
                            const double s = src[ci];
                            const double* wrow = wt + static_cast<size_t>(ci) * cout;
#pragma omp simd
                            for (int co = 0; co < cout; ++co) t[co] += s * wrow[co];
                        }
                        for (int co = 0; co < cout; ++co) o[co] += t[co];
                    }
                }
            }
        }
    }
}

void conv3x3_backward_input(const double* d_out, size_t h, size_t w, int cout,
                            const double* weights, int cin, double* d_in) {
    const auto H = static_cast<ptrdiff_t>(h);
    const auto W = static_cast<ptrdiff_t>(w);
    // d_in[y][x][ci] gathers from outputs at y+dy, x+dx through the weight
    // tap that reads (y, x) from there, i.e. tap (-dy, -dx).
#pragma omp parallel for schedule(static) if (h * w >= kParMin / 8)
    for (ptrdiff_t y = 0; y < H; ++y) {
        for (ptrdiff_t x = 0; x < W; ++x) {
            double* d = d_in + (y * W + x) * cin;
            for (int ci = 0; ci < cin; ++ci) d[ci] = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                const ptrdiff_t yy = y + dy;
                if (yy < 0 || yy >= H) continue;
                for (int dx = -1; dx <= 1; ++dx) {
                    const ptrdiff_t xx = x + dx;
                    if (xx < 0 || xx >= W) continue;
                    const double* g = d_out + (yy * W + xx) * cout;
                    const size_t tap = (static_cast<size_t>(1 - dy) * 3 + (1 - dx))
                                       * cin;
                    for (int co = 0; co < cout; ++co) {
                        const double gv = g[co];
                        if (gv == 0.0) continue;
                        const double* wrow = weights
                                             + (static_cast<size_t>(co) * 9) * cin
                                             + tap;
                        for (int ci = 0; ci < cin; ++ci) d[ci] += gv * wrow[ci];
                    }
                }
            }
        }
    }
}

void conv3x3_backward_weights(const double* in, const double* d_out, size_t h,
                              size_t w, int cin, int cout, double* d_weights,
                              double* d_bias) {
    const auto H = static_cast<ptrdiff_t>(h);
    const auto W = static_cast<ptrdiff_t>(w);
    // Parallel over weight rows (co, dy, dx): each owns its accumulators.
    const int taps = cout * 9;
#pragma omp parallel for schedule(static) if (taps >= 32)
    for (int t = 0; t < taps; ++t) {
        const int co = t / 9;
        const int dy = t % 9 / 3 - 1;
        const int dx = t % 3 - 1;
        double* wrow = d_weights + static_cast<size_t>(t) * cin;
        for (ptrdiff_t y = 0; y < H; ++y) {
            const ptrdiff_t yy = y + dy;
            if (yy < 0 || yy >= H) continue;
            for (ptrdiff_t x = 0; x < W; ++x) {
                const ptrdiff_t xx = x + dx;
                if (xx < 0 || xx >= W) continue;
                const double g = d_out[(y * W + x) * cout + co];
                if (g == 0.0) continue;
                const double* src = in + (yy * W + xx) * cin;
                for (int ci = 0; ci < cin; ++ci) wrow[ci] += g * src[ci];
            }
        }
    }
#pragma omp parallel for schedule(static) if (cout >= 16)
    for (int co = 0; co < cout; ++co) {
        double s = 0.0;
        for (ptrdiff_t p = 0; p < H * W; ++p) s += d_out[p * cout + co];
        d_bias[co] += s;
    }
}

void dense_forward(const double* in, size_t n_in, const double* weights,
                   const double* bias, size_t n_out, double* out) {
#pragma omp parallel for schedule(static) if (n_out * n_in >= kParMin * 8)
    for (size_t o = 0; o < n_out; ++o) {
        const double* wrow = weights + o * n_in;
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (size_t i = 0; i < n_in; ++i) s += wrow[i] * in[i];
        out[o] = s + bias[o];
    }
}

void dense_backward_input(const double* d_out, size_t n_out, const double* weights,
                          size_t n_in, double* d_in) {
#pragma omp parallel for schedule(static) if (n_out * n_in >= kParMin * 8)
    for (size_t i = 0; i < n_in; ++i) {
        double s = 0.0;
        for (size_t o = 0; o < n_out; ++o) s += d_out[o] * weights[o * n_in + i];
        d_in[i] = s;
    }
}

void dense_backward_weights(const double* in, const double* d_out, size_t n_in,
                            size_t n_out, double* d_weights, double* d_bias) {
#pragma omp parallel for schedule(static) if (n_out * n_in >= kParMin * 8)
    for (size_t o = 0; o < n_out; ++o) {
        const double g = d_out[o];
        double* wrow = d_weights + o * n_in;
        if (g != 0.0) {
#pragma omp simd
            for (size_t i = 0; i < n_in; ++i) wrow[i] += g * in[i];
        }
        d_bias[o] += g;
    }
}

void relu_forward(const double* in, size_t n, double* out) {
#pragma omp parallel for schedule(static) if (n >= kParMin * 8)
    for (size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* in, const double* d_out, size_t n, double* d_in) {
#pragma omp parallel for schedule(static) if (n >= kParMin * 8)
    for (size_t i = 0; i < n; ++i) d_in[i] = in[i] > 0.0 ? d_out[i] : 0.0;
}

void maxpool2x2_forward(const double* in, size_t h, size_t w, int c, double* out,
                        int* argmax) {
    const size_t oh = h / 2;
    const size_t ow = w / 2;
#pragma omp parallel for schedule(static) if (oh * ow >= kParMin / 4)
    for (size_t oy = 0; oy < oh; ++oy) {
        for (size_t ox = 0; ox < ow; ++ox) {
            for (int ch = 0; ch < c; ++ch) {
                int best = static_cast<int>(((2 * oy) * w + 2 * ox) * c + ch);
                double bv = in[best];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const int idx = static_cast<int>(
                            ((2 * oy + dy) * w + 2 * ox + dx) * c + ch);
                        if (in[idx] > bv) { // strict: first max wins ties
                            bv = in[idx];
                            best = idx;
                        }
                    }
                }
                out[(oy * ow + ox) * c + ch] = bv;
                argmax[(oy * ow + ox) * c + ch] = best;
            }
        }
    }
}

void maxpool2x2_backward(const double* d_out, size_t out_h, size_t out_w, int c,
                         const int* argmax, size_t h, size_t w, double* d_in) {
    std::fill(d_in, d_in + h * w * static_cast<size_t>(c), 0.0);
    const size_t n = out_h * out_w * static_cast<size_t>(c);
    // Windows are disjoint, so scattering in parallel never races.
#pragma omp parallel for schedule(static) if (n >= kParMin)
    for (size_t i = 0; i < n; ++i) d_in[argmax[i]] += d_out[i];
}

double block_sum(const double* v, size_t n) {
    const size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static) if (n >= kParMin * 4)
    for (size_t b = 0; b < nblocks; ++b) {
        const size_t lo = b * kBlock;
        const size_t hi = std::min(lo + kBlock, n);
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += v[i];
        partial[b] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

double block_sum_sq_diff(const double* a, const double* b, size_t n) {
    const size_t nblocks = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static) if (n >= kParMin * 4)
    for (size_t blk = 0; blk < nblocks; ++blk) {
        const size_t lo = blk * kBlock;
        const size_t hi = std::min(lo + kBlock, n);
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) {
            const double d = a[i] - b[i];
            s += d * d;
        }
        partial[blk] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

} // namespace chromaforge::kernels

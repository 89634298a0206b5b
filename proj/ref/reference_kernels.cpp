#include "reference_kernels.hpp"

#include <algorithm>
#include <cmath>

namespace chromaforge::ref {

double curve_value(const double* theta, int pieces, double x) {
    int k = pieces;
    for (int j = 1; j < pieces; ++j) {
        if (x < static_cast<double>(j) / static_cast<double>(pieces)) {
            k = j;
            break;
        }
    }
    double below = 0.0;
    for (int i = 0; i < k - 1; ++i) below += theta[i];
    const double within = static_cast<double>(pieces) * x
                          - static_cast<double>(k - 1);
    return below + within * theta[k - 1];
}

void apply_curves(const double* in, double* out, size_t num_pixels, int channels,
                  int pieces, const double* theta) {
    for (size_t p = 0; p < num_pixels; ++p) {
        for (int c = 0; c < channels; ++c) {
            const double y = curve_value(theta + static_cast<size_t>(c) * pieces,
                                         pieces, in[p * channels + c]);
            out[p * channels + c] = std::clamp(y, 0.0, 1.0);
        }
    }
}

void conv3x3_forward(const double* in, size_t h, size_t w, int cin,
                     const double* weights, const double* bias, int cout,
                     double* out) {
    for (size_t y = 0; y < h; ++y) {
        for (size_t x = 0; x < w; ++x) {
            for (int co = 0; co < cout; ++co) {
                double s = bias[co];
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const ptrdiff_t yy = static_cast<ptrdiff_t>(y) + dy;
                        const ptrdiff_t xx = static_cast<ptrdiff_t>(x) + dx;
                        if (yy < 0 || yy >= static_cast<ptrdiff_t>(h)) continue;
                        if (xx < 0 || xx >= static_cast<ptrdiff_t>(w)) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                            const double wv =
                                weights[((static_cast<size_t>(co) * 3 + (dy + 1)) * 3
                                         + (dx + 1))
                                            * cin
                                        + ci];
                            s += wv * in[(yy * w + xx) * cin + ci];
                        }
                    }
                }
                out[(y * w + x) * cout + co] = s;
            }
        }
    }
}

void dense_forward(const double* in, size_t n_in, const double* weights,
                   const double* bias, size_t n_out, double* out) {
    for (size_t o = 0; o < n_out; ++o) {
        double s = bias[o];
        for (size_t i = 0; i < n_in; ++i) s += weights[o * n_in + i] * in[i];
        out[o] = s;
    }
}

void relu(const double* in, size_t n, double* out) {
    for (size_t i = 0; i < n; ++i) out[i] = std::max(in[i], 0.0);
}

void maxpool2x2(const double* in, size_t h, size_t w, int c, double* out) {
    for (size_t oy = 0; oy < h / 2; ++oy) {
        for (size_t ox = 0; ox < w / 2; ++ox) {
            for (int ch = 0; ch < c; ++ch) {
                double m = in[((2 * oy) * w + 2 * ox) * c + ch];
                m = std::max(m, in[((2 * oy) * w + 2 * ox + 1) * c + ch]);
                m = std::max(m, in[((2 * oy + 1) * w + 2 * ox) * c + ch]);
                m = std::max(m, in[((2 * oy + 1) * w + 2 * ox + 1) * c + ch]);
                out[(oy * (w / 2) + ox) * c + ch] = m;
            }
        }
    }
}

double sum(const double* v, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += v[i];
    return s;
}

double sum_sq_diff(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

std::vector<double> softmax(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double denom = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        denom += p[i];
    }
    for (double& v : p) v /= denom;
    return p;
}

} // namespace chromaforge::ref

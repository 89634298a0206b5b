#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "chromaforge/errors.hpp"

namespace chromaforge {

/// RGB raster with doubles in [0,1], interleaved row-major [H][W][3].
struct Image {
    size_t height = 0;
    size_t width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(size_t h, size_t w, double fill = 0.0)
        : height(h), width(w), pixels(h * w * 3, fill) {}
    Image(size_t h, size_t w, std::vector<double> px)
        : height(h), width(w), pixels(std::move(px)) {
        if (pixels.size() != h * w * 3)
            throw ShapeError("image buffer size does not match dimensions");
    }

    size_t num_pixels() const { return height * width; }
    size_t size() const { return pixels.size(); }

    double& at(size_t y, size_t x, int c) { return pixels[(y * width + x) * 3 + c]; }
    double at(size_t y, size_t x, int c) const {
        return pixels[(y * width + x) * 3 + c];
    }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width;
    }
};

struct LabeledImage {
    Image image;
    int label = 0;
};

} // namespace chromaforge

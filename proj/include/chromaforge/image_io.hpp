#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chromaforge/image.hpp"

namespace chromaforge {

/// Load an 8-bit image (PPM P6 or PNG; format sniffed from magic bytes).
/// Palette, grayscale and alpha PNGs are expanded/stripped to RGB. Values
/// are scaled to [0,1] as v/255.
Image load_image(const std::string& path);

/// Save as PPM P6 or PNG depending on the file extension (.ppm / .png).
/// Doubles are clamped to [0,1] and quantized by rounding half away from zero.
void save_image(const Image& img, const std::string& path);

/// Region mask: pixels sharing a gray level belong to one region. Accepts
/// PGM P5 or PNG (red channel used if the PNG is color).
struct RegionMask {
    size_t height = 0;
    size_t width = 0;
    std::vector<int> region;     // [h*w], values in [0, num_regions)
    int num_regions = 0;
    std::vector<uint8_t> levels; // gray level of each region, ascending
};

RegionMask load_mask(const std::string& path);

/// Quantization helper shared with the metrics path: round half away from zero.
uint8_t quantize8(double v);

} // namespace chromaforge

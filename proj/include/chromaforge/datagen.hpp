#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "chromaforge/image.hpp"

namespace chromaforge {

/// Color-separated synthetic classes: class i owns a narrow hue band centered
/// at i/m, the bands never overlap (enforced gap >= hue_margin), so hue alone
/// decides the label and tone curves that shift hue can cross the boundary.
/// Each image is a smooth hue field (bilinear control grid) rendered in HSV
/// with per-image saturation/value and per-pixel RGB texture noise.
struct SyntheticSpec {
    int num_classes = 6;
    int per_class = 200;
    size_t height = 32;
    size_t width = 32;
    double hue_width = 0.09;  // width of each class hue band
    double hue_margin = 0.05; // minimum gap between neighboring bands
    int grid = 4;             // control grid cells per axis for the hue field
    double saturation_lo = 0.55;
    double saturation_hi = 0.85;
    double value_lo = 0.55;
    double value_hi = 0.90;
    double texture_noise = 0.03; // uniform per-channel amplitude
    uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    std::vector<LabeledImage> train;
    std::vector<LabeledImage> holdout;
    int num_classes = 0;
};

/// Deterministic in the seed; every fifth image of each class (index % 5 == 4)
/// goes to the holdout split.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// HSV (h in [0,1) wrapping, s/v in [0,1]) to RGB in [0,1].
std::array<double, 3> hsv_to_rgb(double h, double s, double v);

/// Write <dir>/{train,holdout}/img_NNNNN.ppm plus labels.csv per split.
void save_dataset(const Dataset& ds, const std::string& dir);

/// Read a directory produced by save_dataset.
Dataset load_dataset(const std::string& dir);

/// Read one split directory (images + labels.csv), e.g. <dataset>/holdout.
std::vector<LabeledImage> load_split_dir(const std::string& dir);

/// Binary batch files: records of 1 label byte + height*width bytes per
/// channel, channel-planar (the CIFAR layout for 32x32). Throws IoError on a
/// size that is not a whole number of records.
std::vector<LabeledImage> load_binary_batch(const std::string& path, size_t height,
                                            size_t width);

} // namespace chromaforge

#include "chromaforge/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "chromaforge/errors.hpp"
#include "chromaforge/image_io.hpp"
#include "chromaforge/rng.hpp"

namespace fs = std::filesystem;

namespace chromaforge {

void SyntheticSpec::validate() const {
    if (num_classes < 2) throw ValueError("need at least 2 classes");
    if (per_class < 1) throw ValueError("per_class must be positive");
    if (height < 2 || width < 2) throw ValueError("images must be at least 2x2");
    if (grid < 1) throw ValueError("grid must be >= 1");
    if (hue_width < 0.0 || hue_margin < 0.0)
        throw ValueError("hue band parameters must be nonnegative");
    const double gap = 1.0 / num_classes - hue_width;
    if (gap < hue_margin)
        throw ValueError("hue bands overlap: 1/m - width = " + std::to_string(gap)
                         + " < margin " + std::to_string(hue_margin));
    if (saturation_lo < 0 || saturation_hi > 1 || saturation_lo > saturation_hi)
        throw ValueError("saturation band invalid");
    if (value_lo < 0 || value_hi > 1 || value_lo > value_hi)
        throw ValueError("value band invalid");
    if (texture_noise < 0) throw ValueError("texture_noise must be nonnegative");
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    h -= std::floor(h); // wrap to [0,1)
    const double h6 = h * 6.0;
    const int sector = std::min(5, static_cast<int>(h6));
    const double f = h6 - sector;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
    }
}

namespace {

double wrap01(double x) { return x - std::floor(x); }

Image render_image(const SyntheticSpec& spec, int cls, Rng& rng) {
    const int g = spec.grid;
    std::vector<double> control((g + 1) * (g + 1));
    for (double& c : control) c = rng.uniform();
    const double sat = rng.uniform(spec.saturation_lo, spec.saturation_hi);
    const double val = rng.uniform(spec.value_lo, spec.value_hi);
    const double center = static_cast<double>(cls) / spec.num_classes;

    Image img(spec.height, spec.width);
    for (size_t y = 0; y < spec.height; ++y) {
        const double gy = static_cast<double>(y) / (spec.height - 1) * g;
        const int iy = std::min(static_cast<int>(gy), g - 1);
        const double fy = gy - iy;
        for (size_t x = 0; x < spec.width; ++x) {
            const double gx = static_cast<double>(x) / (spec.width - 1) * g;
            const int ix = std::min(static_cast<int>(gx), g - 1);
            const double fx = gx - ix;
            const double c00 = control[iy * (g + 1) + ix];
            const double c01 = control[iy * (g + 1) + ix + 1];
            const double c10 = control[(iy + 1) * (g + 1) + ix];
            const double c11 = control[(iy + 1) * (g + 1) + ix + 1];
            const double t = (1 - fy) * ((1 - fx) * c00 + fx * c01)
                             + fy * ((1 - fx) * c10 + fx * c11);
            const double hue = wrap01(center + (t - 0.5) * spec.hue_width);
            auto rgb = hsv_to_rgb(hue, sat, val);
            for (int c = 0; c < 3; ++c) {
                double vch = rgb[c];
                if (spec.texture_noise > 0)
                    vch += rng.uniform(-spec.texture_noise, spec.texture_noise);
                img.at(y, x, c) = std::clamp(vch, 0.0, 1.0);
            }
        }
    }
    return img;
}

} // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.num_classes = spec.num_classes;
    for (int cls = 0; cls < spec.num_classes; ++cls) {
        for (int i = 0; i < spec.per_class; ++i) {
            const uint64_t ordinal =
                static_cast<uint64_t>(cls) * spec.per_class + static_cast<uint64_t>(i);
            Rng rng(derive_seed(spec.seed, ordinal));
            LabeledImage ex{render_image(spec, cls, rng), cls};
            if (i % 5 == 4)
                ds.holdout.push_back(std::move(ex));
            else
                ds.train.push_back(std::move(ex));
        }
    }
    return ds;
}

namespace {

void save_split(const std::vector<LabeledImage>& split, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream csv(dir / "labels.csv");
    if (!csv) throw IoError(IoErrorKind::Unwritable, "cannot write labels.csv");
    csv << "filename,label\n";
    for (size_t i = 0; i < split.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "img_%05zu.ppm", i);
        save_image(split[i].image, (dir / name).string());
        csv << name << "," << split[i].label << "\n";
    }
}

std::vector<LabeledImage> load_split(const fs::path& dir) {
    std::ifstream csv(dir / "labels.csv");
    if (!csv)
        throw IoError(IoErrorKind::TruncatedFile,
                      "missing labels.csv in " + dir.string());
    std::vector<LabeledImage> split;
    std::string line;
    std::getline(csv, line); // header
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw IoError(IoErrorKind::CorruptFile, "bad labels.csv row: " + line);
        LabeledImage ex;
        ex.image = load_image((dir / line.substr(0, comma)).string());
        ex.label = std::stoi(line.substr(comma + 1));
        split.push_back(std::move(ex));
    }
    return split;
}

} // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    save_split(ds.train, fs::path(dir) / "train");
    save_split(ds.holdout, fs::path(dir) / "holdout");
}

std::vector<LabeledImage> load_split_dir(const std::string& dir) {
    return load_split(fs::path(dir));
}

Dataset load_dataset(const std::string& dir) {
    Dataset ds;
    ds.train = load_split(fs::path(dir) / "train");
    ds.holdout = load_split(fs::path(dir) / "holdout");
    int max_label = 0;
    for (const auto& ex : ds.train) max_label = std::max(max_label, ex.label);
    for (const auto& ex : ds.holdout) max_label = std::max(max_label, ex.label);
    ds.num_classes = max_label + 1;
    return ds;
}

std::vector<LabeledImage> load_binary_batch(const std::string& path, size_t height,
                                            size_t width) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    const auto bytes = static_cast<size_t>(in.tellg());
    const size_t plane = height * width;
    const size_t record = 1 + 3 * plane;
    if (bytes == 0 || bytes % record != 0)
        throw IoError(IoErrorKind::TruncatedFile,
                      path + " is not a whole number of " + std::to_string(record)
                          + "-byte records");
    in.seekg(0);
    std::vector<LabeledImage> out(bytes / record);
    std::vector<uint8_t> buf(record);
    for (auto& ex : out) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(record));
        if (!in) throw IoError(IoErrorKind::TruncatedFile, "short read: " + path);
        ex.label = buf[0];
        ex.image = Image(height, width);
        for (size_t p = 0; p < plane; ++p)
            for (int c = 0; c < 3; ++c)
                ex.image.pixels[p * 3 + c] =
                    static_cast<double>(buf[1 + c * plane + p]) / 255.0;
    }
    return out;
}

} // namespace chromaforge

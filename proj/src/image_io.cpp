#include "chromaforge/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>

namespace chromaforge {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Skips whitespace and '#' comments between PNM header tokens.
int pnm_token(std::istream& in) {
    for (;;) {
        int ch = in.get();
        if (ch == EOF) throw IoError(IoErrorKind::TruncatedFile, "pnm header ends early");
        if (ch == '#') {
            while (ch != '\n' && ch != EOF) ch = in.get();
            continue;
        }
        if (std::isspace(ch)) continue;
        int value = 0;
        bool any = false;
        while (ch != EOF && std::isdigit(ch)) {
            value = value * 10 + (ch - '0');
            any = true;
            ch = in.get();
        }
        if (!any) throw IoError(IoErrorKind::CorruptFile, "pnm header is not numeric");
        return value;
    }
}

std::vector<uint8_t> read_pnm_payload(std::istream& in, size_t h, size_t w,
                                      int channels) {
    const size_t n = h * w * static_cast<size_t>(channels);
    std::vector<uint8_t> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
        throw IoError(IoErrorKind::TruncatedFile, "pnm pixel data ends early");
    return bytes;
}

struct RawRgb {
    size_t height = 0;
    size_t width = 0;
    std::vector<uint8_t> bytes; // interleaved, 3 per pixel
};

RawRgb read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    char magic[2];
    in.read(magic, 2);
    const int w = pnm_token(in);
    const int h = pnm_token(in);
    const int maxval = pnm_token(in);
    if (maxval != 255)
        throw IoError(IoErrorKind::UnsupportedFormat,
                      "only 8-bit pnm supported, maxval=" + std::to_string(maxval));
    if (w <= 0 || h <= 0)
        throw IoError(IoErrorKind::CorruptFile, "pnm has empty dimensions");
    RawRgb raw;
    raw.height = static_cast<size_t>(h);
    raw.width = static_cast<size_t>(w);
    raw.bytes = read_pnm_payload(in, raw.height, raw.width, 3);
    return raw;
}

std::vector<uint8_t> read_pgm_gray(const std::string& path, size_t& h, size_t& w) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    char magic[2];
    in.read(magic, 2);
    const int wi = pnm_token(in);
    const int hi = pnm_token(in);
    const int maxval = pnm_token(in);
    if (maxval != 255)
        throw IoError(IoErrorKind::UnsupportedFormat, "only 8-bit pgm supported");
    h = static_cast<size_t>(hi);
    w = static_cast<size_t>(wi);
    return read_pnm_payload(in, h, w, 1);
}

// libpng reports fatal errors by longjmp; capture the message and rethrow
// as IoError once control is back in C++ land.
void png_error_fn(png_structp png, png_const_charp msg) {
    auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
    if (slot) *slot = msg;
    png_longjmp(png, 1);
}

void png_warn_fn(png_structp, png_const_charp) {}

RawRgb read_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    std::string errmsg;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                             png_error_fn, png_warn_fn);
    png_infop info = png_create_info_struct(png);
    RawRgb raw;
    std::vector<png_bytep> rows;
    bool bad_channels = false;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(IoErrorKind::CorruptFile, "png: " + errmsg);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    png_set_expand(png); // palette/low-depth -> 8-bit
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    if (png_get_channels(png, info) != 3) {
        bad_channels = true;
    } else {
        raw.height = png_get_image_height(png, info);
        raw.width = png_get_image_width(png, info);
        raw.bytes.resize(raw.height * raw.width * 3);
        rows.resize(raw.height);
        for (size_t y = 0; y < raw.height; ++y)
            rows[y] = raw.bytes.data() + y * raw.width * 3;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (bad_channels)
        throw IoError(IoErrorKind::ChannelCount, "png did not expand to rgb");
    return raw;
}

enum class Sniffed { Ppm, Pgm, Png, Unknown };

Sniffed sniff(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoErrorKind::TruncatedFile, "cannot open " + path);
    uint8_t head[8] = {0};
    in.read(reinterpret_cast<char*>(head), 8);
    static const uint8_t png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (std::memcmp(head, png_magic, 8) == 0) return Sniffed::Png;
    if (head[0] == 'P' && head[1] == '6') return Sniffed::Ppm;
    if (head[0] == 'P' && head[1] == '5') return Sniffed::Pgm;
    return Sniffed::Unknown;
}

Image to_image(const RawRgb& raw) {
    Image img(raw.height, raw.width);
    for (size_t i = 0; i < raw.bytes.size(); ++i)
        img.pixels[i] = static_cast<double>(raw.bytes[i]) / 255.0;
    return img;
}

void write_png(const Image& img, const std::string& path,
               const std::vector<uint8_t>& bytes) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError(IoErrorKind::Unwritable, "cannot write " + path);
    std::string errmsg;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                              png_error_fn, png_warn_fn);
    png_infop info = png_create_info_struct(png);
    std::vector<png_bytep> rows(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(IoErrorKind::Unwritable, "png: " + errmsg);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (size_t y = 0; y < img.height; ++y)
        rows[y] = const_cast<uint8_t*>(bytes.data()) + y * img.width * 3;
    png_write_image(png, rows.data());
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

} // namespace

uint8_t quantize8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<uint8_t>(std::lround(c * 255.0));
}

Image load_image(const std::string& path) {
    switch (sniff(path)) {
    case Sniffed::Ppm: return to_image(read_ppm(path));
    case Sniffed::Png: return to_image(read_png(path));
    case Sniffed::Pgm:
        throw IoError(IoErrorKind::ChannelCount,
                      "grayscale pgm is a mask format, not an image: " + path);
    default:
        throw IoError(IoErrorKind::UnsupportedFormat,
                      "unrecognized image format: " + path);
    }
}

void save_image(const Image& img, const std::string& path) {
    if (img.height == 0 || img.width == 0)
        throw ValueError("cannot save an empty image");
    std::vector<uint8_t> bytes(img.size());
    for (size_t i = 0; i < img.size(); ++i) bytes[i] = quantize8(img.pixels[i]);

    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".png") {
        write_png(img, path, bytes);
        return;
    }
    if (ext == ".ppm") {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError(IoErrorKind::Unwritable, "cannot write " + path);
        out << "P6\n" << img.width << " " << img.height << "\n255\n";
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError(IoErrorKind::Unwritable, "short write to " + path);
        return;
    }
    throw IoError(IoErrorKind::UnsupportedFormat,
                  "unsupported output extension: " + path);
}

RegionMask load_mask(const std::string& path) {
    size_t h = 0;
    size_t w = 0;
    std::vector<uint8_t> gray;
    switch (sniff(path)) {
    case Sniffed::Pgm: gray = read_pgm_gray(path, h, w); break;
    case Sniffed::Png: {
        const RawRgb raw = read_png(path);
        h = raw.height;
        w = raw.width;
        gray.resize(h * w);
        for (size_t p = 0; p < h * w; ++p) gray[p] = raw.bytes[p * 3];
        break;
    }
    case Sniffed::Ppm: {
        const RawRgb raw = read_ppm(path);
        h = raw.height;
        w = raw.width;
        gray.resize(h * w);
        for (size_t p = 0; p < h * w; ++p) gray[p] = raw.bytes[p * 3];
        break;
    }
    default:
        throw IoError(IoErrorKind::UnsupportedFormat,
                      "unrecognized mask format: " + path);
    }

    RegionMask mask;
    mask.height = h;
    mask.width = w;
    std::map<uint8_t, int> index; // ordered, so regions sort by gray level
    for (uint8_t g : gray) index.emplace(g, 0);
    for (auto& [level, idx] : index) {
        idx = mask.num_regions++;
        mask.levels.push_back(level);
    }
    mask.region.resize(h * w);
    for (size_t p = 0; p < h * w; ++p) mask.region[p] = index.at(gray[p]);
    return mask;
}

} // namespace chromaforge

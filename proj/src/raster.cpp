#include "ip2cp/raster.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

#include "ip2cp/error.hpp"
#include "ip2cp/kernels.hpp"

namespace ip2cp {

RasterImage::RasterImage(std::size_t height, std::size_t width, float fill)
    : height_(height), width_(width), data_(height * width * kChannels, fill) {}

RasterImage::RasterImage(std::size_t height, std::size_t width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_ * kChannels)
        throw ShapeError("image data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(height_) + "x" + std::to_string(width_) + "x3");
    for (float v : data_)
        if (!(v >= 0.0f && v <= 1.0f)) throw DataError("image value outside [0,1]: " + std::to_string(v));
}

RasterImage RasterImage::crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const {
    if (row + h > height_ || col + w > width_) throw ShapeError("crop window outside image");
    RasterImage out(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        const float* src = data_.data() + ((row + r) * width_ + col) * kChannels;
        std::copy(src, src + w * kChannels, out.data_.data() + r * w * kChannels);
    }
    return out;
}

LabelMask::LabelMask(std::size_t height, std::size_t width, DamageLabel fill)
    : height_(height), width_(width), labels_(height * width, fill) {}

LabelMask LabelMask::crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const {
    if (row + h > height_ || col + w > width_) throw ShapeError("crop window outside mask");
    LabelMask out(h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out.at(r, c) = at(row + r, col + c);
    return out;
}

std::string_view to_string(DamageLabel l) {
    switch (l) {
        case DamageLabel::Background: return "background";
        case DamageLabel::NoDamage: return "no-damage";
        case DamageLabel::Minor: return "minor-damage";
        case DamageLabel::Major: return "major-damage";
        case DamageLabel::Destroyed: return "destroyed";
    }
    return "?";
}

std::string_view to_string(BinaryLabel l) {
    return l == BinaryLabel::NoDamage ? "no_damage" : "with_damage";
}

BinaryLabel parse_binary_label(std::string_view s) {
    if (s == "no_damage") return BinaryLabel::NoDamage;
    if (s == "with_damage") return BinaryLabel::WithDamage;
    throw DataError("unknown label '" + std::string(s) + "' (expected no_damage|with_damage)");
}

std::optional<BinaryLabel> binarize_label(DamageLabel label) {
    switch (label) {
        case DamageLabel::Background: return std::nullopt;
        case DamageLabel::NoDamage: return BinaryLabel::NoDamage;
        case DamageLabel::Minor:
        case DamageLabel::Major:
        case DamageLabel::Destroyed: return BinaryLabel::WithDamage;
    }
    return std::nullopt;
}

std::uint8_t to_byte(float v) {
    const double scaled = std::floor(static_cast<double>(v) * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngPixels {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bytes;
};

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    if (buf) *buf = msg;
    png_longjmp(png, 1);
}
void png_warning_fn(png_structp, png_const_charp) {}

// Reads an 8-bit PNG of exactly the requested color type.
PngPixels read_png(const std::filesystem::path& path, int want_color_type, const char* kind) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError(path.string() + ": not a PNG file");

    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }

    PngPixels out;
    std::string shape_problem;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": " + (err.empty() ? "corrupt PNG" : err));
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_uint_32 w = 0, h = 0;
    int depth = 0, color = 0;
    png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
    if (w == 0 || h == 0) {
        shape_problem = "zero-sized image";
    } else if (depth != 8) {
        shape_problem = "expected 8-bit samples, found " + std::to_string(depth) + "-bit";
    } else if (color != want_color_type) {
        shape_problem = std::string("expected ") + kind + " PNG";
    }
    if (!shape_problem.empty()) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": " + shape_problem);
    }

    const std::size_t channels = png_get_channels(png, info);
    out.height = h;
    out.width = w;
    out.bytes.resize(static_cast<std::size_t>(h) * w * channels);
    rows.resize(h);
    for (std::size_t r = 0; r < h; ++r) rows[r] = out.bytes.data() + r * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png(const std::filesystem::path& path, std::size_t height, std::size_t width, int color_type,
               std::size_t channels, const std::uint8_t* bytes) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());

    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    std::vector<png_bytep> rows(height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path.string() + ": " + (err.empty() ? "PNG write failed" : err));
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t r = 0; r < height; ++r)
        rows[r] = const_cast<png_bytep>(bytes + r * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(fp.get()) != 0) throw IoError("cannot write " + path.string());
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
    PngPixels px = read_png(path, PNG_COLOR_TYPE_RGB, "8-bit RGB");
    std::vector<float> data(px.bytes.size());
    simd::kernels().bytes_to_unit(px.bytes.size(), px.bytes.data(), data.data());
    RasterImage img(px.height, px.width);
    std::copy(data.begin(), data.end(), img.data().begin());
    return img;
}

void save_image(const RasterImage& img, const std::filesystem::path& path) {
    if (img.empty()) throw ShapeError("cannot save an empty image");
    std::vector<std::uint8_t> bytes(img.data().size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), to_byte);
    write_png(path, img.height(), img.width(), PNG_COLOR_TYPE_RGB, 3, bytes.data());
}

LabelMask load_mask(const std::filesystem::path& path) {
    PngPixels px = read_png(path, PNG_COLOR_TYPE_GRAY, "8-bit grayscale");
    LabelMask mask(px.height, px.width);
    for (std::size_t r = 0; r < px.height; ++r) {
        for (std::size_t c = 0; c < px.width; ++c) {
            const std::uint8_t b = px.bytes[r * px.width + c];
            if (b >= kDamageLabelCount)
                throw FormatError(path.string() + ": malformed mask value " + std::to_string(b) + " at (row " +
                                  std::to_string(r) + ", col " + std::to_string(c) + ")");
            mask.at(r, c) = static_cast<DamageLabel>(b);
        }
    }
    return mask;
}

void save_mask(const LabelMask& mask, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes(mask.labels().size());
    std::transform(mask.labels().begin(), mask.labels().end(), bytes.begin(),
                   [](DamageLabel l) { return static_cast<std::uint8_t>(l); });
    save_gray(mask.height(), mask.width(), bytes, path);
}

void save_gray(std::size_t height, std::size_t width, std::span<const std::uint8_t> bytes,
               const std::filesystem::path& path) {
    if (height == 0 || width == 0) throw ShapeError("cannot save an empty mask");
    if (bytes.size() != height * width) throw ShapeError("gray image data length mismatch");
    write_png(path, height, width, PNG_COLOR_TYPE_GRAY, 1, bytes.data());
}

}  // namespace ip2cp

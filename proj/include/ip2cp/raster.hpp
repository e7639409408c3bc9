#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ip2cp {

// H x W x 3 image, row-major with channels innermost, values in [0, 1].
class RasterImage {
public:
    static constexpr std::size_t kChannels = 3;

    RasterImage() = default;
    RasterImage(std::size_t height, std::size_t width, float fill = 0.0f);
    // Throws ShapeError on a size mismatch and DataError on values outside [0, 1].
    RasterImage(std::size_t height, std::size_t width, std::vector<float> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t pixel_count() const { return height_ * width_; }
    bool empty() const { return data_.empty(); }

    float& at(std::size_t row, std::size_t col, std::size_t ch) {
        return data_[(row * width_ + col) * kChannels + ch];
    }
    float at(std::size_t row, std::size_t col, std::size_t ch) const {
        return data_[(row * width_ + col) * kChannels + ch];
    }
    std::span<float> pixel(std::size_t row, std::size_t col) {
        return {data_.data() + (row * width_ + col) * kChannels, kChannels};
    }
    std::span<const float> pixel(std::size_t row, std::size_t col) const {
        return {data_.data() + (row * width_ + col) * kChannels, kChannels};
    }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    // Copy of the window [row, row+h) x [col, col+w); throws ShapeError if out of bounds.
    RasterImage crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const;

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> data_;
};

enum class DamageLabel : std::uint8_t {
    Background = 0,
    NoDamage = 1,
    Minor = 2,
    Major = 3,
    Destroyed = 4,
};
inline constexpr int kDamageLabelCount = 5;

enum class BinaryLabel : std::uint8_t { NoDamage = 0, WithDamage = 1 };

std::string_view to_string(DamageLabel l);
std::string_view to_string(BinaryLabel l);  // "no_damage" | "with_damage"
// Throws DataError for anything other than "no_damage"/"with_damage".
BinaryLabel parse_binary_label(std::string_view s);

// Background -> none; NoDamage -> NoDamage; Minor/Major/Destroyed -> WithDamage.
std::optional<BinaryLabel> binarize_label(DamageLabel label);

class LabelMask {
public:
    LabelMask() = default;
    LabelMask(std::size_t height, std::size_t width, DamageLabel fill = DamageLabel::Background);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }

    DamageLabel& at(std::size_t row, std::size_t col) { return labels_[row * width_ + col]; }
    DamageLabel at(std::size_t row, std::size_t col) const { return labels_[row * width_ + col]; }

    std::span<DamageLabel> labels() { return labels_; }
    std::span<const DamageLabel> labels() const { return labels_; }

    LabelMask crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const;

    bool operator==(const LabelMask&) const = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<DamageLabel> labels_;
};

// 8-bit RGB PNG <-> unit-interval image. Values u map to u/255 on load and
// round-half-up of v*255 on save.
RasterImage load_image(const std::filesystem::path& path);
void save_image(const RasterImage& img, const std::filesystem::path& path);

// 8-bit grayscale PNG with codes 0..4.
LabelMask load_mask(const std::filesystem::path& path);
void save_mask(const LabelMask& mask, const std::filesystem::path& path);

// Single-channel 8-bit PNG with arbitrary byte values (used for OOI flag maps).
void save_gray(std::size_t height, std::size_t width, std::span<const std::uint8_t> bytes,
               const std::filesystem::path& path);

std::uint8_t to_byte(float v);

}  // namespace ip2cp

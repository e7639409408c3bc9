#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ip2cp/raster.hpp"

namespace ip2cp {

// Ranges narrower than this normalise to all zeros.
inline constexpr double kDegenerateRange = 1e-9;

// Affine min-max map of `values` onto [0, 1]; all zeros when max - min < kDegenerateRange.
// Throws DataError on empty input.
std::vector<float> norm_minmax(std::span<const float> values);
// In-place variant used by the encoder.
void norm_minmax_inplace(std::span<float> values);

enum class NormScope {
    Joint,       // one min/max over every OOI channel value of the image
    PerChannel,  // independent min/max per colour channel
};

struct Ip2cpImage {
    RasterImage image;
    std::vector<std::uint8_t> ooi;  // 1 where mask != Background, row-major

    bool is_ooi(std::size_t row, std::size_t col) const { return ooi[row * image.width() + col] != 0; }
};

// Background pixels copy `post`; OOI pixels hold the normalised post - pre
// difference. Throws ShapeError on a dimension mismatch.
Ip2cpImage ip2cp_encode(const RasterImage& pre, const RasterImage& post, const LabelMask& mask,
                        NormScope scope = NormScope::Joint);

// OOI flag map as a grayscale PNG (Background = 0, OOI = 1).
void save_ooi_map(const Ip2cpImage& z, const std::filesystem::path& path);

}  // namespace ip2cp

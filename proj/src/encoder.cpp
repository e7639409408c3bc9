#include "ip2cp/encoder.hpp"

#include "ip2cp/error.hpp"
#include "ip2cp/kernels.hpp"

namespace ip2cp {

void norm_minmax_inplace(std::span<float> values) {
    if (values.empty()) throw DataError("norm_minmax: empty input");
    const auto& k = simd::kernels();
    float lo = 0.0f, hi = 0.0f;
    k.minmax(values.size(), values.data(), &lo, &hi);
    const float range = hi - lo;
    if (!(static_cast<double>(range) >= kDegenerateRange)) {
        std::fill(values.begin(), values.end(), 0.0f);
        return;
    }
    k.normalize(values.size(), values.data(), lo, range);
}

std::vector<float> norm_minmax(std::span<const float> values) {
    std::vector<float> out(values.begin(), values.end());
    norm_minmax_inplace(out);
    return out;
}

Ip2cpImage ip2cp_encode(const RasterImage& pre, const RasterImage& post, const LabelMask& mask,
                        NormScope scope) {
    if (pre.height() != post.height() || pre.width() != post.width() || mask.height() != post.height() ||
        mask.width() != post.width())
        throw ShapeError("ip2cp_encode: pre " + std::to_string(pre.height()) + "x" + std::to_string(pre.width()) +
                         ", post " + std::to_string(post.height()) + "x" + std::to_string(post.width()) +
                         ", mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                         " do not share dimensions");

    const std::size_t n = post.pixel_count();
    constexpr std::size_t C = RasterImage::kChannels;
    Ip2cpImage z{post, std::vector<std::uint8_t>(n, 0)};

    std::vector<float> diff(n * C);
    simd::kernels().sub(n * C, post.data().data(), pre.data().data(), diff.data());

    // Gather OOI differences (pixel order, channels innermost).
    std::vector<std::size_t> ooi_pixels;
    const auto labels = mask.labels();
    for (std::size_t p = 0; p < n; ++p) {
        if (labels[p] != DamageLabel::Background) {
            z.ooi[p] = 1;
            ooi_pixels.push_back(p);
        }
    }
    if (ooi_pixels.empty()) return z;

    auto out = z.image.data();
    if (scope == NormScope::Joint) {
        std::vector<float> field(ooi_pixels.size() * C);
        for (std::size_t i = 0; i < ooi_pixels.size(); ++i)
            for (std::size_t c = 0; c < C; ++c) field[i * C + c] = diff[ooi_pixels[i] * C + c];
        norm_minmax_inplace(field);
        for (std::size_t i = 0; i < ooi_pixels.size(); ++i)
            for (std::size_t c = 0; c < C; ++c) out[ooi_pixels[i] * C + c] = field[i * C + c];
    } else {
        std::vector<float> field(ooi_pixels.size());
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t i = 0; i < ooi_pixels.size(); ++i) field[i] = diff[ooi_pixels[i] * C + c];
            norm_minmax_inplace(field);
            for (std::size_t i = 0; i < ooi_pixels.size(); ++i) out[ooi_pixels[i] * C + c] = field[i];
        }
    }
    return z;
}

void save_ooi_map(const Ip2cpImage& z, const std::filesystem::path& path) {
    save_gray(z.image.height(), z.image.width(), z.ooi, path);
}

}  // namespace ip2cp

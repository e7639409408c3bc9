#include <algorithm>
#include <cmath>
#include <string>

#include "ip2cp/error.hpp"
#include "ip2cp/patches.hpp"

namespace ip2cp {
namespace {

constexpr std::size_t C = RasterImage::kChannels;

template <class F>
RasterImage remap(const RasterImage& in, F&& dst_to_src) {
    const std::size_t h = in.height(), w = in.width();
    RasterImage out(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const auto [sr, sc] = dst_to_src(r, c);
            const auto src = in.pixel(sr, sc);
            std::copy(src.begin(), src.end(), out.pixel(r, c).begin());
        }
    }
    return out;
}

// Bilinear sample at fractional (y, x) with coordinates clamped to the image.
template <class F>
RasterImage resample(const RasterImage& in, F&& dst_to_src) {
    const std::size_t h = in.height(), w = in.width();
    RasterImage out(h, w);
    const double ymax = static_cast<double>(h - 1), xmax = static_cast<double>(w - 1);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            auto [y, x] = dst_to_src(static_cast<double>(r), static_cast<double>(c));
            y = std::clamp(y, 0.0, ymax);
            x = std::clamp(x, 0.0, xmax);
            const auto y0 = static_cast<std::size_t>(std::floor(y));
            const auto x0 = static_cast<std::size_t>(std::floor(x));
            const std::size_t y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
            const double fy = y - static_cast<double>(y0), fx = x - static_cast<double>(x0);
            for (std::size_t ch = 0; ch < C; ++ch) {
                const double top = in.at(y0, x0, ch) * (1.0 - fx) + in.at(y0, x1, ch) * fx;
                const double bot = in.at(y1, x0, ch) * (1.0 - fx) + in.at(y1, x1, ch) * fx;
                const double v = top * (1.0 - fy) + bot * fy;
                out.at(r, c, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("augment: " + what);
}

}  // namespace

RasterImage augment_pixels(const RasterImage& pixels, const Augmentation& spec, Rng& rng) {
    const std::size_t h = pixels.height(), w = pixels.width();
    const double cy = (static_cast<double>(h) - 1.0) / 2.0, cx = (static_cast<double>(w) - 1.0) / 2.0;

    if (const auto* rot = std::get_if<Rotate90>(&spec)) {
        require(rot->k >= 0 && rot->k <= 3, "rotate90 k must be in 0..3, got " + std::to_string(rot->k));
        require(h == w || rot->k % 2 == 0, "quarter turns need a square patch");
        RasterImage out = pixels;
        for (int i = 0; i < rot->k; ++i) {
            const std::size_t n = out.height();
            // Counter-clockwise: dst(r, c) = src(c, n-1-r).
            out = remap(out, [n](std::size_t r, std::size_t c) { return std::pair{c, n - 1 - r}; });
        }
        return out;
    }
    if (const auto* flip = std::get_if<Flip>(&spec)) {
        if (flip->axis == Flip::Axis::Horizontal)
            return remap(pixels, [w](std::size_t r, std::size_t c) { return std::pair{r, w - 1 - c}; });
        return remap(pixels, [h](std::size_t r, std::size_t c) { return std::pair{h - 1 - r, c}; });
    }
    if (const auto* shear = std::get_if<Shear>(&spec)) {
        require(shear->factor >= -0.2 && shear->factor <= 0.2, "shear factor must be in [-0.2, 0.2]");
        const double f = shear->factor;
        return resample(pixels, [=](double r, double c) { return std::pair{r, c + f * (r - cy)}; });
    }
    if (const auto* scale = std::get_if<Scale>(&spec)) {
        require(scale->factor >= 0.8 && scale->factor <= 1.25, "scale factor must be in [0.8, 1.25]");
        const double s = scale->factor;
        return resample(pixels,
                        [=](double r, double c) { return std::pair{cy + (r - cy) / s, cx + (c - cx) / s}; });
    }
    const auto& jitter = std::get<ColorJitter>(spec);
    require(jitter.max_delta >= 0.0 && jitter.max_delta <= 0.1, "color jitter max delta must be in [0, 0.1]");
    float offset[C];
    for (auto& o : offset) o = static_cast<float>(rng.uniform(-jitter.max_delta, jitter.max_delta));
    RasterImage out = pixels;
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::clamp(d[i] + offset[i % C], 0.0f, 1.0f);
    return out;
}

LabeledPatch augment(const LabeledPatch& patch, const Augmentation& spec, Rng& rng) {
    LabeledPatch out = patch;
    out.pixels = augment_pixels(patch.pixels, spec, rng);
    return out;
}

}  // namespace ip2cp

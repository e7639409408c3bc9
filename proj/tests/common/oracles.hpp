#pragma once

// Independent reference implementations used by unit and acceptance tests.
// They favour obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "ip2cp/ingest.hpp"
#include "ip2cp/raster.hpp"

namespace oracle {

using ip2cp::DamageLabel;
using ip2cp::LabelMask;
using ip2cp::RasterImage;

// 0 = background, 1 = no damage, 2 = with damage.
inline int binary_class(DamageLabel l) {
    switch (l) {
    case DamageLabel::Background: return 0;
    case DamageLabel::NoDamage: return 1;
    default: return 2;
    }
}

// Per-pixel Eqs. (2)-(4): Background copies post; OOI holds (d - min) / (max - min)
// of d = post - pre over all OOI channel values, zeros if the range is < 1e-9.
inline RasterImage encode(const RasterImage& pre, const RasterImage& post, const LabelMask& mask) {
    const std::size_t h = pre.height(), w = pre.width();
    float lo = 0, hi = 0;
    bool first = true;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            if (mask.at(r, c) != DamageLabel::Background)
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const float d = post.at(r, c, ch) - pre.at(r, c, ch);
                    if (first || d < lo) lo = d;
                    if (first || d > hi) hi = d;
                    first = false;
                }
    RasterImage z(h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch) {
                if (mask.at(r, c) == DamageLabel::Background) {
                    z.at(r, c, ch) = post.at(r, c, ch);
                    continue;
                }
                const float d = post.at(r, c, ch) - pre.at(r, c, ch);
                const float range = hi - lo;
                z.at(r, c, ch) = static_cast<double>(range) < 1e-9 ? 0.0f : (d - lo) / range;
            }
    return z;
}

// Largest 4-connected component by iterated minimum-label propagation.
inline std::size_t largest_component(const LabelMask& m, int cls) {
    const std::size_t h = m.height(), w = m.width();
    std::vector<long> lab(h * w, -1);
    for (std::size_t i = 0; i < h * w; ++i)
        if (binary_class(m.labels()[i]) == cls) lab[i] = static_cast<long>(i);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                long& v = lab[r * w + c];
                if (v < 0) continue;
                const long nb[4] = {r > 0 ? lab[(r - 1) * w + c] : -1, r + 1 < h ? lab[(r + 1) * w + c] : -1,
                                    c > 0 ? lab[r * w + c - 1] : -1, c + 1 < w ? lab[r * w + c + 1] : -1};
                for (long n : nb)
                    if (n >= 0 && n < v) {
                        v = n;
                        changed = true;
                    }
            }
    }
    std::map<long, std::size_t> sizes;
    for (long v : lab)
        if (v >= 0) ++sizes[v];
    std::size_t best = 0;
    for (const auto& [k, s] : sizes) best = std::max(best, s);
    return best;
}

// Label of one window: 1 = no damage, 2 = with damage, none = discarded.
inline std::optional<int> window_label(const LabelMask& window, double delta1, double delta2) {
    const double area = static_cast<double>(window.height() * window.width());
    const double f_nd = static_cast<double>(largest_component(window, 1)) / area;
    const double f_wd = static_cast<double>(largest_component(window, 2)) / area;
    const bool nd = f_nd > delta1, wd = f_wd > delta2;
    if (nd && wd) return f_wd >= f_nd ? 2 : 1;
    if (nd) return 1;
    if (wd) return 2;
    return std::nullopt;
}

struct MinedWindow {
    std::size_t row, col;
    int label;  // 1 or 2
    RasterImage pixels;
};

// Every window at every stride multiple, labelled by the rule above, loser
// class pixels replaced by post values.
inline std::vector<MinedWindow> mine(const RasterImage& z, const LabelMask& mask, const RasterImage& post,
                                     std::size_t ps, std::size_t stride, double delta1, double delta2) {
    std::vector<MinedWindow> out;
    for (std::size_t r = 0; r + ps <= z.height(); r += stride)
        for (std::size_t c = 0; c + ps <= z.width(); c += stride) {
            LabelMask win(ps, ps);
            for (std::size_t i = 0; i < ps; ++i)
                for (std::size_t j = 0; j < ps; ++j) win.at(i, j) = mask.at(r + i, c + j);
            const auto label = window_label(win, delta1, delta2);
            if (!label) continue;
            MinedWindow m{r, c, *label, RasterImage(ps, ps)};
            for (std::size_t i = 0; i < ps; ++i)
                for (std::size_t j = 0; j < ps; ++j) {
                    const int cls = binary_class(win.at(i, j));
                    const bool erase = cls != 0 && cls != *label;
                    for (std::size_t ch = 0; ch < 3; ++ch)
                        m.pixels.at(i, j, ch) = erase ? post.at(r + i, c + j, ch) : z.at(r + i, c + j, ch);
                }
            out.push_back(std::move(m));
        }
    return out;
}

// Classic PNPOLY crossing test.
inline bool inside(const std::vector<ip2cp::Point2>& ring, double x, double y) {
    bool in = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = ring[i];
        const auto& b = ring[j];
        if ((a.y > y) != (b.y > y) && x < (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x) in = !in;
    }
    return in;
}

inline LabelMask rasterize(const std::vector<ip2cp::LabeledPolygon>& polys, std::size_t h, std::size_t w) {
    LabelMask m(h, w);
    for (const auto& p : polys)
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                if (inside(p.ring, c + 0.5, r + 0.5)) m.at(r, c) = p.subtype;
    return m;
}

}  // namespace oracle

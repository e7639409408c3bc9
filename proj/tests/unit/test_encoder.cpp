#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ip2cp/encoder.hpp"
#include "ip2cp/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ip2cp;


TEST_CASE("norm_minmax examples") {
    const std::vector<float> a{-0.5f, 0.0f, 0.5f};
    CHECK(norm_minmax(a) == std::vector<float>{0.0f, 0.5f, 1.0f});
    const std::vector<float> b{0.3f, 0.3f, 0.3f};
    CHECK(norm_minmax(b) == std::vector<float>{0.0f, 0.0f, 0.0f});
    const std::vector<float> c{0.0f, 1.0f};
    CHECK(norm_minmax(c) == std::vector<float>{0.0f, 1.0f});
    CHECK_THROWS_AS(norm_minmax(std::vector<float>{}), DataError);
}

TEST_CASE("norm_minmax is affine and order preserving") {
    Rng rng(2);
    for (int t = 0; t < 200; ++t) {
        std::vector<float> v(1 + rng.below(40));
        for (float& x : v) x = static_cast<float>(rng.uniform(-1, 1));
        const auto out = norm_minmax(v);
        if (v.size() < 2) continue;
        CHECK(*std::min_element(out.begin(), out.end()) == 0.0f);
        CHECK(*std::max_element(out.begin(), out.end()) == 1.0f);
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j)
                if (v[i] < v[j]) CHECK(out[i] <= out[j]);
    }
}

TEST_CASE("encode: all background copies post") {
    Rng rng(1);
    const auto pre = testutil::random_image(4, 5, rng), post = testutil::random_image(4, 5, rng);
    const auto z = ip2cp_encode(pre, post, LabelMask(4, 5));
    CHECK(z.image == post);
    CHECK(std::all_of(z.ooi.begin(), z.ooi.end(), [](auto b) { return b == 0; }));
}

TEST_CASE("encode: constant difference is degenerate") {
    Rng rng(1);
    const auto img = testutil::random_image(3, 3, rng);
    const auto z = ip2cp_encode(img, img, LabelMask(3, 3, DamageLabel::Minor));
    for (float v : z.image.data()) CHECK(v == 0.0f);
}

TEST_CASE("encode: 1x2 worked example") {
    RasterImage pre(1, 2, std::vector<float>{0.0f, 0.0f, 0.0f, 0.2f, 0.2f, 0.2f});
    RasterImage post(1, 2, std::vector<float>{0.5f, 0.5f, 0.5f, 0.8f, 0.4f, 0.2f});
    LabelMask mask(1, 2);
    mask.at(0, 1) = DamageLabel::NoDamage;
    const auto z = ip2cp_encode(pre, post, mask);
    for (int ch = 0; ch < 3; ++ch) CHECK(z.image.at(0, 0, ch) == 0.5f);
    CHECK(z.image.at(0, 1, 0) == 1.0f);
    CHECK(z.image.at(0, 1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(z.image.at(0, 1, 2) == 0.0f);
    CHECK_FALSE(z.is_ooi(0, 0));
    CHECK(z.is_ooi(0, 1));
}

TEST_CASE("encode: dimension mismatch") {
    CHECK_THROWS_AS(ip2cp_encode(RasterImage(2, 2), RasterImage(2, 3), LabelMask(2, 2)), ShapeError);
    CHECK_THROWS_AS(ip2cp_encode(RasterImage(2, 2), RasterImage(2, 2), LabelMask(3, 2)), ShapeError);
}

TEST_CASE("encode properties on random triples") {
    Rng rng(42);
    for (int t = 0; t < 300; ++t) {
        const std::size_t h = 1 + rng.below(12), w = 1 + rng.below(12);
        const auto pre = testutil::random_image(h, w, rng), post = testutil::random_image(h, w, rng);
        const auto mask = testutil::random_mask(h, w, rng, rng.uniform());
        const auto z = ip2cp_encode(pre, post, mask);
        float lo = 2, hi = -2;
        bool any_ooi = false;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) {
                const bool ooi = mask.at(r, c) != DamageLabel::Background;
                CHECK(z.is_ooi(r, c) == ooi);
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const float v = z.image.at(r, c, ch);
                    CHECK((v >= 0.0f && v <= 1.0f));
                    if (!ooi) {
                        CHECK(std::bit_cast<std::uint32_t>(v) == std::bit_cast<std::uint32_t>(post.at(r, c, ch)));
                    } else {
                        any_ooi = true;
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                }
            }
        if (any_ooi) {
            CHECK(lo == 0.0f);
            CHECK((hi == 1.0f || hi == 0.0f));
        }
        CHECK(z.image == oracle::encode(pre, post, mask));

        // Changing pre off the OOI changes nothing.
        RasterImage pre2 = pre;
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                if (mask.at(r, c) == DamageLabel::Background)
                    for (std::size_t ch = 0; ch < 3; ++ch) pre2.at(r, c, ch) = static_cast<float>(rng.uniform());
        CHECK(ip2cp_encode(pre2, post, mask).image == z.image);
    }
}

TEST_CASE("encode is monotone in the difference") {
    Rng rng(9);
    for (int t = 0; t < 100; ++t) {
        const auto pre = testutil::random_image(3, 3, rng), post = testutil::random_image(3, 3, rng);
        const LabelMask mask(3, 3, DamageLabel::Major);
        const auto z = ip2cp_encode(pre, post, mask);
        for (std::size_t i = 0; i < 27; ++i)
            for (std::size_t j = 0; j < 27; ++j) {
                const float di = post.data()[i] - pre.data()[i], dj = post.data()[j] - pre.data()[j];
                if (di < dj) CHECK(z.image.data()[i] <= z.image.data()[j]);
            }
    }
}

TEST_CASE("per-channel scope normalises each channel separately") {
    Rng rng(4);
    const auto pre = testutil::random_image(6, 6, rng), post = testutil::random_image(6, 6, rng);
    const LabelMask mask(6, 6, DamageLabel::NoDamage);
    const auto z = ip2cp_encode(pre, post, mask, NormScope::PerChannel);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        float lo = 2, hi = -2;
        for (std::size_t p = 0; p < 36; ++p) {
            lo = std::min(lo, z.image.data()[p * 3 + ch]);
            hi = std::max(hi, z.image.data()[p * 3 + ch]);
        }
        CHECK(lo == 0.0f);
        CHECK(hi == 1.0f);
    }
}

TEST_CASE("OOI map file") {
    testutil::TempDir dir("enc");
    LabelMask mask(2, 2);
    mask.at(1, 0) = DamageLabel::Destroyed;
    const auto z = ip2cp_encode(RasterImage(2, 2), RasterImage(2, 2), mask);
    save_ooi_map(z, dir / "ooi.png");
    const LabelMask back = load_mask(dir / "ooi.png");
    CHECK(back.at(1, 0) == DamageLabel::NoDamage);  // code 1
    CHECK(back.at(0, 0) == DamageLabel::Background);
}

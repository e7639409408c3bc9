#include <algorithm>
#include <set>

#include "doctest.h"
#include "ip2cp/encoder.hpp"
#include "ip2cp/error.hpp"
#include "ip2cp/patches.hpp"
#include "ip2cp/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ip2cp;

namespace {

void fill(LabelMask& m, std::size_t r0, std::size_t c0, std::size_t h, std::size_t w, DamageLabel l) {
    for (std::size_t r = r0; r < r0 + h; ++r)
        for (std::size_t c = c0; c < c0 + w; ++c) m.at(r, c) = l;
}

MinerConfig cfg_for(std::size_t ps) {
    MinerConfig cfg;
    cfg.patch_size = ps;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(MinerConfig{}.validate());
    CHECK_THROWS_AS((MinerConfig{64, 0.04, 0.12, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((MinerConfig{64, 0.12, 0.0, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((MinerConfig{64, 1.0, 0.04, 0}.validate()), ConfigError);
    CHECK_THROWS_AS((MinerConfig{4, 0.12, 0.04, 0}.validate()), ConfigError);
    CHECK_NOTHROW((MinerConfig{64, 0.1, 0.1, 0}.validate()));
    CHECK(MinerConfig{}.effective_stride() == 64);
    CHECK((MinerConfig{64, 0.12, 0.04, 16}.effective_stride()) == 16);
}

TEST_CASE("largest component is 4-connected") {
    LabelMask m(5, 5);
    m.at(0, 0) = DamageLabel::NoDamage;
    m.at(1, 1) = DamageLabel::NoDamage;  // diagonal only
    fill(m, 3, 0, 2, 3, DamageLabel::NoDamage);
    m.at(0, 4) = DamageLabel::Minor;
    m.at(1, 4) = DamageLabel::Destroyed;  // different damage grades join
    CHECK(largest_component(m, BinaryLabel::NoDamage) == 6);
    CHECK(largest_component(m, BinaryLabel::WithDamage) == 2);
    CHECK(largest_component(LabelMask(3, 3), BinaryLabel::NoDamage) == 0);
}

TEST_CASE("largest component agrees with the propagation oracle") {
    Rng rng(21);
    for (int t = 0; t < 300; ++t) {
        const auto m = testutil::random_mask(1 + rng.below(20), 1 + rng.below(20), rng, rng.uniform());
        CHECK(largest_component(m, BinaryLabel::NoDamage) == oracle::largest_component(m, 1));
        CHECK(largest_component(m, BinaryLabel::WithDamage) == oracle::largest_component(m, 2));
    }
}

TEST_CASE("threshold examples") {
    const MinerConfig cfg;
    SUBCASE("13% no damage") {
        LabelMask w(64, 64);
        fill(w, 0, 0, 16, 34, DamageLabel::NoDamage);  // 544 / 4096 = 0.1328
        CHECK(assign_patch_label(w, cfg) == BinaryLabel::NoDamage);
    }
    SUBCASE("5% damage beside 2% intact") {
        LabelMask w(64, 64);
        fill(w, 0, 0, 10, 21, DamageLabel::Major);     // 210 -> 0.0513
        fill(w, 30, 30, 9, 9, DamageLabel::NoDamage);  // 81 -> 0.0198
        CHECK(assign_patch_label(w, cfg) == BinaryLabel::WithDamage);
    }
    SUBCASE("all background") { CHECK_FALSE(assign_patch_label(LabelMask(64, 64), cfg).has_value()); }
    SUBCASE("strict inequality") {
        MinerConfig c = cfg_for(10);
        c.delta1 = 0.2;
        c.delta2 = 0.1;
        LabelMask w(10, 10);
        fill(w, 0, 0, 2, 10, DamageLabel::NoDamage);  // exactly 0.2
        CHECK_FALSE(assign_patch_label(w, c).has_value());
        w.at(5, 5) = DamageLabel::NoDamage;  // separate pixel: largest stays 20
        CHECK_FALSE(assign_patch_label(w, c).has_value());
        w.at(2, 0) = DamageLabel::NoDamage;  // attached: 21
        CHECK(assign_patch_label(w, c) == BinaryLabel::NoDamage);
    }
    SUBCASE("both qualify, larger wins, tie goes to damage") {
        MinerConfig c = cfg_for(10);
        c.delta1 = 0.1;
        c.delta2 = 0.1;
        LabelMask w(10, 10);
        fill(w, 0, 0, 3, 5, DamageLabel::NoDamage);     // 15
        fill(w, 5, 0, 3, 4, DamageLabel::Destroyed);    // 12
        CHECK(assign_patch_label(w, c) == BinaryLabel::NoDamage);
        fill(w, 5, 0, 3, 5, DamageLabel::Destroyed);    // 15: tie
        CHECK(assign_patch_label(w, c) == BinaryLabel::WithDamage);
    }
    CHECK_THROWS_AS(assign_patch_label(LabelMask(32, 64), cfg), ShapeError);
}

TEST_CASE("erasure replaces losing pixels with post values") {
    Rng rng(6);
    const std::size_t ps = 8;
    const auto zimg = testutil::random_image(ps, ps, rng), post = testutil::random_image(ps, ps, rng);
    LabelMask w(ps, ps);
    fill(w, 0, 0, 4, 4, DamageLabel::Destroyed);
    w.at(6, 6) = w.at(6, 7) = w.at(7, 7) = DamageLabel::NoDamage;
    LabeledPatch p{"x", zimg, BinaryLabel::WithDamage, {}};
    const auto out = erase_other_class(p, w, post);
    for (std::size_t r = 0; r < ps; ++r)
        for (std::size_t c = 0; c < ps; ++c) {
            const bool erased = w.at(r, c) == DamageLabel::NoDamage;
            for (std::size_t ch = 0; ch < 3; ++ch)
                CHECK(out.pixels.at(r, c, ch) == (erased ? post.at(r, c, ch) : zimg.at(r, c, ch)));
        }
    CHECK(out.label == BinaryLabel::WithDamage);

    LabelMask clean(ps, ps, DamageLabel::NoDamage);
    LabeledPatch q{"y", zimg, BinaryLabel::NoDamage, {}};
    CHECK(erase_other_class(q, clean, post).pixels == zimg);
    CHECK_THROWS_AS(erase_other_class(q, LabelMask(4, 4), post), ShapeError);
}

TEST_CASE("window geometry") {
    CHECK(candidate_windows(64, 64, cfg_for(64)) == 1);
    CHECK(candidate_windows(128, 128, cfg_for(64)) == 4);
    CHECK(candidate_windows(130, 127, cfg_for(64)) == 2);
    CHECK(candidate_windows(63, 200, cfg_for(64)) == 0);
    MinerConfig s = cfg_for(64);
    s.stride = 32;
    CHECK(candidate_windows(128, 128, s) == 9);

    LabelMask mask(128, 128, DamageLabel::NoDamage);
    const RasterImage img(128, 128, 0.5f);
    const auto z = ip2cp_encode(img, img, mask);
    const auto patches = mine_patches(z, mask, img, cfg_for(64), "im");
    REQUIRE(patches.size() == 4);
    const std::vector<std::pair<std::size_t, std::size_t>> origins{{0, 0}, {0, 64}, {64, 0}, {64, 64}};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(patches[i].source.row == origins[i].first);
        CHECK(patches[i].source.col == origins[i].second);
        CHECK(patches[i].source.image_id == "im");
    }
    CHECK(patches[1].id == "im_r0_c64");
    CHECK_THROWS_AS(mine_patches(z, mask, img, cfg_for(256), "im"), DataError);
}

TEST_CASE("miner agrees with the brute-force oracle on synthetic scenes") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        SceneConfig sc;
        sc.image_size = 128;
        sc.building_count = 6;
        sc.seed = seed;
        const Scene s = generate_scene(sc);
        const auto z = ip2cp_encode(s.pre, s.post, s.mask);
        for (std::size_t stride : {64u, 24u}) {
            MinerConfig cfg = cfg_for(64);
            cfg.stride = stride;
            const auto got = mine_patches(z, s.mask, s.post, cfg, "s");
            const auto want = oracle::mine(z.image, s.mask, s.post, 64, stride, cfg.delta1, cfg.delta2);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].source.row == want[i].row);
                CHECK(got[i].source.col == want[i].col);
                CHECK(static_cast<int>(got[i].label) + 1 == want[i].label);
                CHECK(got[i].pixels == want[i].pixels);
            }
        }
    }
}

TEST_CASE("emitted patches are label-pure") {
    Rng rng(13);
    for (int t = 0; t < 20; ++t) {
        SceneConfig sc;
        sc.image_size = 128;
        sc.building_count = 8;
        sc.building_min = 10;
        sc.building_max = 24;
        sc.seed = 100 + t;
        const Scene s = generate_scene(sc);
        const auto z = ip2cp_encode(s.pre, s.post, s.mask);
        MinerConfig cfg = cfg_for(32);
        cfg.stride = 16;
        for (const auto& p : mine_patches(z, s.mask, s.post, cfg, "s")) {
            // Pixels of the losing class equal the post image; nothing else was touched.
            for (std::size_t r = 0; r < 32; ++r)
                for (std::size_t c = 0; c < 32; ++c) {
                    const auto b = binarize_label(s.mask.at(p.source.row + r, p.source.col + c));
                    const bool loser = b && *b != p.label;
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        const float expect = loser ? s.post.at(p.source.row + r, p.source.col + c, ch)
                                                   : z.image.at(p.source.row + r, p.source.col + c, ch);
                        CHECK(p.pixels.at(r, c, ch) == expect);
                    }
                }
        }
    }
}

TEST_CASE("stats: counts, ordering and monotonicity") {
    std::vector<DatasetItem> data;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        SceneConfig sc;
        sc.image_size = 128;
        sc.building_count = 8;
        sc.seed = seed;
        const Scene s = generate_scene(sc);
        data.push_back({"s" + std::to_string(seed), ip2cp_encode(s.pre, s.post, s.mask), s.mask, s.post});
    }
    const auto rows = sweep_patch_stats(data, {64, 32}, {{0.2, 0.04}, {0.12, 0.04}, {0.12, 0.08}});
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto key = [](const StatsRow& r) { return std::tuple(r.patch_size, r.delta1, r.delta2); };
        CHECK(key(rows[i - 1]) < key(rows[i]));
    }
    for (const auto& row : rows) {
        std::size_t nd = 0, wd = 0, total = 0;
        for (const auto& item : data) {
            const auto mined = oracle::mine(item.z.image, item.mask, item.post, row.patch_size, row.patch_size,
                                            row.delta1, row.delta2);
            for (const auto& m : mined) ++(m.label == 1 ? nd : wd);
            total += (128 / row.patch_size) * (128 / row.patch_size);
        }
        CHECK(row.no_damage == nd);
        CHECK(row.with_damage == wd);
        CHECK(row.no_damage + row.with_damage + row.discarded == total);
    }
    // rows: [32: (0.12,.04), (0.12,.08), (0.2,.04)], [64: same]
    for (std::size_t base : {0u, 3u}) {
        CHECK(rows[base + 2].no_damage <= rows[base].no_damage);
        CHECK(rows[base + 1].with_damage <= rows[base].with_damage);
    }

    // Images smaller than the patch contribute nothing.
    const auto tiny = sweep_patch_stats(data, {256}, {{0.12, 0.04}});
    CHECK(tiny[0] == StatsRow{256, 0.12, 0.04, 0, 0, 0});
    CHECK(stats_csv_header() == "patch_size,delta1,delta2,no_damage,with_damage,discarded");
    CHECK(stats_csv_row(tiny[0]) == "256,0.12,0.04,0,0,0");
}

TEST_CASE("patch set files round trip") {
    testutil::TempDir dir("patches");
    Rng rng(1);
    std::vector<LabeledPatch> ps;
    for (int i = 0; i < 5; ++i) {
        LabeledPatch p;
        p.source = {"img" + std::to_string(i % 2), std::size_t(i) * 8, 16};
        p.id = make_patch_id(p.source);
        p.label = i % 2 ? BinaryLabel::WithDamage : BinaryLabel::NoDamage;
        p.pixels = testutil::random_grid_image(8, 8, rng);
        ps.push_back(p);
    }
    write_patch_set(dir.path(), ps);
    const std::string manifest = testutil::slurp(dir / "manifest.tsv");
    CHECK(manifest.find('\r') == std::string::npos);
    CHECK(manifest.rfind("img0_r0_c16\tno_damage\timg0\t0\t16\n", 0) == 0);
    const auto back = read_patch_set(dir.path());
    REQUIRE(back.size() == ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        CHECK(back[i].id == ps[i].id);
        CHECK(back[i].label == ps[i].label);
        CHECK(back[i].source == ps[i].source);
        CHECK(back[i].pixels == ps[i].pixels);
    }
    write_patch_set(dir / "empty", {});
    CHECK(read_patch_set(dir / "empty").empty());

    testutil::spit(dir / "manifest.tsv", "a\tmaybe\timg\t0\t0\n");
    CHECK_THROWS_AS(read_patch_manifest(dir.path()), DataError);
}

// --- augmentation -------------------------------------------------------------

TEST_CASE("rotations and flips are exact group actions") {
    Rng rng(31);
    const LabeledPatch p{"p", testutil::random_image(9, 9, rng), BinaryLabel::WithDamage, {}};
    LabeledPatch q = p;
    for (int i = 0; i < 4; ++i) q = augment(q, Rotate90{1}, rng);
    CHECK(q.pixels == p.pixels);
    CHECK(augment(p, Rotate90{0}, rng).pixels == p.pixels);
    CHECK(augment(augment(p, Rotate90{1}, rng), Rotate90{3}, rng).pixels == p.pixels);
    CHECK(augment(augment(p, Rotate90{2}, rng), Rotate90{2}, rng).pixels == p.pixels);
    for (auto axis : {Flip::Axis::Horizontal, Flip::Axis::Vertical}) {
        const auto once = augment(p, Flip{axis}, rng);
        CHECK_FALSE(once.pixels == p.pixels);
        CHECK(augment(once, Flip{axis}, rng).pixels == p.pixels);
    }
    // Quarter turn is counter-clockwise: top-right corner moves to top-left.
    const auto r = augment(p, Rotate90{1}, rng);
    for (std::size_t ch = 0; ch < 3; ++ch) CHECK(r.pixels.at(0, 0, ch) == p.pixels.at(0, 8, ch));
    const auto h = augment(p, Flip{Flip::Axis::Horizontal}, rng);
    for (std::size_t ch = 0; ch < 3; ++ch) CHECK(h.pixels.at(2, 0, ch) == p.pixels.at(2, 8, ch));
}

TEST_CASE("shear and scale keep size, range and label") {
    Rng rng(32);
    const LabeledPatch p{"p", testutil::random_image(16, 16, rng), BinaryLabel::NoDamage, {}};
    for (const Augmentation& a : {Augmentation{Shear{0.2}}, Augmentation{Shear{-0.15}},
                                  Augmentation{Scale{0.8}}, Augmentation{Scale{1.25}}}) {
        const auto q = augment(p, a, rng);
        CHECK(q.label == p.label);
        CHECK(q.pixels.height() == 16);
        CHECK(q.pixels.width() == 16);
        for (float v : q.pixels.data()) CHECK((v >= 0.0f && v <= 1.0f));
    }
    CHECK(augment(p, Shear{0.0}, rng).pixels == p.pixels);
    CHECK(augment(p, Scale{1.0}, rng).pixels == p.pixels);
    const RasterImage flat(16, 16, 0.25f);
    const RasterImage scaled = augment_pixels(flat, Scale{1.2}, rng);
    for (float v : scaled.data()) CHECK(v == doctest::Approx(0.25f));
}

TEST_CASE("color jitter stays within bounds") {
    Rng rng(33);
    const LabeledPatch p{"p", testutil::random_image(8, 8, rng), BinaryLabel::WithDamage, {}};
    for (int seed = 0; seed < 50; ++seed) {
        Rng r(seed);
        const auto q = augment(p, ColorJitter{0.1}, r);
        CHECK(q.label == p.label);
        for (std::size_t i = 0; i < q.pixels.data().size(); ++i) {
            CHECK(std::abs(q.pixels.data()[i] - p.pixels.data()[i]) <= 0.1f + 1e-6f);
            CHECK((q.pixels.data()[i] >= 0.0f && q.pixels.data()[i] <= 1.0f));
        }
    }
    Rng a(5), b(5);
    CHECK(augment(p, ColorJitter{0.1}, a).pixels == augment(p, ColorJitter{0.1}, b).pixels);
}

TEST_CASE("augmentation parameter ranges") {
    Rng rng(0);
    const RasterImage img(8, 8);
    CHECK_THROWS_AS(augment_pixels(img, Rotate90{4}, rng), ConfigError);
    CHECK_THROWS_AS(augment_pixels(img, Shear{0.3}, rng), ConfigError);
    CHECK_THROWS_AS(augment_pixels(img, Scale{0.5}, rng), ConfigError);
    CHECK_THROWS_AS(augment_pixels(img, Scale{1.3}, rng), ConfigError);
    CHECK_THROWS_AS(augment_pixels(img, ColorJitter{0.2}, rng), ConfigError);
}

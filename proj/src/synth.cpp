#include "ip2cp/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ip2cp/error.hpp"
#include "ip2cp/rng.hpp"

namespace ip2cp {

void SceneConfig::validate() const {
    if (image_size < 8) throw ConfigError("image_size must be >= 8");
    if (building_min == 0 || building_min > building_max)
        throw ConfigError("building size range must satisfy 1 <= min <= max");
    if (building_max > image_size) throw ConfigError("buildings larger than the image");
    if (!(damage_probability >= 0.0 && damage_probability <= 1.0))
        throw ConfigError("damage_probability must be in [0, 1]");
    if (!(damage_intensity > 0.0 && damage_intensity <= 1.0))
        throw ConfigError("damage_intensity must be in (0, 1]");
    if (!(speckle_fraction >= 0.0 && speckle_fraction <= 1.0))
        throw ConfigError("speckle_fraction must be in [0, 1]");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("noise_sigma must be >= 0");
}

namespace {

constexpr std::size_t kGap = 2;  // minimum spacing between footprints

bool overlaps(const BuildingRecord& a, const BuildingRecord& b) {
    return a.row < b.row + b.height + kGap && b.row < a.row + a.height + kGap && a.col < b.col + b.width + kGap &&
           b.col < a.col + a.width + kGap;
}

// Low-frequency texture: a base colour plus a few random plane waves per channel.
void paint_background(RasterImage& img, Rng& rng) {
    constexpr int kWaves = 5;
    const double n = static_cast<double>(img.height());
    for (std::size_t ch = 0; ch < RasterImage::kChannels; ++ch) {
        const double base = rng.uniform(0.25, 0.45);
        double fx[kWaves], fy[kWaves], phase[kWaves], amp[kWaves];
        for (int k = 0; k < kWaves; ++k) {
            const double freq = rng.uniform(0.5, 4.0) * 2.0 * std::numbers::pi / n;
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            fx[k] = freq * std::cos(angle);
            fy[k] = freq * std::sin(angle);
            phase[k] = rng.uniform(0.0, 2.0 * std::numbers::pi);
            amp[k] = rng.uniform(0.01, 0.04);
        }
        for (std::size_t r = 0; r < img.height(); ++r) {
            for (std::size_t c = 0; c < img.width(); ++c) {
                double v = base;
                for (int k = 0; k < kWaves; ++k)
                    v += amp[k] * std::sin(fx[k] * static_cast<double>(c) + fy[k] * static_cast<double>(r) + phase[k]);
                img.at(r, c, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
}

void add_noise(RasterImage& img, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    for (float& v : img.data()) v = static_cast<float>(std::clamp(v + sigma * rng.normal(), 0.0, 1.0));
}

}  // namespace

Scene generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const std::size_t n = cfg.image_size;
    Scene scene;
    scene.pre = RasterImage(n, n);
    scene.mask = LabelMask(n, n);
    paint_background(scene.pre, rng);

    const std::size_t max_attempts = 1000 * std::max<std::size_t>(cfg.building_count, 1);
    std::size_t attempts = 0;
    while (scene.buildings.size() < cfg.building_count) {
        if (++attempts > max_attempts)
            throw ConfigError("could not place " + std::to_string(cfg.building_count) +
                              " non-overlapping buildings in a " + std::to_string(n) + "x" + std::to_string(n) +
                              " scene after " + std::to_string(max_attempts) + " attempts");
        const std::size_t span = cfg.building_max - cfg.building_min + 1;
        BuildingRecord b;
        b.height = cfg.building_min + rng.below(span);
        b.width = cfg.building_min + rng.below(span);
        b.row = rng.below(n - b.height + 1);
        b.col = rng.below(n - b.width + 1);
        if (std::any_of(scene.buildings.begin(), scene.buildings.end(),
                        [&](const BuildingRecord& o) { return overlaps(b, o); }))
            continue;
        scene.buildings.push_back(b);
    }

    // Flat roof colours bright enough to survive the damage drop without clamping.
    const double lo = std::min(0.95, std::max(0.55, cfg.damage_intensity + 0.05));
    std::vector<std::array<float, 3>> colors;
    for (auto& b : scene.buildings) {
        std::array<float, 3> col{};
        for (;;) {
            for (auto& v : col) v = static_cast<float>(rng.uniform(lo, 1.0));
            const bool distinct = std::none_of(colors.begin(), colors.end(), [&](const auto& o) {
                return std::abs(o[0] - col[0]) + std::abs(o[1] - col[1]) + std::abs(o[2] - col[2]) < 1e-3f;
            });
            if (distinct) break;
        }
        colors.push_back(col);
        for (std::size_t r = b.row; r < b.row + b.height; ++r)
            for (std::size_t c = b.col; c < b.col + b.width; ++c)
                for (std::size_t ch = 0; ch < 3; ++ch) scene.pre.at(r, c, ch) = col[ch];
    }

    scene.post = scene.pre;
    const auto drop = static_cast<float>(cfg.damage_intensity);
    for (auto& b : scene.buildings) {
        b.damaged = rng.uniform() < cfg.damage_probability;
        const DamageLabel label = b.damaged ? DamageLabel::Destroyed : DamageLabel::NoDamage;
        for (std::size_t r = b.row; r < b.row + b.height; ++r) {
            for (std::size_t c = b.col; c < b.col + b.width; ++c) {
                scene.mask.at(r, c) = label;
                if (!b.damaged) continue;
                const bool speckle = rng.uniform() < cfg.speckle_fraction;
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const float before = scene.pre.at(r, c, ch);
                    float v = std::max(0.0f, before - drop);
                    // Debris keeps part of the original roof brightness.
                    if (speckle) v = static_cast<float>(rng.uniform(v, before));
                    scene.post.at(r, c, ch) = v;
                }
            }
        }
    }
    add_noise(scene.pre, cfg.noise_sigma, rng);
    add_noise(scene.post, cfg.noise_sigma, rng);
    return scene;
}

std::vector<Split> dataset_splits(std::size_t scenes, double train_fraction) {
    if (scenes < 2) throw ConfigError("a dataset needs at least 2 scenes");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
    auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(scenes) * train_fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, scenes - 1);
    std::vector<Split> out(scenes, Split::Test);
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n_train), Split::Train);
    return out;
}

Manifest make_dataset(const SceneConfig& cfg, std::size_t scenes, double train_fraction,
                      const std::filesystem::path& out_dir) {
    cfg.validate();
    const auto splits = dataset_splits(scenes, train_fraction);
    const auto scene_dir = out_dir / "scenes";
    std::error_code ec;
    std::filesystem::create_directories(scene_dir, ec);
    if (ec) throw IoError("cannot create " + scene_dir.string() + ": " + ec.message());

    Manifest manifest;
    for (std::size_t i = 0; i < scenes; ++i) {
        SceneConfig sc = cfg;
        sc.seed = cfg.seed + i;
        const Scene scene = generate_scene(sc);
        char id[32];
        std::snprintf(id, sizeof id, "scene_%04zu", i);
        ManifestEntry e;
        e.id = id;
        e.pre = scene_dir / (e.id + "_pre.png");
        e.post = scene_dir / (e.id + "_post.png");
        e.labels = scene_dir / (e.id + "_mask.png");
        e.split = splits[i];
        save_image(scene.pre, e.pre);
        save_image(scene.post, e.post);
        save_mask(scene.mask, e.labels);
        manifest.entries.push_back(std::move(e));
    }
    save_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

}  // namespace ip2cp

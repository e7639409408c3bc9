#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ip2cp/ingest.hpp"
#include "ip2cp/raster.hpp"

namespace ip2cp {

struct SceneConfig {
    std::size_t image_size = 256;
    std::size_t building_count = 14;
    std::size_t building_min = 16;  // side length range in pixels
    std::size_t building_max = 40;
    double damage_probability = 0.5;
    double damage_intensity = 0.5;  // brightness drop on damaged footprints
    double speckle_fraction = 0.1;  // share of damaged pixels replaced by partly darkened debris
    double noise_sigma = 0.02;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

struct BuildingRecord {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    bool damaged = false;
};

struct Scene {
    RasterImage pre;
    RasterImage post;
    LabelMask mask;
    std::vector<BuildingRecord> buildings;
};

// Deterministic given cfg.seed. Throws ConfigError when the buildings cannot be
// placed without overlap.
Scene generate_scene(const SceneConfig& cfg);

// Scenes use seeds seed, seed+1, ...; the first round(scenes * train_fraction)
// (clamped to 1..scenes-1) are train. Writes <id>_pre.png, <id>_post.png,
// <id>_mask.png under out_dir/scenes and out_dir/manifest.json.
Manifest make_dataset(const SceneConfig& cfg, std::size_t scenes, double train_fraction,
                      const std::filesystem::path& out_dir);

// Split assignment only (no files).
std::vector<Split> dataset_splits(std::size_t scenes, double train_fraction);

}  // namespace ip2cp

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ip2cp/encoder.hpp"
#include "ip2cp/raster.hpp"
#include "ip2cp/rng.hpp"

namespace ip2cp {

struct MinerConfig {
    std::size_t patch_size = 64;
    double delta1 = 0.12;  // NoDamage area fraction threshold
    double delta2 = 0.04;  // WithDamage area fraction threshold
    std::size_t stride = 0;  // 0 means "same as patch_size"

    std::size_t effective_stride() const { return stride == 0 ? patch_size : stride; }
    // Throws ConfigError unless 0 < delta2 <= delta1 < 1, patch_size >= 8.
    void validate() const;
};

struct PatchSource {
    std::string image_id;
    std::size_t row = 0;
    std::size_t col = 0;

    bool operator==(const PatchSource&) const = default;
};

// "<image>_r<row>_c<col>"
std::string make_patch_id(const PatchSource& source);

struct LabeledPatch {
    std::string id;
    RasterImage pixels;  // patch_size x patch_size x 3
    BinaryLabel label = BinaryLabel::NoDamage;
    PatchSource source;
};

struct StatsRow {
    std::size_t patch_size = 0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    std::size_t no_damage = 0;
    std::size_t with_damage = 0;
    std::size_t discarded = 0;

    bool operator==(const StatsRow&) const = default;
};

// Largest 4-connected component of the pixels whose binarised label equals `cls`,
// as a pixel count.
std::size_t largest_component(const LabelMask& window, BinaryLabel cls);

// Threshold rule over largest-component area fractions. Strict inequalities;
// when both classes qualify the larger fraction wins, ties go to WithDamage.
std::optional<BinaryLabel> assign_patch_label(const LabelMask& window, const MinerConfig& cfg);

// Replaces losing-class pixels by the post-image value.
LabeledPatch erase_other_class(LabeledPatch patch, const LabelMask& window, const RasterImage& post_window);

struct DatasetItem {
    std::string id;
    Ip2cpImage z;
    LabelMask mask;
    RasterImage post;
};

// Sliding-window miner; row-major origin order. Windows past the border are skipped.
std::vector<LabeledPatch> mine_patches(const Ip2cpImage& z, const LabelMask& mask, const RasterImage& post,
                                       const MinerConfig& cfg, const std::string& image_id = "image");

// Number of windows the miner inspects for an image of this size.
std::size_t candidate_windows(std::size_t height, std::size_t width, const MinerConfig& cfg);

// Counts for one configuration over the whole dataset.
StatsRow collect_stats(const std::vector<DatasetItem>& dataset, const MinerConfig& cfg);

// One row per (size, delta pair); rows sorted by (size, delta1, delta2).
std::vector<StatsRow> sweep_patch_stats(const std::vector<DatasetItem>& dataset,
                                        const std::vector<std::size_t>& sizes,
                                        const std::vector<std::pair<double, double>>& deltas);

std::string stats_csv_header();
std::string stats_csv_row(const StatsRow& row);

// --- augmentation -----------------------------------------------------------

struct Rotate90 {
    int k = 1;  // quarter turns counter-clockwise, 0..3
};
struct Flip {
    enum class Axis { Horizontal, Vertical } axis = Axis::Horizontal;
};
struct Shear {
    double factor = 0.0;  // horizontal shear, [-0.2, 0.2]
};
struct Scale {
    double factor = 1.0;  // [0.8, 1.25]
};
struct ColorJitter {
    double max_delta = 0.0;  // [0, 0.1]
};
using Augmentation = std::variant<Rotate90, Flip, Shear, Scale, ColorJitter>;

// Label is never altered. Geometric transforms resample bilinearly with edge
// clamping; jitter adds one uniform offset per channel and clamps to [0, 1].
LabeledPatch augment(const LabeledPatch& patch, const Augmentation& spec, Rng& rng);
RasterImage augment_pixels(const RasterImage& pixels, const Augmentation& spec, Rng& rng);

// --- patch set files --------------------------------------------------------

// <dir>/<id>.png per patch plus <dir>/manifest.tsv with
// id<TAB>label<TAB>source_image<TAB>row<TAB>col lines.
void write_patch_set(const std::filesystem::path& dir, const std::vector<LabeledPatch>& patches);

struct PatchSetEntry {
    std::string id;
    BinaryLabel label;
    PatchSource source;
};
std::vector<PatchSetEntry> read_patch_manifest(const std::filesystem::path& dir);
std::vector<LabeledPatch> read_patch_set(const std::filesystem::path& dir);

}  // namespace ip2cp

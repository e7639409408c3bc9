#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ip2cp/raster.hpp"

namespace ip2cp {

enum class Split { Train, Test };
std::string_view to_string(Split s);

struct ManifestEntry {
    std::string id;
    std::filesystem::path pre;
    std::filesystem::path post;
    std::filesystem::path labels;  // mask PNG or polygon label JSON
    Split split = Split::Train;

    bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

// {"entries":[{"id","pre","post","labels","split"}]}; relative paths resolve
// against the manifest's directory. Throws FormatError with a location on any
// schema violation.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir);
// Paths are written relative to the manifest's directory when they lie below it.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct Point2 {
    double x;
    double y;
    bool operator==(const Point2&) const = default;
};

struct LabeledPolygon {
    std::vector<Point2> ring;  // closed: front() == back()
    DamageLabel subtype = DamageLabel::NoDamage;
};

struct LabelFile {
    std::vector<LabeledPolygon> polygons;
    std::size_t skipped_unclassified = 0;
    std::size_t ignored_holes = 0;
};

// xBD-style label JSON: features either at "features" (array) or
// "features"."xy" (array); each has "wkt" and "properties"."subtype".
LabelFile parse_label_json(const std::filesystem::path& path);
LabelFile parse_label_text(std::string_view json_text);

// Parses "POLYGON ((x y, ...), ...)"; only the outer ring is kept, the count of
// dropped interior rings is added to *holes when given. Throws FormatError
// naming the character offset.
std::vector<Point2> parse_wkt_polygon(std::string_view wkt, std::size_t* holes = nullptr);
std::string to_wkt(const std::vector<Point2>& ring);

// Even-odd fill of pixel centres; later polygons overwrite earlier ones.
LabelMask rasterize(const std::vector<LabeledPolygon>& polygons, std::size_t height, std::size_t width);

// Even-odd crossing test of a single point against a closed ring.
bool point_in_ring(const std::vector<Point2>& ring, double x, double y);

// Loads a mask PNG, or rasterises a .json label file to the given size.
LabelMask load_labels(const std::filesystem::path& path, std::size_t height, std::size_t width);

}  // namespace ip2cp

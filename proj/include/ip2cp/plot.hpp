#pragma once

#include <span>
#include <string>
#include <vector>

#include "ip2cp/raster.hpp"

namespace ip2cp {

struct ScatterPoint {
    std::string id;
    BinaryLabel label;
    double x;
    double y;
};

// "id,label,x,y" with one row per point.
std::string scatter_csv(std::span<const ScatterPoint> points);

// NoDamage red, WithDamage green; axes cover the data bounding box plus 5% on each side.
std::string scatter_svg(std::span<const ScatterPoint> points, const std::string& title = "2-D patch embedding");

struct Bounds {
    double xmin, xmax, ymin, ymax;
};
Bounds scatter_bounds(std::span<const ScatterPoint> points);

}  // namespace ip2cp

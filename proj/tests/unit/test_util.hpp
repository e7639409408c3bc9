#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "ip2cp/raster.hpp"
#include "ip2cp/rng.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("ip2cp_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

inline ip2cp::RasterImage random_image(std::size_t h, std::size_t w, ip2cp::Rng& rng) {
    ip2cp::RasterImage img(h, w);
    for (float& v : img.data()) v = static_cast<float>(rng.uniform());
    return img;
}

// Values on the 1/255 grid, so PNG round trips are exact.
inline ip2cp::RasterImage random_grid_image(std::size_t h, std::size_t w, ip2cp::Rng& rng) {
    ip2cp::RasterImage img(h, w);
    for (float& v : img.data()) v = static_cast<float>(rng.below(256)) / 255.0f;
    return img;
}

inline ip2cp::LabelMask random_mask(std::size_t h, std::size_t w, ip2cp::Rng& rng, double bg_prob = 0.5) {
    ip2cp::LabelMask m(h, w);
    for (auto& l : m.labels())
        l = rng.uniform() < bg_prob ? ip2cp::DamageLabel::Background
                                    : static_cast<ip2cp::DamageLabel>(1 + rng.below(4));
    return m;
}

}  // namespace testutil

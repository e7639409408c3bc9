#include "ip2cp/patches.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

#include "ip2cp/error.hpp"

namespace ip2cp {

void MinerConfig::validate() const {
    if (patch_size < 8) throw ConfigError("patch_size must be >= 8, got " + std::to_string(patch_size));
    if (!(delta2 > 0.0 && delta2 <= delta1 && delta1 < 1.0)) {
        std::ostringstream os;
        os << "thresholds must satisfy 0 < delta2 <= delta1 < 1, got delta1=" << delta1 << " delta2=" << delta2;
        throw ConfigError(os.str());
    }
}

std::string make_patch_id(const PatchSource& source) {
    return source.image_id + "_r" + std::to_string(source.row) + "_c" + std::to_string(source.col);
}

std::size_t largest_component(const LabelMask& window, BinaryLabel cls) {
    const std::size_t h = window.height(), w = window.width();
    std::vector<std::uint8_t> visited(h * w, 0);
    std::vector<std::size_t> stack;
    std::size_t best = 0;
    auto member = [&](std::size_t idx) {
        const auto b = binarize_label(window.labels()[idx]);
        return b && *b == cls;
    };
    for (std::size_t start = 0; start < h * w; ++start) {
        if (visited[start] || !member(start)) continue;
        std::size_t size = 0;
        visited[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            ++size;
            const std::size_t r = idx / w, c = idx % w;
            const auto visit = [&](std::size_t n) {
                if (!visited[n] && member(n)) {
                    visited[n] = 1;
                    stack.push_back(n);
                }
            };
            if (r > 0) visit(idx - w);
            if (r + 1 < h) visit(idx + w);
            if (c > 0) visit(idx - 1);
            if (c + 1 < w) visit(idx + 1);
        }
        best = std::max(best, size);
    }
    return best;
}

std::optional<BinaryLabel> assign_patch_label(const LabelMask& window, const MinerConfig& cfg) {
    if (window.height() != cfg.patch_size || window.width() != cfg.patch_size)
        throw ShapeError("assign_patch_label: window is " + std::to_string(window.height()) + "x" +
                         std::to_string(window.width()) + ", expected " + std::to_string(cfg.patch_size) + "^2");
    const double area = static_cast<double>(cfg.patch_size * cfg.patch_size);
    const double f_nd = static_cast<double>(largest_component(window, BinaryLabel::NoDamage)) / area;
    const double f_wd = static_cast<double>(largest_component(window, BinaryLabel::WithDamage)) / area;
    const bool nd = f_nd > cfg.delta1;
    const bool wd = f_wd > cfg.delta2;
    if (nd && wd) return f_nd > f_wd ? BinaryLabel::NoDamage : BinaryLabel::WithDamage;
    if (nd) return BinaryLabel::NoDamage;
    if (wd) return BinaryLabel::WithDamage;
    return std::nullopt;
}

LabeledPatch erase_other_class(LabeledPatch patch, const LabelMask& window, const RasterImage& post_window) {
    const std::size_t h = patch.pixels.height(), w = patch.pixels.width();
    if (window.height() != h || window.width() != w || post_window.height() != h || post_window.width() != w)
        throw ShapeError("erase_other_class: patch, mask window and post window differ in size");
    const BinaryLabel loser =
        patch.label == BinaryLabel::NoDamage ? BinaryLabel::WithDamage : BinaryLabel::NoDamage;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const auto b = binarize_label(window.at(r, c));
            if (b && *b == loser) {
                auto dst = patch.pixels.pixel(r, c);
                auto src = post_window.pixel(r, c);
                std::copy(src.begin(), src.end(), dst.begin());
            }
        }
    }
    return patch;
}

std::size_t candidate_windows(std::size_t height, std::size_t width, const MinerConfig& cfg) {
    const std::size_t ps = cfg.patch_size, s = cfg.effective_stride();
    if (height < ps || width < ps) return 0;
    return ((height - ps) / s + 1) * ((width - ps) / s + 1);
}

std::vector<LabeledPatch> mine_patches(const Ip2cpImage& z, const LabelMask& mask, const RasterImage& post,
                                       const MinerConfig& cfg, const std::string& image_id) {
    cfg.validate();
    const std::size_t H = z.image.height(), W = z.image.width();
    if (mask.height() != H || mask.width() != W || post.height() != H || post.width() != W)
        throw ShapeError("mine_patches: encoded image, mask and post image differ in size");
    const std::size_t ps = cfg.patch_size, s = cfg.effective_stride();
    if (H < ps || W < ps)
        throw DataError("image " + image_id + " (" + std::to_string(H) + "x" + std::to_string(W) +
                        ") is smaller than one " + std::to_string(ps) + "x" + std::to_string(ps) + " patch");

    std::vector<LabeledPatch> out;
    for (std::size_t r = 0; r + ps <= H; r += s) {
        for (std::size_t c = 0; c + ps <= W; c += s) {
            const LabelMask window = mask.crop(r, c, ps, ps);
            const auto label = assign_patch_label(window, cfg);
            if (!label) continue;
            LabeledPatch p;
            p.source = {image_id, r, c};
            p.id = make_patch_id(p.source);
            p.label = *label;
            p.pixels = z.image.crop(r, c, ps, ps);
            out.push_back(erase_other_class(std::move(p), window, post.crop(r, c, ps, ps)));
        }
    }
    return out;
}

StatsRow collect_stats(const std::vector<DatasetItem>& dataset, const MinerConfig& cfg) {
    cfg.validate();
    StatsRow row{cfg.patch_size, cfg.delta1, cfg.delta2, 0, 0, 0};
    std::size_t candidates = 0;
    for (const auto& item : dataset) {
        const std::size_t n = candidate_windows(item.z.image.height(), item.z.image.width(), cfg);
        if (n == 0) continue;
        candidates += n;
        for (const auto& p : mine_patches(item.z, item.mask, item.post, cfg, item.id))
            ++(p.label == BinaryLabel::NoDamage ? row.no_damage : row.with_damage);
    }
    row.discarded = candidates - row.no_damage - row.with_damage;
    return row;
}

std::vector<StatsRow> sweep_patch_stats(const std::vector<DatasetItem>& dataset,
                                        const std::vector<std::size_t>& sizes,
                                        const std::vector<std::pair<double, double>>& deltas) {
    if (dataset.empty()) throw DataError("sweep_patch_stats: empty dataset");
    std::vector<StatsRow> rows;
    for (std::size_t size : sizes) {
        for (const auto& [d1, d2] : deltas) {
            MinerConfig cfg;
            cfg.patch_size = size;
            cfg.delta1 = d1;
            cfg.delta2 = d2;
            rows.push_back(collect_stats(dataset, cfg));
        }
    }
    std::sort(rows.begin(), rows.end(), [](const StatsRow& a, const StatsRow& b) {
        return std::tie(a.patch_size, a.delta1, a.delta2) < std::tie(b.patch_size, b.delta1, b.delta2);
    });
    return rows;
}

std::string stats_csv_header() { return "patch_size,delta1,delta2,no_damage,with_damage,discarded"; }

std::string stats_csv_row(const StatsRow& row) {
    std::ostringstream os;
    os << row.patch_size << ',' << row.delta1 << ',' << row.delta2 << ',' << row.no_damage << ','
       << row.with_damage << ',' << row.discarded;
    return os.str();
}

// --- patch set files --------------------------------------------------------

void write_patch_set(const std::filesystem::path& dir, const std::vector<LabeledPatch>& patches) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::ofstream manifest(dir / "manifest.tsv", std::ios::binary | std::ios::trunc);
    if (!manifest) throw IoError("cannot write " + (dir / "manifest.tsv").string());
    for (const auto& p : patches) {
        save_image(p.pixels, dir / (p.id + ".png"));
        manifest << p.id << '\t' << to_string(p.label) << '\t' << p.source.image_id << '\t' << p.source.row
                 << '\t' << p.source.col << '\n';
    }
    if (!manifest.flush()) throw IoError("cannot write " + (dir / "manifest.tsv").string());
}

namespace {

std::size_t parse_index(const std::string& field, const std::string& where) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw DataError(where + ": expected a non-negative integer, got '" + field + "'");
    return v;
}

}  // namespace

std::vector<PatchSetEntry> read_patch_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.tsv";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<PatchSetEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        for (;;) {
            const std::size_t tab = line.find('\t', start);
            f.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 5) throw DataError(where + ": expected 5 tab-separated fields, got " + std::to_string(f.size()));
        PatchSetEntry e;
        e.id = f[0];
        try {
            e.label = parse_binary_label(f[1]);
        } catch (const DataError& err) {
            throw DataError(where + ": " + err.what());
        }
        e.source = {f[2], parse_index(f[3], where), parse_index(f[4], where)};
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<LabeledPatch> read_patch_set(const std::filesystem::path& dir) {
    std::vector<LabeledPatch> out;
    for (auto& e : read_patch_manifest(dir)) {
        LabeledPatch p;
        p.pixels = load_image(dir / (e.id + ".png"));
        p.id = std::move(e.id);
        p.label = e.label;
        p.source = std::move(e.source);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace ip2cp

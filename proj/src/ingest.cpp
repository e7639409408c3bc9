#include "ip2cp/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <unordered_set>

#include "ip2cp/error.hpp"
#include "json.hpp"

namespace ip2cp {

using nlohmann::json;

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string line_col(std::string_view text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_json(std::string_view text, const std::string& what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw FormatError(what + ": malformed JSON at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                          e.what());
    }
}

const json& require_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw FormatError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw FormatError(where + ": missing field \"" + key + "\"");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require_field(obj, key, where);
    if (!v.is_string()) throw FormatError(where + "." + key + ": expected a string");
    std::string s = v.get<std::string>();
    if (s.empty()) throw FormatError(where + "." + key + ": must not be empty");
    return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& dir) {
    if (dir.empty()) return p.generic_string();
    const auto abs_p = std::filesystem::absolute(p).lexically_normal();
    const auto abs_dir = std::filesystem::absolute(dir).lexically_normal();
    const auto rel = abs_p.lexically_relative(abs_dir);
    if (rel.empty() || *rel.begin() == "..") return abs_p.generic_string();
    return rel.generic_string();
}

}  // namespace

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
    const json doc = parse_json(text, "manifest");
    const json& entries = require_field(doc, "entries", "manifest");
    if (!entries.is_array()) throw FormatError("manifest.entries: expected an array");
    Manifest m;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string where = "manifest.entries[" + std::to_string(i) + "]";
        const json& e = entries[i];
        ManifestEntry entry;
        entry.id = require_string(e, "id", where);
        if (!seen.insert(entry.id).second) throw FormatError(where + ".id: duplicate id \"" + entry.id + "\"");
        entry.pre = resolve(base_dir, require_string(e, "pre", where));
        entry.post = resolve(base_dir, require_string(e, "post", where));
        entry.labels = resolve(base_dir, require_string(e, "labels", where));
        const std::string split = require_string(e, "split", where);
        if (split == "train") {
            entry.split = Split::Train;
        } else if (split == "test") {
            entry.split = Split::Test;
        } else {
            throw FormatError(where + ".split: unknown split \"" + split + "\" (allowed values: train, test)");
        }
        m.entries.push_back(std::move(entry));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return parse_manifest(text, path.parent_path());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
    const auto dir = path.parent_path();
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : manifest.entries) {
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["pre"] = relative_to(e.pre, dir);
        j["post"] = relative_to(e.post, dir);
        j["labels"] = relative_to(e.labels, dir);
        j["split"] = std::string(to_string(e.split));
        entries.push_back(std::move(j));
    }
    nlohmann::ordered_json doc;
    doc["entries"] = std::move(entries);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out.flush()) throw IoError("cannot write " + path.string());
}

// --- WKT ----------------------------------------------------------------------

namespace {

class WktParser {
public:
    explicit WktParser(std::string_view s) : s_(s) {}

    std::vector<Point2> polygon(std::size_t* holes) {
        skip_ws();
        keyword("POLYGON");
        skip_ws();
        expect('(');
        std::vector<Point2> outer = ring();
        std::size_t extra = 0;
        skip_ws();
        while (peek() == ',') {
            ++pos_;
            ring();
            ++extra;
            skip_ws();
        }
        expect(')');
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing characters");
        if (holes) *holes += extra;
        return outer;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("malformed WKT at character offset " + std::to_string(pos_) + ": " + what);
    }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    void keyword(std::string_view kw) {
        for (char k : kw) {
            if (std::toupper(static_cast<unsigned char>(peek())) != k) fail("expected " + std::string(kw));
            ++pos_;
        }
    }
    double number() {
        skip_ws();
        double v = 0.0;
        const char* begin = s_.data() + pos_;
        const char* end = s_.data() + s_.size();
        if (begin != end && *begin == '+') ++begin;
        const auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr == begin) fail("expected a number");
        if (!std::isfinite(v)) fail("non-finite coordinate");
        pos_ = static_cast<std::size_t>(ptr - s_.data());
        return v;
    }
    std::vector<Point2> ring() {
        expect('(');
        std::vector<Point2> pts;
        for (;;) {
            const double x = number();
            const double y = number();
            pts.push_back({x, y});
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            break;
        }
        const std::size_t at = pos_;
        expect(')');
        if (pts.front() != pts.back()) pts.push_back(pts.front());
        std::set<std::pair<double, double>> distinct;
        for (const auto& p : pts) distinct.insert({p.x, p.y});
        if (distinct.size() < 3) {
            pos_ = at;
            fail("malformed ring: fewer than 3 distinct vertices");
        }
        return pts;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

DamageLabel parse_subtype(const std::string& s, bool* unclassified) {
    *unclassified = false;
    if (s == "no-damage") return DamageLabel::NoDamage;
    if (s == "minor-damage") return DamageLabel::Minor;
    if (s == "major-damage") return DamageLabel::Major;
    if (s == "destroyed") return DamageLabel::Destroyed;
    if (s == "un-classified") {
        *unclassified = true;
        return DamageLabel::Background;
    }
    throw FormatError("unknown subtype \"" + s +
                      "\" (expected no-damage, minor-damage, major-damage, destroyed or un-classified)");
}

}  // namespace

std::vector<Point2> parse_wkt_polygon(std::string_view wkt, std::size_t* holes) {
    return WktParser(wkt).polygon(holes);
}

std::string to_wkt(const std::vector<Point2>& ring) {
    std::string out = "POLYGON ((";
    char buf[64];
    for (std::size_t i = 0; i < ring.size(); ++i) {
        if (i) out += ", ";
        std::snprintf(buf, sizeof buf, "%.17g %.17g", ring[i].x, ring[i].y);
        out += buf;
    }
    out += "))";
    return out;
}

LabelFile parse_label_text(std::string_view text) {
    const json doc = parse_json(text, "label file");
    const json* features = nullptr;
    if (doc.is_object()) {
        auto it = doc.find("features");
        if (it != doc.end()) {
            if (it->is_array()) {
                features = &*it;
            } else if (it->is_object() && it->contains("xy") && (*it)["xy"].is_array()) {
                features = &(*it)["xy"];
            }
        }
    }
    if (!features) throw FormatError("label file: expected a \"features\" array or \"features\".\"xy\" array");

    LabelFile out;
    for (std::size_t i = 0; i < features->size(); ++i) {
        const std::string where = "label file feature " + std::to_string(i);
        const json& f = (*features)[i];
        const json& props = require_field(f, "properties", where);
        const std::string subtype = require_string(props, "subtype", where + ".properties");
        bool unclassified = false;
        DamageLabel label;
        try {
            label = parse_subtype(subtype, &unclassified);
        } catch (const FormatError& e) {
            throw FormatError(where + ": " + e.what());
        }
        if (unclassified) {
            ++out.skipped_unclassified;
            continue;
        }
        const std::string wkt = require_string(f, "wkt", where);
        LabeledPolygon poly;
        try {
            poly.ring = parse_wkt_polygon(wkt, &out.ignored_holes);
        } catch (const FormatError& e) {
            throw FormatError(where + ": " + e.what());
        }
        poly.subtype = label;
        out.polygons.push_back(std::move(poly));
    }
    return out;
}

LabelFile parse_label_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return parse_label_text(text);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

// --- rasterisation --------------------------------------------------------------

namespace {

// x at which edge (a, b) crosses the horizontal line y; caller guarantees a.y != b.y.
inline double crossing_x(const Point2& a, const Point2& b, double y) {
    return (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x;
}

// Half-open rule: an edge counts when y lies in [min(a.y, b.y), max(a.y, b.y)).
inline bool edge_spans(const Point2& a, const Point2& b, double y) { return (a.y > y) != (b.y > y); }

}  // namespace

bool point_in_ring(const std::vector<Point2>& ring, double x, double y) {
    bool inside = false;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        if (edge_spans(ring[i], ring[j], y) && x < crossing_x(ring[i], ring[j], y)) inside = !inside;
    }
    return inside;
}

LabelMask rasterize(const std::vector<LabeledPolygon>& polygons, std::size_t height, std::size_t width) {
    LabelMask mask(height, width);
    std::vector<double> xs;
    for (const auto& poly : polygons) {
        const auto& ring = poly.ring;
        if (ring.size() < 3) continue;
        double ymin = ring[0].y, ymax = ring[0].y;
        for (const auto& p : ring) {
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        const double first_row = std::max(0.0, std::floor(ymin - 0.5));
        const double last_row = std::min(static_cast<double>(height) - 1.0, std::ceil(ymax));
        for (double rowf = first_row; rowf <= last_row; rowf += 1.0) {
            const auto row = static_cast<std::size_t>(rowf);
            const double yc = rowf + 0.5;
            xs.clear();
            for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++)
                if (edge_spans(ring[i], ring[j], yc)) xs.push_back(crossing_x(ring[i], ring[j], yc));
            std::sort(xs.begin(), xs.end());
            // A centre cx is inside iff an odd number of crossings lie strictly to
            // its right, i.e. xs[2k] <= cx < xs[2k+1].
            for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
                const double lo = xs[k], hi = xs[k + 1];
                if (!(hi > 0.5) || lo >= static_cast<double>(width)) continue;
                std::size_t col = lo <= 0.5 ? 0 : static_cast<std::size_t>(std::max(0.0, std::floor(lo - 0.5)));
                while (col < width && static_cast<double>(col) + 0.5 < lo) ++col;
                for (; col < width && static_cast<double>(col) + 0.5 < hi; ++col) mask.at(row, col) = poly.subtype;
            }
        }
    }
    return mask;
}

LabelMask load_labels(const std::filesystem::path& path, std::size_t height, std::size_t width) {
    if (path.extension() == ".json") return rasterize(parse_label_json(path).polygons, height, width);
    return load_mask(path);
}

}  // namespace ip2cp

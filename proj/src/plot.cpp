#include "ip2cp/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace ip2cp {
namespace {

std::string fmt(double v, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

}  // namespace

std::string scatter_csv(std::span<const ScatterPoint> points) {
    std::string out = "id,label,x,y\n";
    for (const auto& p : points)
        out += p.id + "," + std::string(to_string(p.label)) + "," + fmt(p.x, 9) + "," + fmt(p.y, 9) + "\n";
    return out;
}

Bounds scatter_bounds(std::span<const ScatterPoint> points) {
    if (points.empty()) return {-1.0, 1.0, -1.0, 1.0};
    Bounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : points) {
        b.xmin = std::min(b.xmin, p.x);
        b.xmax = std::max(b.xmax, p.x);
        b.ymin = std::min(b.ymin, p.y);
        b.ymax = std::max(b.ymax, p.y);
    }
    auto widen = [](double& lo, double& hi) {
        double span = hi - lo;
        if (span <= 0.0) {
            lo -= 1.0;
            hi += 1.0;
            return;
        }
        lo -= 0.05 * span;
        hi += 0.05 * span;
    };
    widen(b.xmin, b.xmax);
    widen(b.ymin, b.ymax);
    return b;
}

std::string scatter_svg(std::span<const ScatterPoint> points, const std::string& title) {
    const Bounds b = scatter_bounds(points);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + (x - b.xmin) / (b.xmax - b.xmin) * pw; };
    auto sy = [&](double y) { return kTop + (b.ymax - y) / (b.ymax - b.ymin) * ph; };

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + escape_xml(title) + "</text>\n";
    s += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(pw) + "\" height=\"" +
         fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = b.xmin + (b.xmax - b.xmin) * i / 4.0;
        const double fy = b.ymin + (b.ymax - b.ymin) * i / 4.0;
        s += "<text x=\"" + fixed(sx(fx)) + "\" y=\"" + fixed(kTop + ph + 18) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(fx, 3) + "</text>\n";
        s += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(sy(fy) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(fy, 3) + "</text>\n";
    }
    s += "<g stroke=\"none\" fill-opacity=\"0.8\">\n";
    for (const auto& p : points) {
        const char* color = p.label == BinaryLabel::NoDamage ? "red" : "green";
        s += "<circle cx=\"" + fixed(sx(p.x)) + "\" cy=\"" + fixed(sy(p.y)) + "\" r=\"3\" fill=\"" + color +
             "\"><title>" + escape_xml(p.id) + "</title></circle>\n";
    }
    s += "</g>\n";
    const double ly = kHeight - 14;
    s += "<circle cx=\"" + fixed(kLeft + 10) + "\" cy=\"" + fixed(ly - 4) + "\" r=\"4\" fill=\"red\"/>\n";
    s += "<text x=\"" + fixed(kLeft + 20) + "\" y=\"" + fixed(ly) +
         "\" font-family=\"sans-serif\" font-size=\"12\">No damage</text>\n";
    s += "<circle cx=\"" + fixed(kLeft + 120) + "\" cy=\"" + fixed(ly - 4) + "\" r=\"4\" fill=\"green\"/>\n";
    s += "<text x=\"" + fixed(kLeft + 130) + "\" y=\"" + fixed(ly) +
         "\" font-family=\"sans-serif\" font-size=\"12\">With damage</text>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace ip2cp

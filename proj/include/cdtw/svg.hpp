#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cell.hpp"
#include "geometry.hpp"

namespace cdtw {

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);
    return buf;
}

// Part of the line inside [0,w]x[0,h].
inline std::optional<std::pair<Point2, Point2>> clip_line(const Line& l, double w, double h) {
    double lo = -INFINITY, hi = INFINITY;
    const double p[2] = {l.point.x, l.point.y}, d[2] = {l.dir.x, l.dir.y}, ext[2] = {w, h};
    for (int a = 0; a < 2; ++a) {
        if (d[a] == 0.0) {
            if (p[a] < 0.0 || p[a] > ext[a]) return std::nullopt;
            continue;
        }
        double t0 = -p[a] / d[a], t1 = (ext[a] - p[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0), hi = std::min(hi, t1);
    }
    if (!(hi >= lo)) return std::nullopt;
    return std::make_pair(l.point + lo * l.dir, l.point + hi * l.dir);
}

} // namespace detail

struct SvgOptions {
    double width_px = 800;
    double margin_px = 20;
    std::vector<Point2> path;  // parameter-space overlay, may be empty
};

// Parameter space with y pointing up: cells, valleys, diagonal lines and an optional path.
inline std::string render_parameter_space(const Curve& Pc, const Curve& Qc, const PolygonalNorm& norm,
                                          const SvgOptions& opt = {}) {
    const ArcLenParam P(Pc, norm), Q(Qc, norm);
    const double W = P.total(), H = Q.total();
    const double scale = opt.width_px / W;
    const double height_px = H * scale;
    const double m = opt.margin_px;
    using detail::num;
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(opt.width_px + 2 * m) + "\" height=\"" +
         num(height_px + 2 * m) + "\">\n";
    s += "<style>.cell-grid{fill:none;stroke:#888;stroke-width:1px}.valley{stroke:#c0392b;stroke-width:2px}"
         ".diagonal{stroke:#2e86c1;stroke-width:0.5px;stroke-dasharray:3 2}.oracle-path{fill:none;stroke:#000;"
         "stroke-width:1.5px}</style>\n";
    s += "<g transform=\"translate(" + num(m) + "," + num(m + height_px) + ") scale(" + num(scale) + "," + num(-scale) +
         ")\" vector-effect=\"non-scaling-stroke\">\n";
    auto line = [&](const char* cls, Point2 a, Point2 b, std::size_t i, std::size_t j) {
        s += "<line class=\"" + std::string(cls) + "\" data-cell=\"" + std::to_string(i) + "," + std::to_string(j) +
             "\" x1=\"" + num(a.x) + "\" y1=\"" + num(a.y) + "\" x2=\"" + num(b.x) + "\" y2=\"" + num(b.y) +
             "\" vector-effect=\"non-scaling-stroke\"/>\n";
    };
    for (std::size_t j = 0; j < Q.segments(); ++j)
        for (std::size_t i = 0; i < P.segments(); ++i) {
            const CellFrame f = build_cell_frame(P, Q, i, j);
            const Point2 o{f.a1, f.a2};
            s += "<rect class=\"cell-grid\" data-cell=\"" + std::to_string(i) + "," + std::to_string(j) + "\" x=\"" +
                 num(f.a1) + "\" y=\"" + num(f.a2) + "\" width=\"" + num(f.width()) + "\" height=\"" + num(f.height()) +
                 "\" vector-effect=\"non-scaling-stroke\"/>\n";
            for (const Line& l : diagonal_lines(f, norm))
                if (auto c = detail::clip_line(l, f.width(), f.height())) line("diagonal", o + c->first, o + c->second, i, j);
            if (auto c = detail::clip_line(compute_valley(f, norm).line(), f.width(), f.height()))
                line("valley", o + c->first, o + c->second, i, j);
        }
    if (opt.path.size() >= 2) {
        s += "<polyline class=\"oracle-path\" vector-effect=\"non-scaling-stroke\" points=\"";
        for (std::size_t k = 0; k < opt.path.size(); ++k) {
            if (k) s += ' ';
            s += num(opt.path[k].x) + "," + num(opt.path[k].y);
        }
        s += "\"/>\n";
    }
    s += "</g>\n</svg>\n";
    return s;
}

} // namespace cdtw

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "geometry.hpp"

namespace cdtw {

enum class Classification { Codirectional, Opposite, NonParallel };

inline const char* classification_name(Classification c) {
    switch (c) {
    case Classification::Codirectional: return "codirectional";
    case Classification::Opposite: return "opposite";
    case Classification::NonParallel: return "nonparallel";
    }
    return "?";
}

// One cell of the parameter space in local coordinates z in [0,w]x[0,h]:
// phi(z) = P(a1 + z1) - Q(a2 + z2) = phi_linear z + phi_offset.
struct CellFrame {
    double a1 = 0, b1 = 0, a2 = 0, b2 = 0;
    Mat2 phi_linear;
    Point2 phi_offset;
    Classification classification = Classification::NonParallel;
    Mat2 phi_inv;   // NonParallel only
    Point2 center;  // phi^-1(0), NonParallel only
    double eps_g = 1e-9;

    double width() const { return b1 - a1; }
    double height() const { return b2 - a2; }
    Point2 phi(Point2 z) const { return phi_linear * z + phi_offset; }
    Point2 phi_inverse(Point2 w) const { return phi_inv * (w - phi_offset); }
    bool parallel() const { return classification != Classification::NonParallel; }
};

struct Line {
    Point2 point;
    Point2 dir;
};

inline bool same_line(const Line& l, const Line& m, double tol) {
    const double dl = norm2(l.dir), dm = norm2(m.dir);
    if (std::abs(cross(l.dir, m.dir)) > 1e-12 * dl * dm) return false;
    return std::abs(cross(l.dir, m.point - l.point)) <= tol * dl;
}

// Zero out direction components that are rounding noise, so lines meant to be
// axis-parallel are exactly so.
inline Point2 snap_direction(Point2 d) {
    const double n = std::max(std::abs(d.x), std::abs(d.y));
    if (std::abs(d.x) <= 1e-13 * n) d.x = 0.0;
    if (std::abs(d.y) <= 1e-13 * n) d.y = 0.0;
    return d;
}

inline CellFrame make_cell_frame(Point2 p0, Point2 wp, Point2 q0, Point2 wq, double a1, double b1, double a2,
                                 double b2, double eps_g) {
    CellFrame f;
    f.a1 = a1, f.b1 = b1, f.a2 = a2, f.b2 = b2;
    f.eps_g = eps_g;
    f.phi_linear = Mat2::columns(wp, -wq);
    f.phi_offset = p0 - q0;
    const double c = cross(wp, wq);
    if (std::abs(c) <= 1e-9 * norm2(wp) * norm2(wq)) {
        f.classification = dot(wp, wq) > 0 ? Classification::Codirectional : Classification::Opposite;
    } else {
        f.classification = Classification::NonParallel;
        f.phi_inv = f.phi_linear.inverse();
        f.center = f.phi_inv * (-f.phi_offset);
    }
    return f;
}

inline CellFrame build_cell_frame(const ArcLenParam& P, const ArcLenParam& Q, std::size_t i, std::size_t j) {
    if (i >= P.segments() || j >= Q.segments()) throw Error(Errc::OutOfDomain, "cell index out of range");
    const double eps_g = 1e-9 * std::max(1.0, bbox_diameter({&P.curve(), &Q.curve()}));
    return make_cell_frame(P.vertex(i), P.direction(i), Q.vertex(j), Q.direction(j), P.prefix_lengths()[i],
                           P.prefix_lengths()[i + 1], Q.prefix_lengths()[j], Q.prefix_lengths()[j + 1], eps_g);
}

// Frame with the roles of the two curves exchanged; local coordinates are swapped.
inline CellFrame swapped(const CellFrame& f) {
    const Point2 wp = f.phi_linear.col0(), wq = -f.phi_linear.col1();
    return make_cell_frame({0, 0}, wq, f.phi_offset, wp, f.a2, f.b2, f.a1, f.b1, f.eps_g);
}

struct Valley {
    Point2 anchor;
    Point2 direction;

    // > 0: z lies above/left of the line.
    double side(Point2 z) const { return cross(direction, z - anchor); }
    double y_at(double x) const { return anchor.y + (x - anchor.x) * direction.y / direction.x; }
    double x_at(double y) const { return anchor.x + (y - anchor.y) * direction.x / direction.y; }
    Line line() const { return {anchor, direction}; }
};

inline Valley swapped(const Valley& v) { return {{v.anchor.y, v.anchor.x}, {v.direction.y, v.direction.x}}; }

// Preimages in the cell of the polygon diagonals through the origin.
inline std::vector<Line> diagonal_lines(const CellFrame& f, const PolygonalNorm& norm) {
    std::vector<Line> out;
    const int half = norm.k() / 2;
    if (f.classification == Classification::NonParallel) {
        for (int r = 1; r <= half; ++r) out.push_back({f.center, snap_direction(f.phi_inv * norm.vertex(r))});
        return out;
    }
    // phi restricted to the relevant anti-diagonal (codirectional) or diagonal (opposite) sweeps a line
    const bool codir = f.classification == Classification::Codirectional;
    const Point2 w = f.phi_linear.col0();
    for (int r = 1; r <= half; ++r) {
        const Point2 u = norm.vertex(r);
        const double den = cross(u, w);
        if (std::abs(den) <= 1e-12 * norm2(u) * norm2(w)) continue;
        const double s = -cross(u, f.phi_offset) / (2.0 * den);
        if (codir)
            out.push_back({{s, -s}, {1.0, 1.0}});
        else
            out.push_back({{s, s}, {1.0, -1.0}});
    }
    return out;
}

struct LineMinimum {
    Point2 point;
    double value;
};

// Minimum of the gauge of the balanced polygon `K` over the line {z : u.z = t}.
inline LineMinimum minimize_on_line(const std::vector<Point2>& K, Point2 u, double t) {
    if (u.x == 0.0 && u.y == 0.0) throw Error(Errc::InvalidDirection, "zero normal");
    if (K.empty()) throw Error(Errc::InvalidDirection, "empty polygon");
    std::size_t best = 0;
    for (std::size_t r = 1; r < K.size(); ++r)
        if (dot(u, K[r]) > dot(u, K[best])) best = r;
    const double ts = dot(u, K[best]);
    if (t == 0.0) return {{0.0, 0.0}, 0.0};
    return {(t / ts) * K[best], std::abs(t / ts)};
}

namespace detail {

// Index in 1..k of the vertex of psi(R_k) (mapped through `E`) maximising c.(E v_r);
// candidates are the two vertices around the maximiser of the ellipse.
inline int argmax_vertex(const PolygonalNorm& norm, const Mat2& E, Point2 c) {
    const Point2 ab = E.transposed() * c;  // c.(E (cos, sin)) = ab.x cos + ab.y sin
    double th = std::atan2(ab.y, ab.x);
    if (th <= 0.0) th += 2.0 * std::numbers::pi;
    int rp = std::clamp(static_cast<int>(std::ceil(th / norm.theta1())), 1, norm.k());
    int rm = rp - 1 == 0 ? norm.k() : rp - 1;
    const double vp = dot(c, E * norm.unit_vertex(rp));
    const double vm = dot(c, E * norm.unit_vertex(rm));
    // antipodal candidates too, in case the ellipse maximiser was numerically flipped
    const int half = norm.k() / 2;
    int best = std::min(rp, rm);
    double bv = best == rp ? vp : vm;
    int other = best == rp ? rm : rp;
    double ov = best == rp ? vm : vp;
    if (ov > bv) best = other, bv = ov;
    for (int r : {rp, rm}) {
        int a = (r + half - 1) % norm.k() + 1;
        double va = dot(c, E * norm.unit_vertex(a));
        if (va > bv) best = a, bv = va;
    }
    return best;
}

} // namespace detail

inline Valley compute_valley(const CellFrame& f, const PolygonalNorm& norm) {
    switch (f.classification) {
    case Classification::Opposite:
        return {{0.5 * f.width(), 0.5 * f.height()}, {1.0, 1.0}};
    case Classification::Codirectional: {
        const Point2 w = f.phi_linear.col0();
        Point2 u{-w.y, w.x};
        if (u.y < 0 || (u.y == 0 && u.x < 0)) u = -u;
        const double t = dot(u, f.phi_offset);
        const int r = detail::argmax_vertex(norm, norm.psi(), u);
        const Point2 vs = norm.vertex(r);
        const Point2 m = (t / dot(u, vs)) * vs;
        const double s = dot(m - f.phi_offset, w) / (2.0 * dot(w, w));
        return {{s, -s}, {1.0, 1.0}};
    }
    case Classification::NonParallel: {
        const Mat2 E = f.phi_inv * norm.psi();
        const int r = detail::argmax_vertex(norm, E, {1.0, 1.0});
        Point2 v = E * norm.unit_vertex(r);
        const double scale = std::max(std::abs(v.x), std::abs(v.y));
        if (!(v.x > 1e-12 * scale && v.y > 1e-12 * scale)) v = {0.5, 0.5};
        return {f.center, v};
    }
    }
    return {};
}

struct PSPath {
    std::vector<Point2> waypoints;
};

namespace detail {

enum class Step : unsigned char { None, Right, Up };

// Combinatorial shape of the path of the optimality theorem for a pair (x, y).
struct InnerPlan {
    bool hits = false;
    Step to_valley = Step::None;    // x -> x^
    Step from_valley = Step::None;  // y^ -> y
    bool corner_br = false;         // miss case: xi = (y1, x2) when true, (x1, y2) otherwise
};

inline InnerPlan plan_inner_path(const Valley& v, Point2 x, Point2 y) {
    InnerPlan p;
    const double s_tl = v.side({x.x, y.y});
    const double s_br = v.side({y.x, x.y});
    p.hits = s_tl >= 0.0 && s_br <= 0.0;
    if (!p.hits) {
        p.corner_br = s_br > 0.0;
        return p;
    }
    const double sx = v.side(x), sy = v.side(y);
    p.to_valley = sx > 0.0 ? Step::Right : (sx < 0.0 ? Step::Up : Step::None);
    p.from_valley = sy > 0.0 ? Step::Up : (sy < 0.0 ? Step::Right : Step::None);
    return p;
}

// Waypoints and the direction of each leg; `Pt` is a point type over a field
// supporting +, -, and scaling by double (plain points or affine forms).
template <class Pt>
struct PlannedPath {
    std::vector<Pt> pts;
    std::vector<Point2> dirs;
};

template <class Pt, class Scalar = decltype(Pt{}.x)>
PlannedPath<Pt> realize_plan(const InnerPlan& p, const Valley& v, const Pt& x, const Pt& y) {
    PlannedPath<Pt> out;
    const Point2 right{1, 0}, up{0, 1};
    auto on_valley_x = [&](const Scalar& yy) { return v.anchor.x + (yy - v.anchor.y) * (v.direction.x / v.direction.y); };
    auto on_valley_y = [&](const Scalar& xx) { return v.anchor.y + (xx - v.anchor.x) * (v.direction.y / v.direction.x); };
    out.pts.push_back(x);
    if (!p.hits) {
        if (p.corner_br) {
            out.pts.push_back(Pt{y.x, x.y});
            out.dirs = {right, up};
        } else {
            out.pts.push_back(Pt{x.x, y.y});
            out.dirs = {up, right};
        }
        out.pts.push_back(y);
        return out;
    }
    Pt xh = x, yh = y;
    if (p.to_valley == Step::Right) xh = Pt{on_valley_x(x.y), x.y};
    if (p.to_valley == Step::Up) xh = Pt{x.x, on_valley_y(x.x)};
    if (p.from_valley == Step::Up) yh = Pt{y.x, on_valley_y(y.x)};
    if (p.from_valley == Step::Right) yh = Pt{on_valley_x(y.y), y.y};
    out.pts = {x, xh, yh, y};
    out.dirs = {p.to_valley == Step::Up ? up : right, v.direction, p.from_valley == Step::Up ? up : right};
    return out;
}

} // namespace detail

inline PSPath optimal_inner_path(const CellFrame& f, const Valley& v, Point2 x, Point2 y) {
    const double tol = f.eps_g;
    if (x.x > y.x + tol || x.y > y.y + tol) throw Error(Errc::EmptyRectangle, "x is not below-left of y");
    y = {std::max(x.x, y.x), std::max(x.y, y.y)};
    PSPath path;
    if (x == y) {
        path.waypoints = {x};
        return path;
    }
    const auto plan = detail::plan_inner_path(v, x, y);
    auto planned = detail::realize_plan<Point2, double>(plan, v, x, y);
    for (Point2& p : planned.pts) p = {std::clamp(p.x, x.x, y.x), std::clamp(p.y, x.y, y.y)};
    for (const Point2& p : planned.pts) {
        if (!path.waypoints.empty()) {
            const Point2 q = path.waypoints.back();
            if (std::abs(p.x - q.x) <= tol && std::abs(p.y - q.y) <= tol) continue;
        }
        path.waypoints.push_back(p);
    }
    if (path.waypoints.back() != y) path.waypoints.back() = y;
    return path;
}

namespace detail {

// Sorted parameters in (0,1) where the segment a->b crosses one of `lines`.
inline void crossing_params(const std::vector<Line>& lines, Point2 a, Point2 b, double eps_g, std::vector<double>& out) {
    out.clear();
    const Point2 d = b - a;
    const double len = norm2(d);
    if (len <= eps_g) return;
    const double lam_tol = eps_g / len;
    for (const Line& l : lines) {
        const double den = cross(l.dir, d);
        if (std::abs(den) <= 1e-12 * norm2(l.dir) * len) continue;
        const double lam = cross(l.dir, l.point - a) / den;
        if (lam > lam_tol && lam < 1.0 - lam_tol) out.push_back(lam);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [&](double p, double q) { return q - p <= lam_tol; }), out.end());
}

} // namespace detail

// Exact cost of the straight monotone segment a->b: integral of gauge(phi) with
// respect to 1-norm arc length.
inline double segment_cost(const CellFrame& f, const PolygonalNorm& norm, Point2 a, Point2 b,
                           const std::vector<Line>& diagonals) {
    const Point2 d = b - a;
    if (d.x < -f.eps_g || d.y < -f.eps_g) throw Error(Errc::InvalidSegment, "segment is not monotone");
    const double l1 = std::max(0.0, d.x) + std::max(0.0, d.y);
    if (l1 == 0.0) return 0.0;
    thread_local std::vector<double> lams;
    detail::crossing_params(diagonals, a, b, f.eps_g, lams);
    double total = 0.0, prev_lam = 0.0, prev_val = norm.gauge(f.phi(a));
    lams.push_back(1.0);
    for (double lam : lams) {
        const double val = lam == 1.0 ? norm.gauge(f.phi(b)) : norm.gauge(f.phi(a + lam * d));
        total += (lam - prev_lam) * l1 * 0.5 * (prev_val + val);
        prev_lam = lam, prev_val = val;
    }
    return total;
}

inline double segment_cost(const CellFrame& f, const PolygonalNorm& norm, Point2 a, Point2 b) {
    return segment_cost(f, norm, a, b, diagonal_lines(f, norm));
}

inline double path_cost(const CellFrame& f, const PolygonalNorm& norm, const PSPath& path) {
    const auto diags = diagonal_lines(f, norm);
    double c = 0.0;
    for (std::size_t i = 1; i < path.waypoints.size(); ++i)
        c += segment_cost(f, norm, path.waypoints[i - 1], path.waypoints[i], diags);
    return c;
}

} // namespace cdtw

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

#include "cell.hpp"
#include "geometry.hpp"
#include "pwq.hpp"

namespace cdtw {

enum class Side { Bottom, Left, Top, Right };
enum class SpaceKind { Adjoining, Opposing };

inline const char* side_name(Side s) {
    switch (s) {
    case Side::Bottom: return "bottom";
    case Side::Left: return "left";
    case Side::Top: return "top";
    case Side::Right: return "right";
    }
    return "?";
}

struct BorderId {
    std::size_t i = 0, j = 0;
    Side side = Side::Bottom;
    double lo = 0, hi = 0;
};

inline BorderId border_of(const CellFrame& f, std::size_t i, std::size_t j, Side s) {
    const bool horizontal = s == Side::Bottom || s == Side::Top;
    return {i, j, s, horizontal ? f.a1 : f.a2, horizontal ? f.b1 : f.b2};
}

// Parameter region of a border pair: rectangle for adjoining borders, triangle s <= t for opposing ones.
struct PropagationSpace {
    BorderId A, B;
    SpaceKind kind = SpaceKind::Adjoining;

    bool contains(double s, double t, double tol = 0.0) const {
        if (s < A.lo - tol || s > A.hi + tol || t < B.lo - tol || t > B.hi + tol) return false;
        return kind == SpaceKind::Adjoining || s <= t + tol;
    }
};

inline Side adjoining_of(Side b) { return b == Side::Top ? Side::Left : Side::Bottom; }
inline Side opposing_of(Side b) { return b == Side::Top ? Side::Bottom : Side::Left; }

inline PropagationSpace make_space(const CellFrame& f, std::size_t i, std::size_t j, Side b, SpaceKind kind) {
    if (b != Side::Top && b != Side::Right) throw Error(Errc::DomainMismatch, "target border must be top or right");
    const Side a = kind == SpaceKind::Adjoining ? adjoining_of(b) : opposing_of(b);
    return {border_of(f, i, j, a), border_of(f, i, j, b), kind};
}

// ---------------------------------------------------------------------------
// Affine forms in (s, t) and bivariate quadratics.

struct Aff {
    double s = 0, t = 0, c = 0;
    double operator()(double ss, double tt) const { return s * ss + t * tt + c; }
};
inline Aff operator+(Aff a, Aff b) { return {a.s + b.s, a.t + b.t, a.c + b.c}; }
inline Aff operator-(Aff a, Aff b) { return {a.s - b.s, a.t - b.t, a.c - b.c}; }
inline Aff operator+(Aff a, double d) { return {a.s, a.t, a.c + d}; }
inline Aff operator+(double d, Aff a) { return {a.s, a.t, a.c + d}; }
inline Aff operator-(Aff a, double d) { return {a.s, a.t, a.c - d}; }
inline Aff operator*(Aff a, double d) { return {a.s * d, a.t * d, a.c * d}; }
inline Aff operator*(double d, Aff a) { return a * d; }

struct AffPt {
    Aff x, y;
    Point2 at(double s, double t) const { return {x(s, t), y(s, t)}; }
};
inline AffPt operator+(AffPt a, AffPt b) { return {a.x + b.x, a.y + b.y}; }
inline AffPt operator-(AffPt a, AffPt b) { return {a.x - b.x, a.y - b.y}; }

// ss s^2 + st s t + tt t^2 + s1 s + t1 t + c
struct Quad2 {
    double ss = 0, st = 0, tt = 0, s1 = 0, t1 = 0, c = 0;

    double operator()(double s, double t) const { return (ss * s + st * t + s1) * s + (tt * t + t1) * t + c; }
    double ds(double s, double t) const { return 2 * ss * s + st * t + s1; }
    double dt(double s, double t) const { return st * s + 2 * tt * t + t1; }
    Quad2& operator+=(const Quad2& o) {
        ss += o.ss, st += o.st, tt += o.tt, s1 += o.s1, t1 += o.t1, c += o.c;
        return *this;
    }
};

inline Quad2 product(Aff a, Aff b) {
    return {a.s * b.s, a.s * b.t + a.t * b.s, a.t * b.t, a.s * b.c + a.c * b.s, a.t * b.c + a.c * b.t, a.c * b.c};
}

// q along s = s0 + a u, t = t0 + u, as a piece in t with origin t0.
inline QuadraticPiece restrict_to_line(const Quad2& q, double s0, double t0, double a, double lo, double hi,
                                       PieceTag tag, int id) {
    QuadraticPiece p;
    p.lo = lo, p.hi = hi, p.origin = t0, p.tag = tag, p.id = id;
    p.c0 = q(s0, t0);
    p.c1 = a * q.ds(s0, t0) + q.dt(s0, t0);
    p.c2 = q.ss * a * a + q.st * a + q.tt;
    return p;
}

// ---------------------------------------------------------------------------
// A cell oriented so that the target border is the right side, x = A(s), y = (w, t).

struct OrientedCell {
    CellFrame frame;
    Valley valley;
    std::vector<Line> diagonals;
    const PolygonalNorm* norm = nullptr;
    double s_offset[2] = {0, 0};  // global = local + offset, per kind (adjoining, opposing)
    double t_offset = 0;

    double w() const { return frame.width(); }
    double h() const { return frame.height(); }

    Point2 source(SpaceKind k, double s) const { return k == SpaceKind::Adjoining ? Point2{s, 0} : Point2{0, s}; }
    Point2 target(double t) const { return {w(), t}; }
    double s_max(SpaceKind k) const { return k == SpaceKind::Adjoining ? w() : h(); }
};

inline OrientedCell orient(const CellFrame& f, const Valley& v, const PolygonalNorm& norm, Side b) {
    OrientedCell c;
    c.norm = &norm;
    if (b == Side::Right) {
        c.frame = f, c.valley = v;
    } else if (b == Side::Top) {
        c.frame = swapped(f), c.valley = swapped(v);
    } else {
        throw Error(Errc::DomainMismatch, "target border must be top or right");
    }
    c.diagonals = diagonal_lines(c.frame, norm);
    c.s_offset[0] = c.frame.a1;
    c.s_offset[1] = c.frame.a2;
    c.t_offset = c.frame.a2;
    return c;
}

// Numeric cost of the optimal path A(s) -> B(t) inside the oriented cell.
inline double inner_cost(const OrientedCell& c, SpaceKind k, double s, double t) {
    const PSPath p = optimal_inner_path(c.frame, c.valley, c.source(k, s), c.target(t));
    double v = 0;
    for (std::size_t i = 1; i < p.waypoints.size(); ++i)
        v += segment_cost(c.frame, *c.norm, p.waypoints[i - 1], p.waypoints[i], c.diagonals);
    return v;
}

namespace detail {

struct Crossing {
    double lam;
    std::size_t line;
};

inline void crossings_with_lines(const std::vector<Line>& lines, Point2 a, Point2 b, double eps_g,
                                 std::vector<Crossing>& out) {
    out.clear();
    const Point2 d = b - a;
    const double len = norm2(d);
    if (len <= eps_g) return;
    const double lam_tol = eps_g / len;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const Line& l = lines[i];
        const double den = cross(l.dir, d);
        if (std::abs(den) <= 1e-12 * norm2(l.dir) * len) continue;
        const double lam = cross(l.dir, l.point - a) / den;
        if (lam > lam_tol && lam < 1.0 - lam_tol) out.push_back({lam, i});
    }
    std::sort(out.begin(), out.end(), [](const Crossing& p, const Crossing& q) { return p.lam < q.lam; });
    out.erase(std::unique(out.begin(), out.end(),
                          [&](const Crossing& p, const Crossing& q) { return q.lam - p.lam <= lam_tol; }),
              out.end());
}

} // namespace detail

// Quadratic in (s,t) equal to the optimal inner cost on the arrangement face
// containing (s0, t0).
inline Quad2 inner_cost_quadratic(const OrientedCell& c, SpaceKind k, double s0, double t0) {
    const Point2 x0 = c.source(k, s0), y0 = c.target(t0);
    const AffPt xa = k == SpaceKind::Adjoining ? AffPt{{1, 0, 0}, {0, 0, 0}} : AffPt{{0, 0, 0}, {1, 0, 0}};
    const AffPt ya{{0, 0, c.w()}, {0, 1, 0}};
    const auto plan = detail::plan_inner_path(c.valley, x0, y0);
    const auto num = detail::realize_plan<Point2, double>(plan, c.valley, x0, y0);
    const auto sym = detail::realize_plan<AffPt, Aff>(plan, c.valley, xa, ya);
    const CellFrame& f = c.frame;
    Quad2 q;
    thread_local std::vector<detail::Crossing> xs;
    thread_local std::vector<Point2> npts;
    thread_local std::vector<AffPt> spts;
    for (std::size_t leg = 0; leg + 1 < num.pts.size(); ++leg) {
        const Point2 a = num.pts[leg], b = num.pts[leg + 1];
        if ((b.x - a.x) + (b.y - a.y) <= f.eps_g) continue;
        const Point2 dir = num.dirs[leg];
        const AffPt sa = sym.pts[leg];
        detail::crossings_with_lines(c.diagonals, a, b, f.eps_g, xs);
        npts.assign(1, a);
        spts.assign(1, sa);
        for (const auto& cr : xs) {
            const Line& l = c.diagonals[cr.line];
            // leg line sa + mu dir meets l: mu = cross(d, p - sa) / cross(d, dir)
            const double den = cross(l.dir, dir);
            if (std::abs(den) <= 1e-12 * norm2(l.dir) * norm2(dir)) continue;
            npts.push_back(a + cr.lam * (b - a));
            const Aff cr_sa = l.dir.x * sa.y - l.dir.y * sa.x;
            const Aff mu = (Aff{0, 0, cross(l.dir, l.point)} - cr_sa) * (1.0 / den);
            spts.push_back({sa.x + mu * dir.x, sa.y + mu * dir.y});
        }
        npts.push_back(b);
        spts.push_back(sym.pts[leg + 1]);
        for (std::size_t p = 0; p + 1 < npts.size(); ++p) {
            const Point2 mid = 0.5 * (npts[p] + npts[p + 1]);
            const Point2 w = f.phi(mid);
            if (w.x == 0.0 && w.y == 0.0) continue;
            const Point2 g = c.norm->cone_functional(c.norm->cone_index(w));
            // F(z) = g . (Phi z + phi0)
            const Point2 G = f.phi_linear.transposed() * g;
            const double g0 = dot(g, f.phi_offset);
            auto F = [&](const AffPt& z) { return z.x * G.x + z.y * G.y + g0; };
            const Aff len = (spts[p + 1].x - spts[p].x) + (spts[p + 1].y - spts[p].y);
            q += product(len, (F(spts[p]) + F(spts[p + 1])) * 0.5);
        }
    }
    return q;
}

// ---------------------------------------------------------------------------
// Slab-decomposed arrangement over the parameter region in oriented local coordinates.

struct STLine {
    double m = 0, q = 0;  // t = m s + q
    double operator()(double s) const { return m * s + q; }
};

struct ArrangementFace {
    std::size_t slab = 0;
    STLine lower, upper;
    Quad2 cost;  // optimum on the source border at s plus inner cost
    Point2 centroid;
};

struct ArrangementSlab {
    double lo = 0, hi = 0;
    std::size_t first_face = 0, face_count = 0;
};

struct PropagationArrangement {
    SpaceKind kind = SpaceKind::Adjoining;
    double s_min = 0, s_max = 0, t_max = 0;
    double s_offset = 0, t_offset = 0;  // global = local + offset
    std::vector<STLine> lines;
    std::vector<double> vertical_lines;
    std::vector<double> slab_bounds;
    std::vector<ArrangementSlab> slabs;
    std::vector<ArrangementFace> faces;

    double lower_boundary(double s) const { return kind == SpaceKind::Adjoining ? 0.0 : s; }
    double area() const {
        double a = 0;
        for (const auto& f : faces) {
            const auto& sl = slabs[f.slab];
            a += 0.5 * (sl.hi - sl.lo) * ((f.upper(sl.lo) - f.lower(sl.lo)) + (f.upper(sl.hi) - f.lower(sl.hi)));
        }
        return a;
    }
};

namespace detail {

inline Quad2 lift(const QuadraticPiece& p, double offset) {
    // p(s + offset) as a quadratic in s
    const double o = p.origin - offset;
    return {p.c2, 0, 0, -2.0 * p.c2 * o + p.c1, 0, (p.c2 * o - p.c1) * o + p.c0};
}

inline void dedupe_sorted(std::vector<double>& v, double tol) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    v.swap(out);
}

} // namespace detail

// Lines of the arrangement, then slabs and faces. `optA` is the optimum
// function of A in global coordinates.
inline PropagationArrangement build_arrangement(const OrientedCell& c, SpaceKind kind, const PiecewiseQuadratic& optA) {
    PropagationArrangement arr;
    arr.kind = kind;
    const double W = c.w(), H = c.h();
    arr.s_max = c.s_max(kind);
    arr.t_max = H;
    arr.s_offset = c.s_offset[kind == SpaceKind::Adjoining ? 0 : 1];
    arr.t_offset = c.t_offset;
    const double dom = std::max(arr.s_max, 1e-300);
    const double geo = std::max({W, H, 1e-300});

    std::vector<Line> ls;
    ls.push_back(c.valley.line());
    for (const Line& l : c.diagonals) {
        bool dup = false;
        for (const Line& m : ls) dup = dup || same_line(l, m, 1e-12 * geo);
        if (!dup) ls.push_back(l);
    }
    std::vector<Point2> specials;
    for (const Line& l : c.diagonals) {
        const Line v = c.valley.line();
        const double den = cross(v.dir, l.dir);
        if (std::abs(den) <= 1e-12 * norm2(v.dir) * norm2(l.dir)) continue;
        const double mu = cross(l.dir, v.point - l.point) / den;
        const Point2 p = v.point + mu * v.dir;
        bool dup = false;
        for (Point2 q : specials) dup = dup || norm2(p - q) <= 1e-12 * geo;
        if (!dup) specials.push_back(p);
    }

    std::vector<double>& V = arr.vertical_lines;
    std::vector<STLine> N;
    V.push_back(0.0);
    V.push_back(arr.s_max);
    N.push_back({0.0, H});
    if (kind == SpaceKind::Adjoining) {
        N.push_back({0.0, 0.0});
        for (const Line& l : ls) {
            const Point2 p = l.point, d = l.dir;
            if (d.y != 0.0) V.push_back(p.x - p.y * d.x / d.y);
            if (d.x != 0.0) {
                const double m = d.y / d.x;
                N.push_back({0.0, p.y + (W - p.x) * m});
                N.push_back({m, p.y - p.x * m});
            } else {
                V.push_back(p.x);
            }
        }
        for (Point2 p : specials) V.push_back(p.x), N.push_back({0.0, p.y});
    } else {
        N.push_back({1.0, 0.0});
        for (const Line& l : ls) {
            const Point2 p = l.point, d = l.dir;
            if (d.x == 0.0) continue;
            const double m = d.y / d.x;
            for (double u : {p.y - p.x * m, p.y + (W - p.x) * m}) V.push_back(u), N.push_back({0.0, u});
        }
        for (Point2 p : specials) V.push_back(p.y), N.push_back({0.0, p.y});
    }
    for (double b : optA.breakpoints()) V.push_back(b - arr.s_offset);

    // drop horizontal lines outside the region and duplicates
    {
        std::vector<STLine> keep;
        for (const STLine& l : N) {
            if (l.m == 0.0 && (l.q < -1e-12 * geo || l.q > H + 1e-12 * geo)) continue;
            bool dup = false;
            for (const STLine& k : keep)
                dup = dup || (std::abs(k.m - l.m) <= 1e-12 * std::max(1.0, std::abs(l.m)) &&
                              std::abs(k.q - l.q) <= 1e-12 * geo);
            if (!dup) keep.push_back(l);
        }
        N.swap(keep);
    }
    arr.lines = N;

    std::vector<double> bounds;
    for (double v : V)
        if (v > 0.0 && v < arr.s_max) bounds.push_back(v);
    for (std::size_t a = 0; a < N.size(); ++a)
        for (std::size_t b = a + 1; b < N.size(); ++b) {
            const double dm = N[a].m - N[b].m;
            if (dm == 0.0) continue;
            const double s = (N[b].q - N[a].q) / dm;
            if (s > 0.0 && s < arr.s_max) bounds.push_back(s);
        }
    bounds.push_back(0.0);
    bounds.push_back(arr.s_max);
    detail::dedupe_sorted(bounds, 1e-12 * dom);
    if (bounds.back() < arr.s_max) bounds.back() = arr.s_max;
    arr.slab_bounds = bounds;

    const auto& optp = optA.pieces();
    std::size_t opt_idx = 0;
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        const double sl = bounds[k], sh = bounds[k + 1];
        ArrangementSlab slab{sl, sh, arr.faces.size(), 0};
        const double mid = 0.5 * (sl + sh);
        const double lb = arr.lower_boundary(mid);
        const double tol = 1e-12 * geo;
        order.clear();
        for (std::size_t i = 0; i < N.size(); ++i) {
            const double v = N[i](mid);
            if (v >= lb - tol && v <= H + tol) order.push_back({v, i});
        }
        std::sort(order.begin(), order.end());
        const double sg = mid + arr.s_offset;
        while (opt_idx + 1 < optp.size() && optp[opt_idx].hi < sg) ++opt_idx;
        const Quad2 base = detail::lift(optp[opt_idx], arr.s_offset);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const double vlo = std::max(order[i].first, lb), vhi = std::min(order[i + 1].first, H);
            if (vhi - vlo <= tol) continue;
            ArrangementFace f;
            f.slab = arr.slabs.size();
            f.lower = N[order[i].second];
            f.upper = N[order[i + 1].second];
            f.centroid = {mid, 0.5 * (vlo + vhi)};
            f.cost = inner_cost_quadratic(c, kind, f.centroid.x, f.centroid.y);
            f.cost += base;
            arr.faces.push_back(f);
        }
        slab.face_count = arr.faces.size() - slab.first_face;
        arr.slabs.push_back(slab);
    }
    return arr;
}

inline PropagationArrangement build_propagation_arrangement(const CellFrame& frame, const PolygonalNorm& norm,
                                                            const Valley& valley, const PropagationSpace& space,
                                                            const PiecewiseQuadratic& optA) {
    const OrientedCell c = orient(frame, valley, norm, space.B.side);
    return build_arrangement(c, space.kind, optA);
}

// ---------------------------------------------------------------------------

struct PropagationStats {
    std::size_t slabs = 0, faces = 0, candidates = 0;
    StackStats stack;
};

struct PropagationOptions {
    double value_scale = 1.0;  // typical magnitude of optimum values, for tolerances
};

namespace detail {

inline void close_gaps(std::vector<QuadraticPiece>& p, double tol) {
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i].lo > p[i - 1].hi && p[i].lo - p[i - 1].hi <= tol) p[i - 1].hi = p[i].lo;
}

// Candidate functions of t for one slab: vertical edges, non-horizontal edges and extremal edges.
inline void slab_candidates(const PropagationArrangement& arr, std::size_t k, std::vector<QuadraticPiece>& out) {
    out.clear();
    const ArrangementSlab& sl = arr.slabs[k];
    const double tiny = 1e-13 * std::max(1.0, arr.t_max);
    const int id = static_cast<int>(k);
    for (std::size_t fi = sl.first_face; fi < sl.first_face + sl.face_count; ++fi) {
        const ArrangementFace& f = arr.faces[fi];
        for (double s : {sl.lo, sl.hi}) {
            const double lo = std::max(f.lower(s), arr.lower_boundary(s)), hi = std::min(f.upper(s), arr.t_max);
            if (hi - lo > tiny) out.push_back(restrict_to_line(f.cost, s, lo, 0.0, lo, hi, PieceTag::VerticalEdge, id));
        }
        // lower edge of every face, plus the upper edge of the top face
        const bool top = fi + 1 == sl.first_face + sl.face_count;
        for (int e = 0; e < (top ? 2 : 1); ++e) {
            const STLine& l = e == 0 ? f.lower : f.upper;
            if (l.m == 0.0) continue;
            const double ta = l(sl.lo), tb = l(sl.hi);
            const double lo = std::min(ta, tb), hi = std::max(ta, tb);
            if (hi - lo <= tiny) continue;
            const double s0 = ta < tb ? sl.lo : sl.hi;
            out.push_back(restrict_to_line(f.cost, s0, lo, 1.0 / l.m, lo, hi, PieceTag::Edge, id));
        }
        // extremal edge: d/ds cost = 0
        const Quad2& q = f.cost;
        if (q.ss > 0.0) {
            const double a = -q.st / (2.0 * q.ss), b = -q.s1 / (2.0 * q.ss);
            if (!std::isfinite(a) || !std::isfinite(b)) continue;
            double lo = -INFINITY, hi = INFINITY;
            // constraint  alpha t >= beta
            auto clip = [&](double alpha, double beta) {
                if (alpha > 0) lo = std::max(lo, beta / alpha);
                else if (alpha < 0) hi = std::min(hi, beta / alpha);
                else if (beta > 0) hi = -INFINITY;
            };
            clip(a, sl.lo - b);                       // a t + b >= s_lo
            clip(-a, b - sl.hi);                      // a t + b <= s_hi
            clip(1.0 - f.lower.m * a, f.lower.m * b + f.lower.q);
            clip(f.upper.m * a - 1.0, -(f.upper.m * b + f.upper.q));
            if (arr.kind == SpaceKind::Opposing) clip(1.0 - a, b);  // t >= s
            lo = std::max(lo, 0.0), hi = std::min(hi, arr.t_max);
            if (hi - lo > tiny) out.push_back(restrict_to_line(q, a * lo + b, lo, a, lo, hi, PieceTag::ExtremalEdge, id));
        }
    }
}

inline PiecewiseQuadratic to_local(const PiecewiseQuadratic& f, double offset) {
    PiecewiseQuadratic g = f;
    for (auto& p : g.pieces()) p.lo -= offset, p.hi -= offset, p.origin -= offset;
    return g;
}

} // namespace detail

// Optimum on the target border from the optimum functions of the two incoming borders.
inline PiecewiseQuadratic propagate_border(const CellFrame& frame, const PolygonalNorm& norm, const Valley& valley,
                                           Side B, const PiecewiseQuadratic& opt_adj, const PiecewiseQuadratic& opt_opp,
                                           const PropagationOptions& opts = {}, PropagationStats* stats = nullptr) {
    const OrientedCell c = orient(frame, valley, norm, B);
    const double dom_tol = 1e-9 * std::max({1.0, c.w(), c.h()});
    auto check = [&](const PiecewiseQuadratic& f, double lo, double hi) {
        if (f.empty() || std::abs(f.lo() - lo) > dom_tol || std::abs(f.hi() - hi) > dom_tol)
            throw Error(Errc::DomainMismatch, "incoming optimum function does not match its border");
    };
    check(opt_adj, c.s_offset[0], c.s_offset[0] + c.w());
    check(opt_opp, c.s_offset[1], c.s_offset[1] + c.h());

    PropagationStats local;
    PropagationStats& st = stats ? *stats : local;
    const double vs = std::max(opts.value_scale, 1e-300);
    const double tie = 1e-12 * vs, improve = 1e-11 * vs, violation = 1e-8 * vs;
    PiecewiseQuadratic S;
    std::vector<QuadraticPiece> cand;
    for (SpaceKind kind : {SpaceKind::Adjoining, SpaceKind::Opposing}) {
        const PiecewiseQuadratic& optA = kind == SpaceKind::Adjoining ? opt_adj : opt_opp;
        const PropagationArrangement arr = build_arrangement(c, kind, optA);
        st.slabs += arr.slabs.size();
        st.faces += arr.faces.size();
        const std::size_t n = arr.slabs.size();
        for (std::size_t step = 0; step < n; ++step) {
            const std::size_t k = kind == SpaceKind::Adjoining ? n - 1 - step : step;
            detail::slab_candidates(arr, k, cand);
            if (cand.empty()) continue;
            st.candidates += cand.size();
            std::sort(cand.begin(), cand.end(), [](const QuadraticPiece& a, const QuadraticPiece& b) { return a.lo < b.lo; });
            auto env = detail::envelope_pieces(cand, tie);
            detail::close_gaps(env, 1e-9 * std::max(1.0, arr.t_max));
            stack_suffix_update(S, PiecewiseQuadratic(std::move(env)), st.stack, improve, violation);
        }
    }
    auto& ps = S.pieces();
    detail::drop_slivers(ps, 1e-12 * std::max(1e-300, c.h()));
    if (!ps.empty()) ps.front().lo = 0.0, ps.back().hi = c.h();
    return detail::to_local(S, -c.t_offset);
}

// ---------------------------------------------------------------------------
// Base cases: borders on the bottom and left side of the parameter space.

namespace detail {

// t -> integral over [0,t] of gauge(M(tau) - F) for the moving curve M.
inline PiecewiseQuadratic sweep_integral(const ArcLenParam& M, Point2 F, const PolygonalNorm& norm) {
    PiecewiseQuadratic out;
    double acc = 0.0;
    std::vector<double> us;
    for (std::size_t i = 0; i < M.segments(); ++i) {
        const double len = M.segment_length(i), pre = M.prefix_lengths()[i];
        const Point2 v0 = M.vertex(i) - F, w = M.direction(i);
        us.assign({0.0, len});
        for (int r = 1; r <= norm.k() / 2; ++r) {
            const Point2 d = norm.vertex(r);
            const double den = cross(d, w);
            if (std::abs(den) <= 1e-12 * norm2(d) * norm2(w)) continue;
            const double u = -cross(d, v0) / den;
            if (u > 1e-13 * len && u < len * (1 - 1e-13)) us.push_back(u);
        }
        std::sort(us.begin(), us.end());
        us.erase(std::unique(us.begin(), us.end()), us.end());
        for (std::size_t p = 0; p + 1 < us.size(); ++p) {
            const double ua = us[p], ub = p + 2 == us.size() ? len : us[p + 1];
            const double ga = norm.gauge(v0 + ua * w), gb = norm.gauge(p + 2 == us.size() ? M.vertex(i + 1) - F : v0 + ub * w);
            const double lo = pre + ua, hi = p + 2 == us.size() ? M.prefix_lengths()[i + 1] : pre + ub;
            QuadraticPiece q;
            q.lo = lo, q.hi = hi, q.origin = lo;
            q.c0 = acc, q.c1 = ga, q.c2 = ub > ua ? 0.5 * (gb - ga) / (ub - ua) : 0.0;
            q.tag = PieceTag::Base;
            q.id = static_cast<int>(i);
            out.push_back(q);
            acc += (ub - ua) * 0.5 * (ga + gb);
        }
    }
    return out;
}

} // namespace detail

// Whole bottom (along P) or left (along Q) side of the parameter space.
inline PiecewiseQuadratic base_side_function(const ArcLenParam& P, const ArcLenParam& Q, const PolygonalNorm& norm,
                                             Side side) {
    if (side == Side::Bottom) return detail::sweep_integral(P, Q.vertex(0), norm);
    if (side == Side::Left) return detail::sweep_integral(Q, P.vertex(0), norm);
    throw Error(Errc::NotABaseBorder, "only bottom and left sides start at the origin");
}

inline PiecewiseQuadratic base_border_function(const ArcLenParam& P, const ArcLenParam& Q, const PolygonalNorm& norm,
                                               const BorderId& b) {
    if (b.side == Side::Bottom && b.j == 0)
        return base_side_function(P, Q, norm, Side::Bottom).restricted(P.prefix_lengths()[b.i], P.prefix_lengths()[b.i + 1]);
    if (b.side == Side::Left && b.i == 0)
        return base_side_function(P, Q, norm, Side::Left).restricted(Q.prefix_lengths()[b.j], Q.prefix_lengths()[b.j + 1]);
    throw Error(Errc::NotABaseBorder, "border is not on the bottom or left side of the parameter space");
}

// ---------------------------------------------------------------------------

struct Telemetry {
    std::size_t cells_x = 0, cells_y = 0;
    std::size_t pieces_total = 0, pieces_max = 0;
    std::size_t slabs = 0, faces = 0, candidates = 0;
    std::size_t pushes = 0, pops = 0;
    double corner_top = 0, corner_right = 0;
    double corner_rel_diff = 0;
    double max_continuity_jump = 0;  // relative to the value scale
    double value_scale = 0;
};

struct ExactOptions {
    unsigned threads = 0;  // 0: hardware concurrency, capped by CDTW_THREADS
    Telemetry* telemetry = nullptr;
    // keep every border function (top and right per cell) for inspection
    std::vector<PiecewiseQuadratic>* tops = nullptr;
    std::vector<PiecewiseQuadratic>* rights = nullptr;
};

inline unsigned thread_budget(unsigned requested) {
    unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("CDTW_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

inline double cdtw_exact(const Curve& Pc, const Curve& Qc, const PolygonalNorm& norm, const ExactOptions& opts = {}) {
    const ArcLenParam P(Pc, norm), Q(Qc, norm);
    const std::size_t n = P.segments(), m = Q.segments();

    double lx = INFINITY, ly = INFINITY, hx = -INFINITY, hy = -INFINITY;
    for (const Curve* c : {&Pc, &Qc})
        for (Point2 p : c->vertices) lx = std::min(lx, p.x), hx = std::max(hx, p.x), ly = std::min(ly, p.y), hy = std::max(hy, p.y);
    const double D = std::max(norm.gauge({hx - lx, hy - ly}), norm.gauge({hx - lx, ly - hy}));
    PropagationOptions popts;
    popts.value_scale = std::max((P.total() + Q.total()) * D, 1e-300);

    const PiecewiseQuadratic base_b = base_side_function(P, Q, norm, Side::Bottom);
    const PiecewiseQuadratic base_l = base_side_function(P, Q, norm, Side::Left);
    std::vector<PiecewiseQuadratic> top(n * m), right(n * m);
    std::vector<PropagationStats> stats(n * m);

    auto run_cell = [&](std::size_t i, std::size_t j) {
        const CellFrame f = build_cell_frame(P, Q, i, j);
        const Valley v = compute_valley(f, norm);
        const PiecewiseQuadratic bottom =
            j == 0 ? base_b.restricted(P.prefix_lengths()[i], P.prefix_lengths()[i + 1]) : top[(j - 1) * n + i];
        const PiecewiseQuadratic left =
            i == 0 ? base_l.restricted(Q.prefix_lengths()[j], Q.prefix_lengths()[j + 1]) : right[j * n + i - 1];
        top[j * n + i] = propagate_border(f, norm, v, Side::Top, left, bottom, popts, &stats[j * n + i]);
        right[j * n + i] = propagate_border(f, norm, v, Side::Right, bottom, left, popts, &stats[j * n + i]);
    };

    const unsigned threads = thread_budget(opts.threads);
    for (std::size_t d = 0; d + 1 < n + m; ++d) {
        std::vector<std::pair<std::size_t, std::size_t>> diag;
        for (std::size_t j = 0; j < m; ++j)
            if (d >= j && d - j < n) diag.push_back({d - j, j});
        if (threads <= 1 || diag.size() <= 1) {
            for (auto [i, j] : diag) run_cell(i, j);
            continue;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr err;
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < std::min<std::size_t>(threads, diag.size()); ++t)
            pool.emplace_back([&] {
                for (std::size_t q; (q = next++) < diag.size();) {
                    if (failed) return;
                    try {
                        run_cell(diag[q].first, diag[q].second);
                    } catch (...) {
                        if (!failed.exchange(true)) err = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);
    }

    const double vt = top[n * m - 1](P.total());
    const double vr = right[n * m - 1](Q.total());
    if (Telemetry* t = opts.telemetry) {
        *t = Telemetry{};
        t->cells_x = n, t->cells_y = m;
        t->value_scale = popts.value_scale;
        for (std::size_t c = 0; c < n * m; ++c) {
            for (const auto* f : {&top[c], &right[c]}) {
                t->pieces_total += f->size();
                t->pieces_max = std::max(t->pieces_max, f->size());
                t->max_continuity_jump = std::max(t->max_continuity_jump, continuity(*f).max_value_jump / popts.value_scale);
            }
            t->slabs += stats[c].slabs, t->faces += stats[c].faces, t->candidates += stats[c].candidates;
            t->pushes += stats[c].stack.pushes, t->pops += stats[c].stack.pops;
        }
        t->corner_top = vt, t->corner_right = vr;
        t->corner_rel_diff = std::abs(vt - vr) / std::max({std::abs(vt), std::abs(vr), 1e-12 * popts.value_scale});
    }
    if (opts.tops) *opts.tops = top;
    if (opts.rights) *opts.rights = right;
    return vt;
}

struct ApproxResult {
    double value = 0;
    int k_used = 4;
    double lower = 0, upper = 0;
};

inline ApproxResult cdtw_approx_euclidean(const Curve& P, const Curve& Q, double eps, const ExactOptions& opts = {}) {
    const int k = choose_k_for_epsilon(eps);
    const PolygonalNorm norm(k, Mat2::identity());
    ApproxResult r;
    r.k_used = k;
    r.value = cdtw_exact(P, Q, norm, opts);
    const double c = std::cos(std::numbers::pi / k);
    r.lower = r.value * c * c;
    r.upper = r.value;
    return r;
}

} // namespace cdtw

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "cell.hpp"
#include "geometry.hpp"

namespace cdtw {

using NormEval = std::function<double(Point2)>;

inline NormEval euclidean_eval() { return EuclideanNorm{}; }
inline NormEval gauge_eval(const PolygonalNorm& n) {
    return [n](Point2 z) { return n.gauge(z); };
}

struct GridSpec {
    double h = 0.01;
    NormEval norm_eval = euclidean_eval();
    std::size_t max_nodes = 10'000'000;
};

struct GridResult {
    double value = 0;
    std::size_t nodes_x = 0, nodes_y = 0;
    std::vector<Point2> path;  // parameter-space polyline, only when requested
};

namespace detail {

// Lattice abscissae along one curve: each segment split into a power of two
// of equal steps no longer than h, so halving h refines the lattice.
inline std::vector<double> lattice(const std::vector<double>& prefix, double h) {
    std::vector<double> out{0.0};
    for (std::size_t i = 0; i + 1 < prefix.size(); ++i) {
        const double len = prefix[i + 1] - prefix[i];
        std::size_t n = 1;
        while (len / static_cast<double>(n) > h * (1 + 1e-12)) n *= 2;
        for (std::size_t k = 1; k < n; ++k) out.push_back(prefix[i] + len * static_cast<double>(k) / static_cast<double>(n));
        out.push_back(prefix[i + 1]);
    }
    return out;
}

} // namespace detail

// Monotone lattice paths with right, up and diagonal steps; trapezoid cost
// weighted by the 1-norm step length.
inline GridResult grid_cdtw_detailed(const Curve& Pc, const Curve& Qc, const GridSpec& spec, bool want_path = false) {
    if (!(spec.h > 0.0)) throw Error(Errc::GridTooLarge, "grid step must be positive");
    const ArcLenParam P(Pc, spec.norm_eval), Q(Qc, spec.norm_eval);
    const auto xs = detail::lattice(P.prefix_lengths(), spec.h);
    const auto ys = detail::lattice(Q.prefix_lengths(), spec.h);
    const std::size_t nx = xs.size(), ny = ys.size();
    if (static_cast<double>(nx) * static_cast<double>(ny) > static_cast<double>(spec.max_nodes))
        throw Error(Errc::GridTooLarge, std::to_string(nx) + "x" + std::to_string(ny) + " nodes exceed the limit of " +
                                            std::to_string(spec.max_nodes));
    std::vector<Point2> px(nx), qy(ny);
    for (std::size_t a = 0; a < nx; ++a) px[a] = P.point_at(xs[a]);
    for (std::size_t b = 0; b < ny; ++b) qy[b] = Q.point_at(ys[b]);

    std::vector<double> prev(nx), cur(nx), dprev(nx), dcur(nx);
    std::vector<std::uint8_t> from;
    if (want_path) from.assign(nx * ny, 0);
    for (std::size_t a = 0; a < nx; ++a) {
        dcur[a] = spec.norm_eval(px[a] - qy[0]);
        cur[a] = a == 0 ? 0.0 : cur[a - 1] + (xs[a] - xs[a - 1]) * 0.5 * (dcur[a] + dcur[a - 1]);
        if (want_path && a > 0) from[a] = 1;
    }
    for (std::size_t b = 1; b < ny; ++b) {
        std::swap(prev, cur);
        std::swap(dprev, dcur);
        const double dy = ys[b] - ys[b - 1];
        for (std::size_t a = 0; a < nx; ++a) {
            const double d = spec.norm_eval(px[a] - qy[b]);
            dcur[a] = d;
            double best = prev[a] + dy * 0.5 * (d + dprev[a]);
            std::uint8_t mv = 2;
            if (a > 0) {
                const double dx = xs[a] - xs[a - 1];
                const double r = cur[a - 1] + dx * 0.5 * (d + dcur[a - 1]);
                if (r < best) best = r, mv = 1;
                const double g = prev[a - 1] + (dx + dy) * 0.5 * (d + dprev[a - 1]);
                if (g < best) best = g, mv = 3;
            }
            cur[a] = best;
            if (want_path) from[b * nx + a] = mv;
        }
    }
    GridResult r;
    r.value = cur[nx - 1];
    r.nodes_x = nx, r.nodes_y = ny;
    if (want_path) {
        std::size_t a = nx - 1, b = ny - 1;
        r.path.push_back({xs[a], ys[b]});
        while (a > 0 || b > 0) {
            const std::uint8_t mv = from[b * nx + a];
            if (mv == 1 || mv == 3) --a;
            if (mv == 2 || mv == 3) --b;
            r.path.push_back({xs[a], ys[b]});
        }
        std::reverse(r.path.begin(), r.path.end());
    }
    return r;
}

inline double grid_cdtw(const Curve& P, const Curve& Q, const GridSpec& spec) {
    return grid_cdtw_detailed(P, Q, spec).value;
}

// Along the anti-diagonal through z the distance must fall towards z and rise after it.
inline bool sink_check(const CellFrame& f, const NormEval& d, Point2 z, double half_width, int samples) {
    if (samples < 3) samples = 3;
    std::vector<double> v(2 * samples - 1);
    double scale = 0;
    for (int i = 0; i < 2 * samples - 1; ++i) {
        const double t = half_width * (static_cast<double>(i) / (samples - 1) - 1.0);
        v[i] = d(f.phi({z.x + t, z.y - t}));
        scale = std::max(scale, std::abs(v[i]));
    }
    const double slack = f.eps_g * std::max(1.0, scale);
    for (int i = 1; i < samples; ++i)
        if (v[i] > v[i - 1] + slack) return false;
    for (int i = samples; i < 2 * samples - 1; ++i)
        if (v[i] < v[i - 1] - slack) return false;
    return true;
}

// Cheapest right/up staircase on a steps x steps lattice over [x, y].
inline double incell_bruteforce(const CellFrame& f, const PolygonalNorm& norm, Point2 x, Point2 y, int steps) {
    if (steps < 1 || steps > 3000) throw Error(Errc::GridTooLarge, "staircase steps must be in [1, 3000]");
    if (x.x > y.x || x.y > y.y) throw Error(Errc::EmptyRectangle, "x is not below-left of y");
    if (x == y) return 0.0;
    const auto diags = diagonal_lines(f, norm);
    const std::size_t n = static_cast<std::size_t>(steps) + 1;
    auto node = [&](std::size_t a, std::size_t b) {
        const double u = static_cast<double>(a) / steps, v = static_cast<double>(b) / steps;
        return Point2{a == n - 1 ? y.x : x.x + u * (y.x - x.x), b == n - 1 ? y.y : x.y + v * (y.y - x.y)};
    };
    std::vector<double> prev(n), cur(n);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t a = 0; a < n; ++a) {
            if (a == 0 && b == 0) { cur[0] = 0.0; continue; }
            double best = std::numeric_limits<double>::infinity();
            const Point2 p = node(a, b);
            if (a > 0) best = std::min(best, cur[a - 1] + segment_cost(f, norm, node(a - 1, b), p, diags));
            if (b > 0) best = std::min(best, prev[a] + segment_cost(f, norm, node(a, b - 1), p, diags));
            cur[a] = best;
        }
        std::swap(prev, cur);
    }
    return prev[n - 1];
}

// Cost of a monotone polyline in the parameter space by composite Simpson
// quadrature, split where the polyline crosses cell boundaries.
inline double sampled_path_cost(const Curve& Pc, const Curve& Qc, const NormEval& d, const std::vector<Point2>& path,
                                int per_piece = 2000) {
    const ArcLenParam P(Pc, d), Q(Qc, d);
    auto integrand = [&](Point2 z) { return d(P.point_at(z.x) - Q.point_at(z.y)); };
    double total = 0.0;
    const int n = std::max(2, per_piece + per_piece % 2);
    for (std::size_t k = 1; k < path.size(); ++k) {
        const Point2 a = path[k - 1], b = path[k];
        const double l1 = std::abs(b.x - a.x) + std::abs(b.y - a.y);
        if (l1 == 0.0) continue;
        std::vector<double> lams{0.0, 1.0};
        for (const auto* pre : {&P.prefix_lengths(), &Q.prefix_lengths()}) {
            const double lo = pre == &P.prefix_lengths() ? a.x : a.y, hi = pre == &P.prefix_lengths() ? b.x : b.y;
            if (hi == lo) continue;
            for (double v : *pre) {
                const double lam = (v - lo) / (hi - lo);
                if (lam > 0.0 && lam < 1.0) lams.push_back(lam);
            }
        }
        std::sort(lams.begin(), lams.end());
        for (std::size_t p = 0; p + 1 < lams.size(); ++p) {
            const double l0 = lams[p], l1p = lams[p + 1];
            const double hstep = (l1p - l0) / n;
            double acc = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double lam = l0 + i * hstep;
                const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                acc += w * integrand(a + lam * (b - a));
            }
            total += acc * hstep / 3.0 * l1;
        }
    }
    return total;
}

} // namespace cdtw

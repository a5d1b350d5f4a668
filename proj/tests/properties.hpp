#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cdtw/propagation.hpp"
#include "test_util.hpp"

namespace cdtw::properties {

struct Tally {
    int cases = 0;
    int failures = 0;
    std::vector<std::string> messages;

    void check(bool ok, const std::string& what) {
        ++cases;
        if (!ok) {
            ++failures;
            if (messages.size() < 20) messages.push_back(what);
        }
    }
};

// Receives the telemetry of every exact run made through run_exact.
inline std::function<void(const Telemetry&)>& exact_observer() {
    static std::function<void(const Telemetry&)> f;
    return f;
}

inline double run_exact(const Curve& P, const Curve& Q, const PolygonalNorm& n, ExactOptions o = {}) {
    Telemetry local;
    if (!o.telemetry) o.telemetry = &local;
    const double v = cdtw_exact(P, Q, n, o);
    if (exact_observer()) exact_observer()(*o.telemetry);
    return v;
}

inline PolygonalNorm random_norm(std::mt19937_64& rng) {
    static const int ks[] = {4, 6, 8, 10, 16, 32};
    return PolygonalNorm(ks[rng() % 6], rng() % 2 ? testing_util::random_psi(rng) : Mat2::identity());
}

inline Point2 random_point(std::mt19937_64& rng, double r = 10.0) {
    std::uniform_real_distribution<double> U(-r, r);
    return {U(rng), U(rng)};
}

inline void gauge_homogeneity(std::mt19937_64& rng, int n, Tally& t) {
    std::uniform_real_distribution<double> L(-20, 20);
    for (int i = 0; i < n; ++i) {
        const PolygonalNorm g = random_norm(rng);
        const Point2 z = random_point(rng);
        const double lam = L(rng);
        const double a = g.gauge(lam * z), b = std::abs(lam) * g.gauge(z);
        t.check(std::abs(a - b) <= 1e-12 * std::max(1.0, b), "homogeneity k=" + std::to_string(g.k()));
    }
}

inline void gauge_triangle(std::mt19937_64& rng, int n, Tally& t) {
    for (int i = 0; i < n; ++i) {
        const PolygonalNorm g = random_norm(rng);
        const Point2 z = random_point(rng), w = random_point(rng);
        const double scale = g.gauge(z) + g.gauge(w);
        t.check(g.gauge(z + w) <= scale + 1e-12 * std::max(1.0, scale), "triangle k=" + std::to_string(g.k()));
    }
}

inline void gauge_symmetry(std::mt19937_64& rng, int n, Tally& t) {
    for (int i = 0; i < n; ++i) {
        const PolygonalNorm g = random_norm(rng);
        const Point2 z = random_point(rng);
        t.check(std::abs(g.gauge(-z) - g.gauge(z)) <= 1e-12 * std::max(1.0, g.gauge(z)), "symmetry k=" + std::to_string(g.k()));
    }
}

inline void gauge_diamond_is_l1(std::mt19937_64& rng, int n, Tally& t) {
    const PolygonalNorm g(4, Mat2::identity());
    for (int i = 0; i < n; ++i) {
        const Point2 z = random_point(rng);
        const double l1 = std::abs(z.x) + std::abs(z.y);
        t.check(std::abs(g.gauge(z) - l1) <= 1e-14 * std::max(1.0, l1), "diamond gauge differs from the 1-norm");
    }
}

struct Pair {
    Curve P, Q;
    PolygonalNorm norm;
};

inline Pair random_pair(std::mt19937_64& rng) {
    const int n = 1 + static_cast<int>(rng() % 3), m = 1 + static_cast<int>(rng() % 3);
    return {testing_util::random_curve(rng, n), testing_util::random_curve(rng, m), random_norm(rng)};
}

inline bool rel_close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-12}); }

inline void cdtw_symmetry(std::mt19937_64& rng, int n, Tally& t) {
    for (int i = 0; i < n; ++i) {
        const Pair p = random_pair(rng);
        const double a = run_exact(p.P, p.Q, p.norm), b = run_exact(p.Q, p.P, p.norm);
        t.check(rel_close(a, b, 1e-8), "cdtw symmetry " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

inline void cdtw_translation(std::mt19937_64& rng, int n, Tally& t) {
    for (int i = 0; i < n; ++i) {
        Pair p = random_pair(rng);
        const double a = run_exact(p.P, p.Q, p.norm);
        const Point2 v = random_point(rng, 5.0);
        for (auto* c : {&p.P, &p.Q})
            for (Point2& q : c->vertices) q = q + v;
        const double b = run_exact(p.P, p.Q, p.norm);
        t.check(rel_close(a, b, 1e-9), "cdtw translation " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

inline void cdtw_scaling(std::mt19937_64& rng, int n, Tally& t) {
    std::uniform_real_distribution<double> L(0.1, 10);
    for (int i = 0; i < n; ++i) {
        Pair p = random_pair(rng);
        const double a = run_exact(p.P, p.Q, p.norm);
        const double lam = L(rng);
        for (auto* c : {&p.P, &p.Q})
            for (Point2& q : c->vertices) q = lam * q;
        const double b = run_exact(p.P, p.Q, p.norm);
        t.check(rel_close(lam * lam * a, b, 1e-8), "cdtw scaling " + std::to_string(lam * lam * a) + " vs " + std::to_string(b));
    }
}

// Every border function of a run agrees across its breakpoints within 1e-7 of the value scale.
inline void optimum_continuity(std::mt19937_64& rng, int n, Tally& t) {
    for (int i = 0; i < n; ++i) {
        const Pair p = random_pair(rng);
        Telemetry tel;
        std::vector<PiecewiseQuadratic> tops, rights;
        ExactOptions o;
        o.telemetry = &tel, o.tops = &tops, o.rights = &rights;
        run_exact(p.P, p.Q, p.norm, o);
        const double eps_c = 1e-7 * tel.value_scale;
        bool ok = true;
        for (const auto* fs : {&tops, &rights})
            for (const auto& f : *fs) ok = ok && is_continuous(f, eps_c);
        // neighbouring borders meet at shared cell corners too
        const std::size_t nx = tel.cells_x;
        for (std::size_t c = 0; c < tops.size(); ++c) {
            const std::size_t ci = c % nx;
            ok = ok && std::abs(tops[c](tops[c].hi()) - rights[c](rights[c].hi())) <= eps_c;
            if (ci + 1 < nx) ok = ok && std::abs(tops[c](tops[c].hi()) - tops[c + 1](tops[c + 1].lo())) <= eps_c;
        }
        t.check(ok, "optimum functions not continuous, instance " + std::to_string(i));
    }
}

inline void self_distance_zero(std::mt19937_64& rng, int n, Tally& t) {
    for (int i = 0; i < n; ++i) {
        const Pair p = random_pair(rng);
        Telemetry tel;
        ExactOptions o;
        o.telemetry = &tel;
        const double v = run_exact(p.P, p.P, p.norm, o);
        t.check(std::abs(v) <= 1e-9 * std::max(1.0, tel.value_scale), "cdtw(P,P) = " + std::to_string(v));
    }
}

} // namespace cdtw::properties

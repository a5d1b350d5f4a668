#include <gtest/gtest.h>

#include <random>

#include "cdtw/oracle.hpp"
#include "cdtw/propagation.hpp"
#include "test_util.hpp"

using namespace cdtw;
using namespace cdtw::testing_util;

namespace {

const PolygonalNorm kDiamond(4, Mat2::identity());

struct Instance {
    Curve P, Q;
    PolygonalNorm norm;
};

Instance random_instance(std::mt19937_64& rng, int max_segments = 3) {
    static const int ks[] = {4, 6, 8, 12};
    const int n = 1 + static_cast<int>(rng() % max_segments), m = 1 + static_cast<int>(rng() % max_segments);
    return {random_curve(rng, n), random_curve(rng, m),
            PolygonalNorm(ks[rng() % 4], rng() % 3 == 0 ? random_psi(rng) : Mat2::identity())};
}

// Minimum over s of optA(s) + inner cost, by dense sampling and a local golden-section polish.
double sampled_star(const OrientedCell& c, SpaceKind kind, const PiecewiseQuadratic& optA, double t) {
    const double smax = kind == SpaceKind::Adjoining ? c.w() : t;
    const double off = c.s_offset[kind == SpaceKind::Adjoining ? 0 : 1];
    auto g = [&](double s) { return optA(s + off) + inner_cost(c, kind, s, t); };
    const int N = 400;
    double best = INFINITY, sb = 0;
    for (int i = 0; i <= N; ++i) {
        const double s = smax * i / N;
        if (const double v = g(s); v < best) best = v, sb = s;
    }
    double lo = std::max(0.0, sb - smax / N), hi = std::min(smax, sb + smax / N);
    const double phi = (std::sqrt(5.0) - 1) / 2;
    for (int it = 0; it < 80; ++it) {
        const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        if (g(a) < g(b)) hi = b;
        else lo = a;
    }
    return std::min(best, g(0.5 * (lo + hi)));
}

} // namespace

TEST(BaseBorder, ZeroAtOriginAndMonotone) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 30; ++i) {
        const auto in = random_instance(rng);
        const ArcLenParam P(in.P, in.norm), Q(in.Q, in.norm);
        for (Side s : {Side::Bottom, Side::Left}) {
            const auto f = base_side_function(P, Q, in.norm, s);
            EXPECT_NEAR(f(0.0), 0.0, 1e-15);
            EXPECT_TRUE(is_continuous(f, 1e-12 * std::max(1.0, value_scale(f))));
            double prev = 0;
            for (int k = 0; k <= 100; ++k) {
                const double t = f.hi() * k / 100;
                EXPECT_GE(f(t), prev - 1e-12);
                prev = f(t);
            }
        }
    }
}

TEST(BaseBorder, DerivativeIsTheDistance) {
    std::mt19937_64 rng(32);
    for (int i = 0; i < 20; ++i) {
        const auto in = random_instance(rng);
        const ArcLenParam P(in.P, in.norm), Q(in.Q, in.norm);
        const auto left = base_side_function(P, Q, in.norm, Side::Left);
        const auto bottom = base_side_function(P, Q, in.norm, Side::Bottom);
        for (int k = 1; k <= 50; ++k) {
            const double t = Q.total() * (k - 0.5) / 50, s = P.total() * (k - 0.5) / 50;
            const double h = 1e-6;
            EXPECT_NEAR((left(t + h) - left(t - h)) / (2 * h), in.norm.gauge(P.point_at(0) - Q.point_at(t)), 1e-6);
            EXPECT_NEAR((bottom(s + h) - bottom(s - h)) / (2 * h), in.norm.gauge(P.point_at(s) - Q.point_at(0)), 1e-6);
        }
    }
}

TEST(BaseBorder, RestrictsToCellBorders) {
    const Curve P{{0, 0}, {1, 0}, {1, 1}}, Q{{0, 1}, {2, 1}};
    const ArcLenParam AP(P, kDiamond), AQ(Q, kDiamond);
    const CellFrame f = build_cell_frame(AP, AQ, 1, 0);
    const auto b = base_border_function(AP, AQ, kDiamond, border_of(f, 1, 0, Side::Bottom));
    EXPECT_DOUBLE_EQ(b.lo(), 1.0);
    EXPECT_DOUBLE_EQ(b.hi(), 2.0);
    EXPECT_NEAR(b(1.0), 1.5, 1e-12);  // integral of s + 1 over [0, 1]
    try {
        base_border_function(AP, AQ, kDiamond, border_of(f, 1, 0, Side::Left));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code, Errc::NotABaseBorder);
    }
    try {
        base_border_function(AP, AQ, kDiamond, border_of(f, 1, 0, Side::Top));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code, Errc::NotABaseBorder);
    }
}

TEST(PropagationSpace, Regions) {
    const ArcLenParam P(example_a_P(), kDiamond), Q(example_a_Q(), kDiamond);
    const CellFrame f = build_cell_frame(P, Q, 0, 0);
    const auto adj = make_space(f, 0, 0, Side::Right, SpaceKind::Adjoining);
    EXPECT_EQ(adj.A.side, Side::Bottom);
    EXPECT_TRUE(adj.contains(5, 0.5));
    const auto opp = make_space(f, 0, 0, Side::Right, SpaceKind::Opposing);
    EXPECT_EQ(opp.A.side, Side::Left);
    EXPECT_TRUE(opp.contains(1, 2));
    EXPECT_FALSE(opp.contains(2, 1));
    EXPECT_EQ(make_space(f, 0, 0, Side::Top, SpaceKind::Adjoining).A.side, Side::Left);
    EXPECT_EQ(make_space(f, 0, 0, Side::Top, SpaceKind::Opposing).A.side, Side::Bottom);
}

TEST(Arrangement, ExampleATilesAndMatchesDirectCost) {
    const ArcLenParam P(example_a_P(), kDiamond), Q(example_a_Q(), kDiamond);
    const CellFrame f = build_cell_frame(P, Q, 0, 0);
    const Valley v = compute_valley(f, kDiamond);
    const auto bottom = base_side_function(P, Q, kDiamond, Side::Bottom);
    const auto left = base_side_function(P, Q, kDiamond, Side::Left);
    const auto adj = build_propagation_arrangement(f, kDiamond, v, make_space(f, 0, 0, Side::Right, SpaceKind::Adjoining), bottom);
    EXPECT_GT(adj.faces.size(), 1u);
    EXPECT_NEAR(adj.area(), f.width() * f.height(), 1e-9);
    const auto opp = build_propagation_arrangement(f, kDiamond, v, make_space(f, 0, 0, Side::Right, SpaceKind::Opposing), left);
    EXPECT_NEAR(opp.area(), 0.5 * f.height() * f.height(), 1e-9);
}

TEST(Arrangement, FaceQuadraticsMatchDirectEvaluation) {
    std::mt19937_64 rng(33);
    for (int i = 0; i < 60; ++i) {
        auto in = random_instance(rng, 1);
        if (i % 4 == 3) {  // parallel segments
            const Point2 d = in.P.vertices[1] - in.P.vertices[0];
            in.Q.vertices[1] = in.Q.vertices[0] + (i % 8 == 3 ? 0.7 : -0.6) * d;
        }
        const ArcLenParam P(in.P, in.norm), Q(in.Q, in.norm);
        const CellFrame f = build_cell_frame(P, Q, 0, 0);
        const Valley v = compute_valley(f, in.norm);
        const auto bottom = base_side_function(P, Q, in.norm, Side::Bottom);
        const auto left = base_side_function(P, Q, in.norm, Side::Left);
        for (Side B : {Side::Top, Side::Right}) {
            const OrientedCell c = orient(f, v, in.norm, B);
            for (SpaceKind kind : {SpaceKind::Adjoining, SpaceKind::Opposing}) {
                const bool from_bottom = (B == Side::Right) == (kind == SpaceKind::Adjoining);
                const auto& optA = from_bottom ? bottom : left;
                const auto arr = build_arrangement(c, kind, optA);
                const double area = kind == SpaceKind::Adjoining ? c.w() * c.h() : 0.5 * c.h() * c.h();
                EXPECT_NEAR(arr.area(), area, 1e-9 * std::max(1.0, area));
                for (const auto& face : arr.faces) {
                    const auto& sl = arr.slabs[face.slab];
                    for (double a : {0.5, 0.1, 0.9})
                        for (double b : {0.5, 0.1, 0.9}) {
                            const double s = sl.lo + a * (sl.hi - sl.lo);
                            const double t = face.lower(s) + b * (face.upper(s) - face.lower(s));
                            const double direct = optA(s + arr.s_offset) + inner_cost(c, kind, s, t);
                            EXPECT_NEAR(face.cost(s, t), direct, 1e-7 * std::max(1.0, direct))
                                << "instance " << i << " side " << side_name(B) << " kind " << static_cast<int>(kind);
                        }
                }
            }
        }
    }
}

TEST(PropagateBorder, DomainMismatch) {
    const ArcLenParam P(example_a_P(), kDiamond), Q(example_a_Q(), kDiamond);
    const CellFrame f = build_cell_frame(P, Q, 0, 0);
    const Valley v = compute_valley(f, kDiamond);
    const auto bottom = base_side_function(P, Q, kDiamond, Side::Bottom);
    const auto left = base_side_function(P, Q, kDiamond, Side::Left);
    try {
        propagate_border(f, kDiamond, v, Side::Right, left, bottom);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code, Errc::DomainMismatch);
    }
    try {
        propagate_border(f, kDiamond, v, Side::Left, bottom, left);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code, Errc::DomainMismatch);
    }
}

TEST(PropagateBorder, MatchesSampledMinimisation) {
    std::mt19937_64 rng(34);
    for (int i = 0; i < 25; ++i) {
        auto in = random_instance(rng, 1);
        if (i % 5 == 4) in.Q.vertices[1] = in.Q.vertices[0] - 0.8 * (in.P.vertices[1] - in.P.vertices[0]);
        const ArcLenParam P(in.P, in.norm), Q(in.Q, in.norm);
        const CellFrame f = build_cell_frame(P, Q, 0, 0);
        const Valley v = compute_valley(f, in.norm);
        const auto bottom = base_side_function(P, Q, in.norm, Side::Bottom);
        const auto left = base_side_function(P, Q, in.norm, Side::Left);
        for (Side B : {Side::Top, Side::Right}) {
            const auto& adj = B == Side::Right ? bottom : left;
            const auto& opp = B == Side::Right ? left : bottom;
            const auto res = propagate_border(f, in.norm, v, B, adj, opp);
            EXPECT_TRUE(is_continuous(res, 1e-7 * std::max(1.0, value_scale(res))));
            const OrientedCell c = orient(f, v, in.norm, B);
            for (int k = 0; k <= 20; ++k) {
                const double t = c.h() * k / 20;
                const double want = std::min(sampled_star(c, SpaceKind::Adjoining, adj, t), sampled_star(c, SpaceKind::Opposing, opp, t));
                EXPECT_NEAR(res(t + c.t_offset), want, 1e-6 * std::max(1.0, want)) << "instance " << i << " t=" << t;
            }
        }
    }
}

TEST(CdtwExact, IdenticalCurvesGiveZero) {
    std::mt19937_64 rng(35);
    for (int i = 0; i < 20; ++i) {
        const auto in = random_instance(rng);
        Telemetry t;
        ExactOptions o;
        o.telemetry = &t;
        EXPECT_NEAR(cdtw_exact(in.P, in.P, in.norm, o), 0.0, 1e-9 * std::max(1.0, t.value_scale));
    }
}

TEST(CdtwExact, ParallelUnitSegments) {
    const Curve P{{0, 0}, {1, 0}}, Q{{0, 1}, {1, 1}};
    EXPECT_NEAR(cdtw_exact(P, Q, kDiamond), 2.0, 1e-12);
    GridSpec g;
    g.h = 0.25;
    g.norm_eval = gauge_eval(kDiamond);
    EXPECT_NEAR(grid_cdtw(P, Q, g), 2.0, 1e-12);
}

TEST(CdtwExact, ExampleASandwich) {
    const PolygonalNorm n64(64, Mat2::identity());
    const double v = cdtw_exact(example_a_P(), example_a_Q(), n64);
    EXPECT_GE(v, kSingleCellReference - 1e-7);
    EXPECT_LE(v, kSingleCellReference * std::pow(n64.sandwich_factor(), 2));
}

TEST(CdtwExact, CornerConsistencyAndStackInvariant) {
    std::mt19937_64 rng(36);
    for (int i = 0; i < 100; ++i) {
        const auto in = random_instance(rng);
        Telemetry t;
        ExactOptions o;
        o.telemetry = &t;
        std::vector<PiecewiseQuadratic> tops, rights;
        o.tops = &tops, o.rights = &rights;
        ASSERT_NO_THROW(cdtw_exact(in.P, in.Q, in.norm, o)) << "instance " << i;
        EXPECT_LE(t.corner_rel_diff, 1e-8);
        EXPECT_LE(t.pops, 2 * t.pushes);
        for (const auto* fs : {&tops, &rights})
            for (const auto& f : *fs) EXPECT_TRUE(is_continuous(f, 1e-7 * t.value_scale));
    }
}

TEST(CdtwExact, MonotoneRefinementInK) {
    std::mt19937_64 rng(37);
    for (int i = 0; i < 10; ++i) {
        const auto in = random_instance(rng, 2);
        const double eps[] = {1.0, 0.3, 0.1, 0.03};
        std::vector<std::pair<int, double>> vals;
        for (double e : eps) {
            const int k = choose_k_for_epsilon(e);
            vals.push_back({k, cdtw_exact(in.P, in.Q, PolygonalNorm(k, Mat2::identity()))});
        }
        for (std::size_t a = 0; a < vals.size(); ++a)
            for (std::size_t b = a + 1; b < vals.size(); ++b) {
                const double f = std::pow(1.0 / std::cos(std::numbers::pi / vals[a].first), 2) - 1.0;
                EXPECT_LE(std::abs(vals[a].second - vals[b].second), f * vals[b].second + 1e-8);
            }
    }
}

TEST(CdtwExact, ThreadCountDoesNotChangeResult) {
    std::mt19937_64 rng(38);
    for (int i = 0; i < 5; ++i) {
        const Curve P = random_curve(rng, 4), Q = random_curve(rng, 4);
        const PolygonalNorm n(8, Mat2::identity());
        ExactOptions one, many;
        one.threads = 1, many.threads = 4;
        EXPECT_EQ(cdtw_exact(P, Q, n, one), cdtw_exact(P, Q, n, many));
    }
}

TEST(CdtwApprox, Examples) {
    const Curve P = example_a_P(), Q = example_a_Q();
    const auto same = cdtw_approx_euclidean(P, P, 0.1);
    EXPECT_NEAR(same.value, 0.0, 1e-9);
    EXPECT_NEAR(same.lower, 0.0, 1e-9);
    EXPECT_NEAR(same.upper, 0.0, 1e-9);
    EXPECT_EQ(cdtw_approx_euclidean(P, Q, 1.0).k_used, 4);
    const auto r = cdtw_approx_euclidean(P, Q, 0.01);
    EXPECT_EQ(r.k_used, 64);
    EXPECT_LE(r.lower, kSingleCellReference);
    EXPECT_GE(r.upper, kSingleCellReference);
    EXPECT_LE(r.upper - r.lower, 0.01 * r.value);
    for (double e : {0.0, -0.5}) {
        try {
            cdtw_approx_euclidean(P, Q, e);
            FAIL();
        } catch (const Error& err) {
            EXPECT_EQ(err.code, Errc::InvalidEpsilon);
        }
    }
}

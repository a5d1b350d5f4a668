#include <gtest/gtest.h>

#include <random>

#include "cdtw/oracle.hpp"
#include "cdtw/propagation.hpp"
#include "test_util.hpp"

using namespace cdtw;
using namespace cdtw::testing_util;

namespace {

const PolygonalNorm kDiamond(4, Mat2::identity());

CellFrame example_a_frame(const PolygonalNorm& n) {
    return build_cell_frame(ArcLenParam(example_a_P(), n), ArcLenParam(example_a_Q(), n), 0, 0);
}

} // namespace

TEST(GridCdtw, IdenticalCurvesGiveZero) {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 10; ++i) {
        const Curve P = random_curve(rng, 3);
        GridSpec g;
        g.h = 0.05;
        EXPECT_NEAR(grid_cdtw(P, P, g), 0.0, 1e-12);
        g.norm_eval = gauge_eval(PolygonalNorm(6, Mat2::identity()));
        EXPECT_NEAR(grid_cdtw(P, P, g), 0.0, 1e-12);
    }
}

TEST(GridCdtw, ParallelUnitSegments) {
    GridSpec g;
    g.h = 0.25;
    g.norm_eval = gauge_eval(kDiamond);
    const auto r = grid_cdtw_detailed({{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}, g);
    EXPECT_NEAR(r.value, 2.0, 1e-12);
    EXPECT_EQ(r.nodes_x, 5u);
    EXPECT_EQ(r.nodes_y, 5u);
}

TEST(GridCdtw, ExampleAEuclidean) {
    GridSpec g;
    g.h = 0.01;
    EXPECT_NEAR(grid_cdtw(example_a_P(), example_a_Q(), g), kSingleCellReference, 0.05);
}

TEST(GridCdtw, HalvingNeverIncreases) {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 10; ++i) {
        const Curve P = random_curve(rng, 2), Q = random_curve(rng, 3);
        GridSpec g;
        g.h = 0.1;
        double prev = grid_cdtw(P, Q, g);
        for (int r = 0; r < 4; ++r) {
            g.h /= 2;
            const double v = grid_cdtw(P, Q, g);
            EXPECT_LE(v, prev + 1e-9);
            prev = v;
        }
    }
}

TEST(GridCdtw, ConvergesToExactAtFirstOrder) {
    std::mt19937_64 rng(43);
    for (int i = 0; i < 5; ++i) {
        const Curve P = random_curve(rng, 2), Q = random_curve(rng, 2);
        const PolygonalNorm n(8, Mat2::identity());
        const double exact = cdtw_exact(P, Q, n);
        GridSpec g;
        g.norm_eval = gauge_eval(n);
        g.h = 0.02;
        const double e1 = grid_cdtw(P, Q, g) - exact;
        g.h = 0.005;
        const double e2 = grid_cdtw(P, Q, g) - exact;
        EXPECT_GE(e1, -1e-9);
        EXPECT_GE(e2, -1e-9);
        EXPECT_LE(e2, e1 + 1e-12);
    }
}

TEST(GridCdtw, GuardAndBadStep) {
    GridSpec g;
    g.h = 1e-5;
    try {
        grid_cdtw(example_a_P(), example_a_Q(), g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code, Errc::GridTooLarge);
    }
    g.h = 0;
    EXPECT_THROW(grid_cdtw(example_a_P(), example_a_Q(), g), Error);
}

TEST(GridCdtw, PathIsMonotoneCornerToCorner) {
    GridSpec g;
    g.h = 0.1;
    const auto r = grid_cdtw_detailed(example_a_P(), example_a_Q(), g, true);
    ASSERT_GE(r.path.size(), 2u);
    EXPECT_EQ(r.path.front(), (Point2{0, 0}));
    EXPECT_NEAR(r.path.back().x, 6.0, 1e-12);
    EXPECT_NEAR(r.path.back().y, 5.0, 1e-12);
    for (std::size_t i = 1; i < r.path.size(); ++i) {
        EXPECT_GE(r.path[i].x, r.path[i - 1].x);
        EXPECT_GE(r.path[i].y, r.path[i - 1].y);
    }
    EXPECT_NEAR(sampled_path_cost(example_a_P(), example_a_Q(), euclidean_eval(), r.path, 50), r.value, 0.02);
}

TEST(SinkCheck, Examples) {
    const PolygonalNorm n(4, Mat2::identity());
    const CellFrame fe = build_cell_frame(ArcLenParam(example_a_P(), EuclideanNorm{}),
                                          ArcLenParam(example_a_Q(), EuclideanNorm{}), 0, 0);
    EXPECT_TRUE(sink_check(fe, euclidean_eval(), {2, 1}, 1.0, 21));
    // 2-norm valley of this cell is the same line z1 - z2 = 1
    for (double x : {1.0, 3.5, 6.0}) EXPECT_TRUE(sink_check(fe, euclidean_eval(), {x, x - 1}, 2.0, 21));
    const CellFrame f = example_a_frame(n);
    for (double x : {1.0, 2.0, 4.0, 6.0}) EXPECT_TRUE(sink_check(f, gauge_eval(n), {x, x - 1}, 2.0, 21));
    EXPECT_FALSE(sink_check(f, gauge_eval(n), {0, 4}, 1.0, 21));
}

TEST(IncellBruteforce, Examples) {
    const CellFrame f = example_a_frame(kDiamond);
    const Valley v = compute_valley(f, kDiamond);
    EXPECT_EQ(incell_bruteforce(f, kDiamond, {1, 1}, {1, 1}, 10), 0.0);
    const double opt = path_cost(f, kDiamond, optimal_inner_path(f, v, {0, 0}, {6, 5}));
    const double b60 = incell_bruteforce(f, kDiamond, {0, 0}, {6, 5}, 60);
    EXPECT_GE(b60, opt - 1e-9);
    const double b240 = incell_bruteforce(f, kDiamond, {0, 0}, {6, 5}, 240);
    EXPECT_GE(b240, opt - 1e-9);
    EXPECT_LE(b240 - opt, b60 - opt + 1e-12);
    for (int s : {0, 3001}) {
        try {
            incell_bruteforce(f, kDiamond, {0, 0}, {1, 1}, s);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code, Errc::GridTooLarge);
        }
    }
}

TEST(IncellBruteforce, NeverBeatsOptimalPath) {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> U(0, 1);
    for (int i = 0; i < 40; ++i) {
        const PolygonalNorm n(4 + 2 * static_cast<int>(rng() % 4), rng() % 2 ? random_psi(rng) : Mat2::identity());
        const CellFrame f = build_cell_frame(ArcLenParam(random_curve(rng, 1), n), ArcLenParam(random_curve(rng, 1), n), 0, 0);
        const Valley v = compute_valley(f, n);
        Point2 x{U(rng) * f.width(), U(rng) * f.height()}, y{U(rng) * f.width(), U(rng) * f.height()};
        if (x.x > y.x) std::swap(x.x, y.x);
        if (x.y > y.y) std::swap(x.y, y.y);
        const double opt = path_cost(f, n, optimal_inner_path(f, v, x, y));
        EXPECT_GE(incell_bruteforce(f, n, x, y, 40), opt - 1e-9);
    }
}

TEST(SampledPathCost, MatchesExactPiecewiseLinear) {
    const CellFrame f = example_a_frame(kDiamond);
    const std::vector<Point2> path{{0, 0}, {1, 0}, {6, 5}};
    const double exact = path_cost(f, kDiamond, PSPath{path});
    EXPECT_NEAR(sampled_path_cost(example_a_P(), example_a_Q(), gauge_eval(kDiamond), path), exact, 1e-6);
}

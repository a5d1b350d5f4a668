#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "error.hpp"
#include "geometry.hpp"

namespace cdtw::transcend {

// Two-cell instance whose optimal path bends at a transcendental parameter.
struct ExampleB {
    Curve P{{4, -2}, {1, 2}, {1, -4}};
    Curve Q{{0, 0}, {5, 0}};
    static double first_kink_shift(double s) { return 0.4 * (s - 5.0); }
    static double second_kink_shift(double s) { return 0.5 * (s - 2.0); }
    // bending path: origin -> (s/2, s/2) -> (s/2 + 6, s/2) -> (11, 5)
    static std::vector<Point2> candidate_path(double s) { return {{0, 0}, {s / 2, s / 2}, {s / 2 + 6, s / 2}, {11, 5}}; }
};

namespace detail {

// Adaptive Gauss-Kronrod over [a, b] with the given interior kinks.
inline double integrate(const std::function<double(double)>& f, double a, double b, std::vector<double> kinks = {}) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    std::vector<double> cuts{a};
    std::sort(kinks.begin(), kinks.end());
    for (double k : kinks)
        if (k > a && k < b) cuts.push_back(k);
    cuts.push_back(b);
    double total = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        if (cuts[i + 1] > cuts[i]) total += GK::integrate(f, cuts[i], cuts[i + 1], 15, 1e-13);
    return total;
}

inline void check_range(double s) {
    if (!(s >= 0.0 && s <= 10.0)) throw Error(Errc::OutOfDomain, "s must lie in [0, 10], got " + std::to_string(s));
}

inline double r1(double s) { return std::sqrt(s * s / 4 - s + 5); }
inline double r2(double s) { return std::sqrt(s * s / 5 - 2 * s + 5); }
inline double r3(double s) { return std::sqrt(s * s / 2 - 2 * s + 2); }

} // namespace detail

// Cost of the candidate path bending at parameter s.
inline double eval_C(double s) {
    detail::check_range(s);
    const double i1 = 2.0 / std::sqrt(5.0) * (s <= 5 ? 5 * s - s * s / 2 : 12.5 + (s - 5) * (s - 5) / 2);
    const double i2 = (32.0 - (s >= 2 ? 1.0 : -1.0) * (s - 2) * (s - 2) / 2) / std::sqrt(2.0);
    const double i3 = detail::integrate([s](double t) { return std::sqrt(std::max(0.0, t * t - (2 * s / 5 + 8) * t + (s * s / 5 + 20))); },
                                        s, s / 2 + 5, {s / 5 + 4});
    const double i4 = detail::integrate(
        [s](double t) { return std::sqrt(std::max(0.0, t * t - (s + 14) * t + (s * s / 2 + 6 * s + 50))); }, s / 2 + 5,
        s + 6, {s / 2 + 7});
    return i1 + i2 + i3 + i4;
}

// Derivative of eval_C by quadrature; the sign-function limits at s = 5 and s = 2.
inline double eval_dC(double s) {
    detail::check_range(s);
    const double k = ExampleB::first_kink_shift(s), n = ExampleB::second_kink_shift(s);
    const double first = k == 0.0 ? -0.5
                                  : -0.2 * detail::integrate([k](double t) { return t / std::hypot(t + 2 * k, k); }, 0.0,
                                                             1.25 * (2 - k), {-2 * k});
    const double second = n == 0.0 ? 1.0
                                   : -0.5 * detail::integrate([n](double t) { return t / std::hypot(t + n, n); }, -(n + 2),
                                                              0.0, {-n});
    return first + second;
}

// Algebraic part of the closed-form derivative.
inline double algebraic_part(double s) {
    using detail::r1, detail::r2, detail::r3;
    return -r1(s) / 5 + 2 * r2(s) / 5 - r3(s) / 2 + r1(s) / 2;
}

// Logarithmic part of the closed-form derivative.
inline double log_terms(double s) {
    using detail::r1, detail::r2, detail::r3;
    const double a1 = std::abs((2 * r1(s) + 0.6 * s + 2) / (4 * r2(s) + 8 * (s / 5 - 1)));
    const double a2 = std::abs((2 * r3(s) + s - 2) / (2 * r1(s) - 4));
    return 0.8 * (s / 5 - 1) * std::log(a1) + (s - 2) / 4 * std::log(a2);
}

inline double eval_dC_closed(double s) {
    detail::check_range(s);
    if (s == 2.0 || s == 5.0) throw Error(Errc::SingularPoint, "closed form is singular at s = " + std::to_string(s));
    return algebraic_part(s) + log_terms(s);
}

// Root of algebraic_part on (0, 10).
inline double s_star_zero() {
    const double r10 = std::sqrt(10.0);
    return (1880 * r10 - 3070) / 929 + 60 * std::sqrt(16 * r10 + 61) / (80 * r10 + 269);
}

struct Minimizer {
    double s_star = 0;
    double value = 0;
};

inline Minimizer find_minimizer() {
    double lo = 0.0, hi = 10.0;
    double flo = eval_dC(lo);
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double fm = eval_dC(mid);
        if ((fm < 0) == (flo < 0)) lo = mid, flo = fm;
        else hi = mid;
    }
    const double s = 0.5 * (lo + hi);
    return {s, eval_C(s)};
}

// Single-cell instance with the same valley structure; value from its closed form.
inline double single_cell_closed_form() {
    return 0.5 * std::log(std::sqrt(2.0) - 1) - 1 / std::sqrt(2.0) - 0.5 * std::log(std::sqrt(5.0) - 2) + std::sqrt(5.0) +
           17 * std::sqrt(2.0);
}

inline double single_cell_quadrature() {
    const double a = detail::integrate([](double t) { return std::sqrt(t * t - 4 * t + 5); }, 0.0, 1.0);
    const double b = detail::integrate([](double t) { return std::abs(t - 3) / std::sqrt(2.0); }, 1.0, 11.0, {3.0});
    return a + b;
}

struct ClaimReport {
    double c_prime_at_0 = 0, c_prime_at_10 = 0;
    double s_star = 0, c_at_s_star = 0, c_prime_at_s_star = 0;
    double s_star_zero = 0, c_prime_at_s_star_zero = 0;
    double log_terms_min = 0;
    double c_prime_at_2 = 0, c_prime_at_5 = 0;
    double max_closed_vs_quadrature = 0;
    double single_cell_closed = 0, single_cell_quadrature = 0;
    struct Check {
        std::string name;
        bool pass;
    };
    std::vector<Check> checks;
    bool all_pass = false;
};

inline ClaimReport verify_claims() {
    ClaimReport r;
    auto check = [&](std::string name, bool ok) { r.checks.push_back({std::move(name), ok}); };
    r.c_prime_at_0 = eval_dC(0.0);
    r.c_prime_at_10 = eval_dC(10.0);
    check("C'(0) < 0", r.c_prime_at_0 < 0);
    check("C'(10) > 0", r.c_prime_at_10 > 0);

    const Minimizer m = find_minimizer();
    r.s_star = m.s_star, r.c_at_s_star = m.value;
    r.c_prime_at_s_star = eval_dC(m.s_star);
    check("s* = 2.08 +- 0.02", std::abs(r.s_star - 2.08) <= 0.02);
    check("C'(s*) = 0 +- 1e-8", std::abs(r.c_prime_at_s_star) <= 1e-8);

    r.s_star_zero = s_star_zero();
    r.c_prime_at_s_star_zero = eval_dC_closed(r.s_star_zero);
    check("s*0 in (4, 4.5)", r.s_star_zero > 4 && r.s_star_zero < 4.5);
    check("s*0 = 4.31 +- 0.02", std::abs(r.s_star_zero - 4.31) <= 0.02);
    check("algebraic part at s*0 = 0", std::abs(algebraic_part(r.s_star_zero)) <= 1e-12);
    check("C'(s*0) = 0.80 +- 0.02", std::abs(r.c_prime_at_s_star_zero - 0.80) <= 0.02);

    r.log_terms_min = INFINITY;
    for (int i = 1; i <= 1000; ++i) r.log_terms_min = std::min(r.log_terms_min, log_terms(4.0 + 0.5 * i / 1001.0));
    check("log terms > 0 on (4, 4.5)", r.log_terms_min > 0);

    r.c_prime_at_2 = eval_dC(2.0);
    r.c_prime_at_5 = eval_dC(5.0);
    check("C'(2) != 0 and C'(5) != 0", std::abs(r.c_prime_at_2) > 1e-6 && std::abs(r.c_prime_at_5) > 1e-6);

    for (int i = 0; i < 100; ++i) {
        const double s = 0.05 + 9.9 * i / 99.0;
        if (std::abs(s - 2) < 1e-9 || std::abs(s - 5) < 1e-9) continue;
        r.max_closed_vs_quadrature = std::max(r.max_closed_vs_quadrature, std::abs(eval_dC_closed(s) - eval_dC(s)));
    }
    check("closed-form derivative matches quadrature to 1e-8", r.max_closed_vs_quadrature <= 1e-8);

    r.single_cell_closed = single_cell_closed_form();
    r.single_cell_quadrature = single_cell_quadrature();
    check("single-cell value = 25.85172271 +- 1e-6",
          std::abs(r.single_cell_closed - 25.85172271) <= 1e-6 && std::abs(r.single_cell_closed - r.single_cell_quadrature) <= 1e-8);

    r.all_pass = true;
    for (const auto& c : r.checks) r.all_pass = r.all_pass && c.pass;
    return r;
}

} // namespace cdtw::transcend

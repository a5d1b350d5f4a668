#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curve_io.hpp"
#include "oracle.hpp"
#include "propagation.hpp"
#include "svg.hpp"
#include "transcend.hpp"

namespace cdtw::cli {

enum Exit : int { Ok = 0, Failure = 1, BadInput = 2, TooLarge = 3, Unwritable = 4, ClaimFailed = 5 };

struct NormArgs {
    std::optional<int> k;
    std::vector<double> psi;  // a b c d, row-major
};

struct ComputeArgs {
    std::string p_file, q_file;
    NormArgs norm;
    bool json = false;
    bool telemetry = false;
    unsigned threads = 0;
};

struct ApproxArgs {
    std::string p_file, q_file;
    double eps = 0;
    bool json = false;
};

struct OracleArgs {
    std::string p_file, q_file;
    double h = 0.01;
    std::string norm = "euclid";  // "euclid" or an even k >= 4
    std::vector<double> psi;
    bool json = false;
};

struct VizArgs {
    std::string p_file, q_file;
    NormArgs norm;
    std::string svg_path;
    double h = 0;  // oracle step for the overlay; 0 picks one
};

struct TranscendArgs {
    bool json_only = false;
};

inline std::string fixed12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12f", v == 0.0 ? 0.0 : v);
    return buf;
}

inline PolygonalNorm make_norm(const NormArgs& a) {
    if (!a.k) throw Error(Errc::InvalidK, "--k is required");
    Mat2 psi = Mat2::identity();
    if (!a.psi.empty()) {
        if (a.psi.size() != 4) throw Error(Errc::SingularTransform, "--psi takes four reals a b c d");
        psi = {a.psi[0], a.psi[1], a.psi[2], a.psi[3]};
    }
    return PolygonalNorm(*a.k, psi);
}

inline int exit_code_for(const Error& e) {
    switch (e.code) {
    case Errc::Parse:
    case Errc::InvalidK:
    case Errc::InvalidEpsilon:
    case Errc::InvalidCurve:
    case Errc::SingularTransform: return BadInput;
    case Errc::GridTooLarge: return TooLarge;
    default: return Failure;
    }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Failure;
    }
}

inline int run_compute(const ComputeArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const PolygonalNorm norm = make_norm(a.norm);
        const Curve P = load_curve(a.p_file), Q = load_curve(a.q_file);
        Telemetry t;
        ExactOptions opts;
        opts.threads = a.threads;
        opts.telemetry = &t;
        const double v = cdtw_exact(P, Q, norm, opts);
        if (a.json) {
            nlohmann::json j{{"value", v},
                             {"k", norm.k()},
                             {"pieces", t.pieces_total},
                             {"cells", {t.cells_x, t.cells_y}},
                             {"pieces_max", t.pieces_max},
                             {"pushes", t.pushes},
                             {"pops", t.pops},
                             {"corner_rel_diff", t.corner_rel_diff}};
            out << j.dump() << '\n';
            return Ok;
        }
        out << "value=" << fixed12(v) << '\n';
        out << "pieces=" << t.pieces_total << " cells=" << t.cells_x << "x" << t.cells_y << '\n';
        if (a.telemetry)
            out << "pieces_max=" << t.pieces_max << " slabs=" << t.slabs << " faces=" << t.faces << " pushes=" << t.pushes
                << " pops=" << t.pops << " corner_rel_diff=" << t.corner_rel_diff << '\n';
        return Ok;
    });
}

inline int run_approx(const ApproxArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Curve P = load_curve(a.p_file), Q = load_curve(a.q_file);
        const ApproxResult r = cdtw_approx_euclidean(P, Q, a.eps);
        if (a.json) {
            out << nlohmann::json{{"value", r.value}, {"k_used", r.k_used}, {"lower", r.lower}, {"upper", r.upper}}.dump()
                << '\n';
            return Ok;
        }
        out << "value=" << fixed12(r.value) << '\n'
            << "k_used=" << r.k_used << '\n'
            << "lower=" << fixed12(r.lower) << '\n'
            << "upper=" << fixed12(r.upper) << '\n';
        return Ok;
    });
}

inline int run_oracle(const OracleArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!(a.h > 0.0)) throw Error(Errc::Parse, "--h must be positive");
        GridSpec spec;
        spec.h = a.h;
        if (a.norm != "euclid") {
            NormArgs na;
            try {
                std::size_t used = 0;
                na.k = std::stoi(a.norm, &used);
                if (used != a.norm.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw Error(Errc::Parse, "--norm must be 'euclid' or an integer k");
            }
            na.psi = a.psi;
            spec.norm_eval = gauge_eval(make_norm(na));
        }
        const Curve P = load_curve(a.p_file), Q = load_curve(a.q_file);
        const GridResult r = grid_cdtw_detailed(P, Q, spec);
        if (a.json) {
            out << nlohmann::json{{"value", r.value}, {"nodes", {r.nodes_x, r.nodes_y}}}.dump() << '\n';
            return Ok;
        }
        out << "value=" << fixed12(r.value) << '\n' << "nodes=" << r.nodes_x << "x" << r.nodes_y << '\n';
        return Ok;
    });
}

// Keep only the corners of a lattice path.
inline std::vector<Point2> path_corners(const std::vector<Point2>& p) {
    std::vector<Point2> out;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i > 0 && i + 1 < p.size()) {
            const Point2 d0 = p[i] - p[i - 1], d1 = p[i + 1] - p[i];
            if (std::abs(cross(d0, d1)) <= 1e-12 * norm2(d0) * norm2(d1) && dot(d0, d1) > 0) continue;
        }
        out.push_back(p[i]);
    }
    return out;
}

inline int run_viz(const VizArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const PolygonalNorm norm = make_norm(a.norm);
        const Curve P = load_curve(a.p_file), Q = load_curve(a.q_file);
        GridSpec spec;
        spec.norm_eval = gauge_eval(norm);
        const ArcLenParam AP(P, norm), AQ(Q, norm);
        spec.h = a.h > 0 ? a.h : std::max(AP.total(), AQ.total()) / 400.0;
        SvgOptions so;
        so.path = path_corners(grid_cdtw_detailed(P, Q, spec, true).path);
        const std::string svg = render_parameter_space(P, Q, norm, so);
        std::ofstream f(a.svg_path, std::ios::binary);
        if (!f || !(f << svg) || !f.flush()) {
            err << "error: cannot write " << a.svg_path << '\n';
            return static_cast<int>(Unwritable);
        }
        out << "wrote " << a.svg_path << '\n';
        return static_cast<int>(Ok);
    });
}

inline nlohmann::json report_json(const transcend::ClaimReport& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}});
    return {{"c_prime_at_0", r.c_prime_at_0},
            {"c_prime_at_10", r.c_prime_at_10},
            {"s_star", r.s_star},
            {"c_at_s_star", r.c_at_s_star},
            {"c_prime_at_s_star", r.c_prime_at_s_star},
            {"s_star_zero", r.s_star_zero},
            {"c_prime_at_s_star_zero", r.c_prime_at_s_star_zero},
            {"log_terms_min", r.log_terms_min},
            {"c_prime_at_2", r.c_prime_at_2},
            {"c_prime_at_5", r.c_prime_at_5},
            {"max_closed_vs_quadrature", r.max_closed_vs_quadrature},
            {"single_cell_closed", r.single_cell_closed},
            {"single_cell_quadrature", r.single_cell_quadrature},
            {"checks", checks},
            {"all_pass", r.all_pass}};
}

inline int run_transcend(const TranscendArgs& a, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto r = transcend::verify_claims();
        if (!a.json_only) {
            char buf[160];
            auto line = [&](const char* name, double v) {
                std::snprintf(buf, sizeof buf, "%-28s %.12f\n", name, v);
                out << buf;
            };
            line("C'(0)", r.c_prime_at_0);
            line("C'(10)", r.c_prime_at_10);
            line("s*", r.s_star);
            line("C(s*)", r.c_at_s_star);
            line("C'(s*)", r.c_prime_at_s_star);
            line("s*0", r.s_star_zero);
            line("C'(s*0)", r.c_prime_at_s_star_zero);
            line("min log terms on (4,4.5)", r.log_terms_min);
            line("C'(2)", r.c_prime_at_2);
            line("C'(5)", r.c_prime_at_5);
            line("closed vs quadrature", r.max_closed_vs_quadrature);
            line("single-cell closed form", r.single_cell_closed);
            line("single-cell quadrature", r.single_cell_quadrature);
            for (const auto& c : r.checks) out << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
            out << "all_pass=" << (r.all_pass ? "true" : "false") << '\n';
        }
        out << report_json(r).dump() << '\n';
        return r.all_pass ? Ok : ClaimFailed;
    });
}

} // namespace cdtw::cli

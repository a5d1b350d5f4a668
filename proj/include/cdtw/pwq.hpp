#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <vector>

#include "error.hpp"

namespace cdtw {

struct Quadratic {
    double c2 = 0, c1 = 0, c0 = 0;
    double operator()(double t) const { return (c2 * t + c1) * t + c0; }
};

// Coefficients of t -> q(a t + b).
inline Quadratic substitute_linear(const Quadratic& q, double a, double b) {
    return {q.c2 * a * a, 2.0 * q.c2 * a * b + q.c1 * a, (q.c2 * b + q.c1) * b + q.c0};
}

enum class PieceTag : std::uint8_t { Base, VerticalEdge, Edge, ExtremalEdge, Input };

inline const char* piece_tag_name(PieceTag t) {
    switch (t) {
    case PieceTag::Base: return "base";
    case PieceTag::VerticalEdge: return "vertical-edge";
    case PieceTag::Edge: return "edge";
    case PieceTag::ExtremalEdge: return "extremal-edge";
    case PieceTag::Input: return "input";
    }
    return "?";
}

// c2 u^2 + c1 u + c0 with u = t - origin, valid on [lo, hi]. Keeping the
// origin near the piece avoids cancellation for steep, short pieces.
struct QuadraticPiece {
    double lo = 0, hi = 0;
    double c2 = 0, c1 = 0, c0 = 0;
    double origin = 0;
    PieceTag tag = PieceTag::Input;
    std::int32_t id = -1;

    double operator()(double t) const {
        const double u = t - origin;
        return (c2 * u + c1) * u + c0;
    }
    double derivative(double t) const { return 2.0 * c2 * (t - origin) + c1; }

    QuadraticPiece rebased(double o) const {
        QuadraticPiece p = *this;
        const double d = o - origin;
        p.origin = o;
        p.c1 = 2.0 * c2 * d + c1;
        p.c0 = (c2 * d + c1) * d + c0;
        return p;
    }
    Quadratic absolute() const {
        const QuadraticPiece p = rebased(0.0);
        return {p.c2, p.c1, p.c0};
    }
    bool same_function(const QuadraticPiece& o) const {
        return c2 == o.c2 && c1 == o.c1 && c0 == o.c0 && origin == o.origin;
    }
};

inline QuadraticPiece make_piece(double lo, double hi, Quadratic q, PieceTag tag = PieceTag::Input, int id = -1) {
    return {lo, hi, q.c2, q.c1, q.c0, 0.0, tag, id};
}

class PiecewiseQuadratic {
public:
    PiecewiseQuadratic() = default;
    explicit PiecewiseQuadratic(std::vector<QuadraticPiece> p) : pieces_(std::move(p)) {}

    bool empty() const { return pieces_.empty(); }
    std::size_t size() const { return pieces_.size(); }
    double lo() const { return pieces_.front().lo; }
    double hi() const { return pieces_.back().hi; }
    const std::vector<QuadraticPiece>& pieces() const { return pieces_; }
    std::vector<QuadraticPiece>& pieces() { return pieces_; }
    const QuadraticPiece& operator[](std::size_t i) const { return pieces_[i]; }
    const QuadraticPiece& back() const { return pieces_.back(); }
    QuadraticPiece& back() { return pieces_.back(); }
    void push_back(const QuadraticPiece& p) { pieces_.push_back(p); }
    void pop_back() { pieces_.pop_back(); }

    // Index of the piece used for t (left piece at shared breakpoints).
    std::size_t locate(double t) const {
        if (empty()) throw Error(Errc::OutOfDomain, "empty function");
        const double tol = 1e-9 * std::max(1.0, std::abs(hi()) + std::abs(lo()));
        if (!(t >= lo() - tol && t <= hi() + tol)) throw Error(Errc::OutOfDomain, "t outside the domain");
        auto it = std::lower_bound(pieces_.begin(), pieces_.end(), t,
                                   [](const QuadraticPiece& p, double v) { return p.hi < v; });
        if (it == pieces_.end()) --it;
        return static_cast<std::size_t>(it - pieces_.begin());
    }
    double operator()(double t) const { return pieces_[locate(t)](t); }

    PiecewiseQuadratic restricted(double a, double b) const {
        PiecewiseQuadratic out;
        for (const auto& p : pieces_) {
            const double l = std::max(a, p.lo), h = std::min(b, p.hi);
            if (h > l) {
                QuadraticPiece q = p;
                q.lo = l, q.hi = h;
                out.pieces_.push_back(q);
            }
        }
        return out;
    }

    std::vector<double> breakpoints() const {
        std::vector<double> b;
        for (const auto& p : pieces_) b.push_back(p.lo);
        if (!empty()) b.push_back(hi());
        return b;
    }

private:
    std::vector<QuadraticPiece> pieces_;
};

inline double evaluate(const PiecewiseQuadratic& f, double t) { return f(t); }

// Largest jump at a shared breakpoint (values and abscissae).
struct ContinuityReport {
    double max_value_jump = 0;
    double max_gap = 0;
};

inline ContinuityReport continuity(const PiecewiseQuadratic& f) {
    ContinuityReport r;
    for (std::size_t i = 1; i < f.size(); ++i) {
        const auto &a = f[i - 1], &b = f[i];
        r.max_gap = std::max(r.max_gap, std::abs(b.lo - a.hi));
        r.max_value_jump = std::max(r.max_value_jump, std::abs(a(a.hi) - b(b.lo)));
    }
    return r;
}

inline double value_scale(const PiecewiseQuadratic& f) {
    double s = 0;
    for (const auto& p : f.pieces()) s = std::max({s, std::abs(p(p.lo)), std::abs(p(p.hi))});
    return s;
}

inline bool is_continuous(const PiecewiseQuadratic& f, double eps_c) {
    const auto r = continuity(f);
    const double span = f.empty() ? 1.0 : std::max(1.0, f.hi() - f.lo());
    return r.max_value_jump <= eps_c && r.max_gap <= 1e-9 * span;
}

inline void write_csv(std::ostream& os, const PiecewiseQuadratic& f) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "lo,hi,c2,c1,c0,tag\n" << std::setprecision(17);
    for (const auto& p : f.pieces()) {
        const Quadratic q = p.absolute();
        os << p.lo << ',' << p.hi << ',' << q.c2 << ',' << q.c1 << ',' << q.c0 << ',' << piece_tag_name(p.tag);
        if (p.id >= 0) os << '#' << p.id;
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

namespace detail {

// Real roots of a w^2 + b w + c strictly inside (0, w_max), ascending.
inline int roots_inside(double a, double b, double c, double w_max, double out[2]) {
    const double mag = std::abs(a) * w_max * w_max + std::abs(b) * w_max + std::abs(c);
    if (mag == 0.0) return 0;
    int n = 0;
    auto keep = [&](double r) {
        if (r > 0.0 && r < w_max && std::isfinite(r)) out[n++] = r;
    };
    if (std::abs(a) * w_max * w_max <= 1e-14 * mag) {
        if (std::abs(b) * w_max > 1e-14 * mag) keep(-c / b);
        return n;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc <= 0.0) return 0;
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    keep(q / a);
    if (q != 0.0) keep(c / q);
    if (n == 2 && out[0] > out[1]) std::swap(out[0], out[1]);
    if (n == 2 && out[0] == out[1]) n = 1;
    return n;
}

inline void emit(std::vector<QuadraticPiece>& out, std::vector<char>* src_out, const QuadraticPiece& p, double lo,
                 double hi, char src) {
    if (!(hi > lo)) return;
    if (!out.empty() && out.back().same_function(p) && out.back().tag == p.tag && out.back().id == p.id &&
        out.back().hi == lo && (!src_out || src_out->back() == src)) {
        out.back().hi = hi;
        return;
    }
    QuadraticPiece q = p;
    q.lo = lo, q.hi = hi;
    out.push_back(q);
    if (src_out) src_out->push_back(src);
}

// Pointwise minimum of two sorted, non-overlapping piece lists (gaps allowed).
// `g` replaces `f` only where it is smaller by more than `bias`.
inline std::vector<QuadraticPiece> merge_min(std::span<const QuadraticPiece> f, std::span<const QuadraticPiece> g,
                                             double bias, std::vector<char>* src_out = nullptr) {
    std::vector<double> cuts;
    cuts.reserve(2 * (f.size() + g.size()));
    for (const auto& p : f) cuts.push_back(p.lo), cuts.push_back(p.hi);
    for (const auto& p : g) cuts.push_back(p.lo), cuts.push_back(p.hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<QuadraticPiece> out;
    if (src_out) src_out->clear();
    std::size_t i = 0, j = 0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double u = cuts[c], v = cuts[c + 1];
        const double mid = 0.5 * (u + v);
        while (i < f.size() && f[i].hi < mid) ++i;
        while (j < g.size() && g[j].hi < mid) ++j;
        const QuadraticPiece* pf = (i < f.size() && f[i].lo <= mid) ? &f[i] : nullptr;
        const QuadraticPiece* pg = (j < g.size() && g[j].lo <= mid) ? &g[j] : nullptr;
        if (!pf && !pg) continue;
        if (!pg) { emit(out, src_out, *pf, u, v, 0); continue; }
        if (!pf) { emit(out, src_out, *pg, u, v, 1); continue; }
        const QuadraticPiece fu = pf->rebased(u), gu = pg->rebased(u);
        double r[2];
        const int nr = roots_inside(fu.c2 - gu.c2, fu.c1 - gu.c1, fu.c0 - gu.c0, v - u, r);
        double a = u;
        for (int k = 0; k <= nr; ++k) {
            const double b = k < nr ? u + r[k] : v;
            if (b > a) {
                const double m = 0.5 * (a + b);
                if ((*pg)(m) < (*pf)(m) - bias)
                    emit(out, src_out, *pg, a, b, 1);
                else
                    emit(out, src_out, *pf, a, b, 0);
            }
            a = b;
        }
    }
    return out;
}

// Fold pieces narrower than `min_width` into a neighbour.
inline void drop_slivers(std::vector<QuadraticPiece>& p, double min_width) {
    if (p.size() < 2) return;
    std::vector<QuadraticPiece> out;
    out.reserve(p.size());
    for (const auto& q : p) {
        if (!out.empty() && q.hi - q.lo < min_width && q.lo <= out.back().hi) {
            out.back().hi = q.hi;
            continue;
        }
        if (!out.empty() && out.back().hi - out.back().lo < min_width && out.back().hi >= q.lo) {
            QuadraticPiece r = q;
            r.lo = out.back().lo;
            out.back() = r;
            continue;
        }
        out.push_back(q);
    }
    p.swap(out);
}

inline std::vector<QuadraticPiece> envelope_range(std::span<const QuadraticPiece> c, double bias) {
    if (c.size() == 1) return {c.front()};
    const std::size_t h = c.size() / 2;
    const auto l = envelope_range(c.first(h), bias);
    const auto r = envelope_range(c.subspan(h), bias);
    return merge_min(l, r, bias);
}

// Lower envelope of candidates with possibly different domains; the result may
// have gaps where no candidate is defined. Lower indices win ties.
inline std::vector<QuadraticPiece> envelope_pieces(std::span<const QuadraticPiece> c, double tie = 0.0) {
    if (c.empty()) return {};
    auto out = envelope_range(c, tie);
    if (!out.empty()) drop_slivers(out, 1e-12 * std::max(1e-300, out.back().hi - out.front().lo));
    return out;
}

} // namespace detail

inline PiecewiseQuadratic lower_envelope(std::span<const QuadraticPiece> candidates, double tie = 0.0) {
    if (candidates.empty()) throw Error(Errc::EmptyEnvelope, "no candidates");
    auto p = detail::envelope_pieces(candidates, tie);
    const double span = std::max(1.0, p.back().hi - p.front().lo);
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i].lo - p[i - 1].hi > 1e-9 * span) throw Error(Errc::DomainMismatch, "candidates leave a gap");
    return PiecewiseQuadratic(std::move(p));
}

struct StackStats {
    std::size_t pushes = 0;
    std::size_t pops = 0;
};

// Replace the part of S improved by S_I. The improvement must be a suffix of
// the overlap that extends to the top of S.
inline void stack_suffix_update(PiecewiseQuadratic& S, const PiecewiseQuadratic& SI, StackStats& stats,
                                double tol_improve = 0.0, double tol_violation = 1e-9) {
    if (SI.empty()) return;
    if (S.empty()) {
        S = SI;
        stats.pushes += SI.size();
        return;
    }
    const double dt = 1e-9 * std::max(1.0, S.hi() - S.lo());
    if (SI.lo() > S.hi() + dt) throw Error(Errc::OrderViolation, "update leaves a gap above the stack");
    if (SI.hi() < S.hi() - dt) throw Error(Errc::OrderViolation, "update does not reach the top of the stack");
    const double olo = std::max(S.lo(), SI.lo()), ohi = S.hi();
    std::vector<char> src;
    std::vector<QuadraticPiece> merged;
    if (ohi > olo) {
        const auto a = S.restricted(olo, ohi), b = SI.restricted(olo, ohi);
        merged = detail::merge_min(a.pieces(), b.pieces(), tol_improve, &src);
    }
    std::size_t first = merged.size();
    for (std::size_t i = 0; i < merged.size(); ++i)
        if (src[i] == 1) { first = i; break; }
    double tstar;
    if (first == merged.size()) {
        if (SI.hi() <= S.hi() + dt) return;
        tstar = S.hi();
    } else {
        tstar = merged[first].lo;
        for (std::size_t i = first + 1; i < merged.size(); ++i) {
            if (src[i] == 1) continue;
            const auto& p = merged[i];
            for (double t : {p.lo, 0.5 * (p.lo + p.hi), p.hi}) {
                const double gap = SI(t) - S(t);
                if (gap > tol_violation)
                    throw Error(Errc::OrderViolation, "update improves a non-suffix region (gap " + std::to_string(gap) + ")");
            }
        }
    }
    while (!S.empty() && S.back().lo >= tstar) {
        S.pop_back();
        ++stats.pops;
    }
    if (!S.empty() && S.back().hi > tstar) {
        S.back().hi = tstar;
        ++stats.pops;
    }
    const PiecewiseQuadratic pushed = SI.restricted(tstar, SI.hi());
    for (const auto& p : pushed.pieces()) {
        S.push_back(p);
        ++stats.pushes;
    }
}

} // namespace cdtw

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"

namespace cdtw {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Point2 operator-(Point2 a) { return {-a.x, -a.y}; }
    friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Point2 operator*(Point2 a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Point2, Point2) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point2 a) { return std::hypot(a.x, a.y); }
inline bool is_finite(Point2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    static constexpr Mat2 identity() { return {}; }
    static constexpr Mat2 columns(Point2 c0, Point2 c1) { return {c0.x, c1.x, c0.y, c1.y}; }

    constexpr double det() const { return a * d - b * c; }
    constexpr Point2 operator*(Point2 p) const { return {a * p.x + b * p.y, c * p.x + d * p.y}; }
    constexpr Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    constexpr Point2 col0() const { return {a, c}; }
    constexpr Point2 col1() const { return {b, d}; }
    constexpr Mat2 transposed() const { return {a, c, b, d}; }

    Mat2 inverse() const {
        const double dt = det();
        if (dt == 0.0 || !std::isfinite(dt)) throw Error(Errc::SingularTransform, "matrix is singular");
        return {d / dt, -b / dt, -c / dt, a / dt};
    }
};

struct Curve {
    std::vector<Point2> vertices;

    Curve() = default;
    explicit Curve(std::vector<Point2> v) : vertices(std::move(v)) {}
    Curve(std::initializer_list<Point2> v) : vertices(v) {}

    std::size_t segments() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

inline void validate_curve(const Curve& c) {
    if (c.vertices.size() < 2) throw Error(Errc::InvalidCurve, "a curve needs at least two vertices");
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
        if (!is_finite(c.vertices[i]))
            throw Error(Errc::InvalidCurve, "non-finite vertex at index " + std::to_string(i));
        if (i > 0 && c.vertices[i] == c.vertices[i - 1])
            throw Error(Errc::InvalidCurve, "repeated vertex at index " + std::to_string(i));
    }
}

// Diameter of the common bounding box of the given curves (2-norm).
inline double bbox_diameter(std::initializer_list<const Curve*> curves) {
    double lx = INFINITY, ly = INFINITY, hx = -INFINITY, hy = -INFINITY;
    for (const Curve* c : curves)
        for (Point2 p : c->vertices) {
            lx = std::min(lx, p.x), hx = std::max(hx, p.x);
            ly = std::min(ly, p.y), hy = std::max(hy, p.y);
        }
    if (lx > hx) return 0.0;
    return std::hypot(hx - lx, hy - ly);
}

struct EuclideanNorm {
    double operator()(Point2 z) const { return norm2(z); }
};

// Gauge of psi(R_k), R_k the regular k-gon with vertices (cos(r 2pi/k), sin(r 2pi/k)).
class PolygonalNorm {
public:
    PolygonalNorm(int k, Mat2 psi) : k_(k), psi_(psi) {
        if (k < 4 || k % 2 != 0) throw Error(Errc::InvalidK, "k must be even and at least 4, got " + std::to_string(k));
        const double dt = psi.det();
        if (!std::isfinite(dt) || std::abs(dt) < 1e-300) throw Error(Errc::SingularTransform, "psi is singular");
        psi_inv_ = psi.inverse();
        step_ = 2.0 * std::numbers::pi / k;
        const double s1 = std::sin(step_);
        unit_.resize(k + 1);
        for (int r = 0; r <= k; ++r) unit_[r] = unit_vertex(r);
        vertices_.resize(k);
        coeffs_.resize(k);
        normals_.resize(k);
        for (int r = 1; r <= k; ++r) {
            const Point2 prev = unit_[r - 1], cur = unit_[r];
            vertices_[r - 1] = psi_ * cur;
            coeffs_[r - 1] = {(cur.y - prev.y) / s1, (prev.x - cur.x) / s1};
            // functional in original coordinates: coeffs . (psi_inv z)
            const Point2 cf = coeffs_[r - 1];
            normals_[r - 1] = {cf.x * psi_inv_.a + cf.y * psi_inv_.c, cf.x * psi_inv_.b + cf.y * psi_inv_.d};
        }
    }

    int k() const { return k_; }
    const Mat2& psi() const { return psi_; }
    const Mat2& psi_inv() const { return psi_inv_; }
    double theta1() const { return step_; }

    // psi(v_r) for r = 1..k.
    Point2 vertex(int r) const { return vertices_[wrap(r) - 1]; }
    const std::vector<Point2>& vertices() const { return vertices_; }
    // (a_r, b_r) with gauge(z) = a_r w_1 + b_r w_2 on cone r, w = psi^-1 z.
    Point2 cone_coeffs(int r) const { return coeffs_[wrap(r) - 1]; }
    // Same functional expressed directly on z.
    Point2 cone_functional(int r) const { return normals_[wrap(r) - 1]; }
    // v_r on the untransformed polygon, r taken modulo k.
    Point2 unit_vertex(int r) const {
        const int rr = ((r % k_) + k_) % k_;
        if (rr == 0) return {1.0, 0.0};
        if (4 * rr == k_) return {0.0, 1.0};
        if (2 * rr == k_) return {-1.0, 0.0};
        if (4 * rr == 3 * k_) return {0.0, -1.0};
        return {std::cos(rr * step_), std::sin(rr * step_)};
    }

    int cone_index(Point2 z) const {
        const Point2 w = psi_inv_ * z;
        if (w.x == 0.0 && w.y == 0.0) throw Error(Errc::Undefined, "cone index of the origin");
        return cone_of_local(w);
    }

    double gauge(Point2 z) const {
        const Point2 w = psi_inv_ * z;
        if (w.x == 0.0 && w.y == 0.0) return 0.0;
        const Point2 cf = coeffs_[cone_of_local(w) - 1];
        return std::max(0.0, cf.x * w.x + cf.y * w.y);
    }
    double operator()(Point2 z) const { return gauge(z); }

    // 1/cos(pi/k): the gauge exceeds the 2-norm by at most this factor (psi = identity).
    double sandwich_factor() const { return 1.0 / std::cos(std::numbers::pi / k_); }

private:
    int wrap(int r) const { return ((r - 1) % k_ + k_) % k_ + 1; }

    int cone_of_local(Point2 w) const {
        double ang = std::atan2(w.y, w.x);
        if (ang <= 0.0) ang += 2.0 * std::numbers::pi;
        int r = static_cast<int>(std::ceil(ang / step_));
        return std::clamp(r, 1, k_);
    }

    int k_;
    Mat2 psi_;
    Mat2 psi_inv_;
    double step_ = 0.0;
    std::vector<Point2> unit_;
    std::vector<Point2> vertices_;
    std::vector<Point2> coeffs_;
    std::vector<Point2> normals_;
};

inline PolygonalNorm make_polygonal_norm(int k, Mat2 psi = Mat2::identity()) { return PolygonalNorm(k, psi); }

inline int choose_k_for_epsilon(double eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(Errc::InvalidEpsilon, "eps must be positive");
    if (eps >= 1.0) return 4;
    int k = 2 * static_cast<int>(std::ceil(std::numbers::pi / std::sqrt(eps)));
    // guard against rounding in the ceiling
    while (1.0 / std::pow(std::cos(std::numbers::pi / k), 2) > 1.0 + eps) k += 2;
    return k;
}

// Constant-speed parametrisation of a curve, arc length measured by `len`.
class ArcLenParam {
public:
    template <class Norm>
    ArcLenParam(Curve c, const Norm& len) : curve_(std::move(c)) {
        validate_curve(curve_);
        prefix_.reserve(curve_.vertices.size());
        prefix_.push_back(0.0);
        for (std::size_t i = 1; i < curve_.vertices.size(); ++i) {
            const double l = len(curve_.vertices[i] - curve_.vertices[i - 1]);
            if (!(l > 0.0)) throw Error(Errc::InvalidCurve, "zero-length segment " + std::to_string(i - 1));
            prefix_.push_back(prefix_.back() + l);
        }
    }

    const Curve& curve() const { return curve_; }
    const std::vector<double>& prefix_lengths() const { return prefix_; }
    double total() const { return prefix_.back(); }
    std::size_t segments() const { return curve_.segments(); }
    double segment_length(std::size_t i) const { return prefix_[i + 1] - prefix_[i]; }
    Point2 vertex(std::size_t i) const { return curve_.vertices[i]; }
    // Direction of segment i with unit length under the parametrising norm.
    Point2 direction(std::size_t i) const {
        return (1.0 / segment_length(i)) * (curve_.vertices[i + 1] - curve_.vertices[i]);
    }

    std::size_t segment_of(double s) const {
        check(s);
        auto it = std::upper_bound(prefix_.begin(), prefix_.end(), s);
        std::size_t i = it == prefix_.begin() ? 0 : static_cast<std::size_t>(it - prefix_.begin()) - 1;
        return std::min(i, segments() - 1);
    }

    Point2 point_at(double s) const {
        const std::size_t i = segment_of(s);
        const double u = std::clamp(s, prefix_[i], prefix_[i + 1]) - prefix_[i];
        if (u == segment_length(i)) return curve_.vertices[i + 1];
        return curve_.vertices[i] + u * direction(i);
    }

private:
    void check(double s) const {
        const double tol = 1e-12 * std::max(1.0, total());
        if (!(s >= -tol && s <= total() + tol))
            throw Error(Errc::OutOfDomain, "arc length " + std::to_string(s) + " outside [0, " + std::to_string(total()) + "]");
    }

    Curve curve_;
    std::vector<double> prefix_;
};

template <class Norm>
ArcLenParam arc_len_param(const Curve& c, const Norm& n) {
    return ArcLenParam(c, n);
}

} // namespace cdtw

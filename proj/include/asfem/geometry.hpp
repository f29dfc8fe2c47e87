#pragma once

#include <array>
#include <cmath>

namespace asfem {

/// A point (or vector) in the plane.
struct Point {
    double x = 0.0;
    double y = 0.0;

    constexpr Point& operator+=(const Point& o) { x += o.x; y += o.y; return *this; }
    constexpr Point& operator-=(const Point& o) { x -= o.x; y -= o.y; return *this; }
    constexpr Point& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Point operator+(Point a, const Point& b) { return a += b; }
    friend constexpr Point operator-(Point a, const Point& b) { return a -= b; }
    friend constexpr Point operator*(double s, Point a) { return a *= s; }
    friend constexpr Point operator*(Point a, double s) { return a *= s; }
    friend constexpr bool operator==(const Point&, const Point&) = default;
};

constexpr double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Point& a, const Point& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Point& a) { return std::hypot(a.x, a.y); }
inline double distance(const Point& a, const Point& b) { return norm(b - a); }

/// Axis-aligned open rectangle (x0, x1) x (y0, y1).
struct Rectangle {
    double x0, x1, y0, y1;

    double area() const { return (x1 - x0) * (y1 - y0); }
    bool contains_closed(const Point& p, double tol = 1e-12) const {
        return p.x >= x0 - tol && p.x <= x1 + tol && p.y >= y0 - tol && p.y <= y1 + tol;
    }
};

/// Affine map from the reference triangle {(0,0),(1,0),(0,1)} onto a physical triangle.
class AffineMap {
public:
    AffineMap(const Point& a, const Point& b, const Point& c)
        : origin_(a), e1_(b - a), e2_(c - a), det_(cross(e1_, e2_)) {}

    Point operator()(const Point& ref) const { return origin_ + ref.x * e1_ + ref.y * e2_; }

    Point inverse(const Point& x) const {
        const Point d = x - origin_;
        return {cross(d, e2_) / det_, cross(e1_, d) / det_};
    }

    /// Maps a reference gradient to the physical one, J^{-T} g.
    Point push_gradient(const Point& g) const {
        return {(e2_.y * g.x - e1_.y * g.y) / det_, (-e2_.x * g.x + e1_.x * g.y) / det_};
    }

    double det() const { return det_; }

private:
    Point origin_, e1_, e2_;
    double det_;
};

}  // namespace asfem

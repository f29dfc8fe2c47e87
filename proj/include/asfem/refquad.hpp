#pragma once

// Reference-triangle bases (Lagrange and interior bubbles) and quadrature.
//
// Reference triangle: vertices (0,0), (1,0), (0,1). Barycentric coordinates
// l0 = 1 - x - y, l1 = x, l2 = y. Local edge i is the edge opposite vertex i,
// running from vertex (i+1)%3 to vertex (i+2)%3.

#include "asfem/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asfem {

struct QuadratureRule {
    std::vector<Point> points;  // edge rules use points[i].x in [0,1]
    std::vector<double> weights;
    int exact_degree = 0;

    std::size_t size() const { return weights.size(); }
};

namespace detail {

/// n-point Gauss-Legendre nodes/weights on [0,1] (Newton on the three-term recurrence).
inline void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) { p1 = z; p0 = 1.0; }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = z;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) { p1 = z; p0 = 1.0; }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);  // 2/((1-z^2)p'^2) scaled by 1/2
    }
}

}  // namespace detail

inline constexpr int max_quadrature_degree = 20;

/// Gauss-Legendre rule on [0,1] exact for polynomials of degree <= `degree`.
inline QuadratureRule edge_rule(int degree) {
    if (degree < 0 || degree > max_quadrature_degree)
        throw std::invalid_argument("edge_rule: degree " + std::to_string(degree) + " outside [0, 20]");
    const int n = degree / 2 + 1;
    std::vector<double> x, w;
    detail::gauss_legendre_01(n, x, w);
    QuadratureRule rule;
    rule.exact_degree = 2 * n - 1;
    for (int i = 0; i < n; ++i) {
        rule.points.push_back({x[i], 0.0});
        rule.weights.push_back(w[i]);
    }
    return rule;
}

/// Rule on the reference triangle exact for total degree <= `degree`.
///
/// Degree <= 1 gives the centroid rule; higher degrees use a collapsed
/// (Duffy) tensor product of Gauss-Legendre rules, which has positive weights.
inline QuadratureRule triangle_rule(int degree) {
    if (degree < 0 || degree > max_quadrature_degree)
        throw std::invalid_argument("triangle_rule: degree " + std::to_string(degree) + " outside [0, 20]");
    QuadratureRule rule;
    if (degree <= 1) {
        rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
        rule.weights = {0.5};
        rule.exact_degree = 1;
        return rule;
    }
    const int n = (degree + 3) / 2;
    std::vector<double> x, w;
    detail::gauss_legendre_01(n, x, w);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = x[i];
            rule.points.push_back({u, x[j] * (1.0 - u)});
            rule.weights.push_back(w[i] * w[j] * (1.0 - u));
        }
    }
    rule.exact_degree = 2 * n - 2;
    return rule;
}

enum class BasisFamily { lagrange, bubble };

/// Basis of P^p (Lagrange, nodal) or of P^k cap H^1_0 (bubbles) on the reference triangle.
class ReferenceBasis {
public:
    static ReferenceBasis lagrange(int p) {
        if (p < 1 || p > 3) throw std::invalid_argument("lagrange_basis: degree must be in [1, 3]");
        ReferenceBasis b(BasisFamily::lagrange, p);
        b.nodes_ = lagrange_nodes(p);
        for (int d = 0; d <= p; ++d)
            for (int j = 0; j <= d; ++j) b.exponents_.push_back({d - j, j, 0});
        const int n = static_cast<int>(b.nodes_.size());
        Eigen::MatrixXd vandermonde(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                vandermonde(i, j) = std::pow(b.nodes_[i].x, b.exponents_[j][0]) *
                                    std::pow(b.nodes_[i].y, b.exponents_[j][1]);
        b.coefficients_ = vandermonde.inverse();
        return b;
    }

    /// Bubbles l0*l1*l2 * l0^a l1^b l2^c with a+b+c = k-3.
    /// `without_cubic` drops l0^(k-3), leaving a complement of span{l0*l1*l2}
    /// (needed next to P3, which already contains the cubic bubble).
    static ReferenceBasis bubble(int k, bool without_cubic = false) {
        if (k < 3 || k > 6) throw std::invalid_argument("bubble_basis: degree must be in [3, 6]");
        if (without_cubic && k == 3) throw std::invalid_argument("bubble_basis: nothing left of degree 3 without the cubic bubble");
        ReferenceBasis b(BasisFamily::bubble, k);
        const int m = k - 3;
        for (int a = m; a >= 0; --a)
            for (int c = 0; c <= m - a; ++c) b.exponents_.push_back({a, m - a - c, c});
        if (without_cubic) b.exponents_.erase(b.exponents_.begin());
        return b;
    }

    BasisFamily family() const { return family_; }
    int degree() const { return degree_; }
    int count() const { return static_cast<int>(exponents_.size()); }

    /// Nodal points (Lagrange only): vertices, then edge nodes per local edge, then interior.
    const std::vector<Point>& nodes() const { return nodes_; }

    void evaluate(const Point& r, std::span<double> out) const {
        if (family_ == BasisFamily::lagrange) {
            const int n = count();
            for (int i = 0; i < n; ++i) out[i] = 0.0;
            for (int j = 0; j < n; ++j) {
                const double m = ipow(r.x, exponents_[j][0]) * ipow(r.y, exponents_[j][1]);
                for (int i = 0; i < n; ++i) out[i] += coefficients_(j, i) * m;
            }
            return;
        }
        const std::array<double, 3> l{1.0 - r.x - r.y, r.x, r.y};
        const double core = l[0] * l[1] * l[2];
        for (int i = 0; i < count(); ++i) {
            const auto& e = exponents_[i];
            out[i] = core * ipow(l[0], e[0]) * ipow(l[1], e[1]) * ipow(l[2], e[2]);
        }
    }

    void gradient(const Point& r, std::span<Point> out) const {
        if (family_ == BasisFamily::lagrange) {
            const int n = count();
            for (int i = 0; i < n; ++i) out[i] = {};
            for (int j = 0; j < n; ++j) {
                const int a = exponents_[j][0], b = exponents_[j][1];
                const Point dm{a > 0 ? a * ipow(r.x, a - 1) * ipow(r.y, b) : 0.0,
                               b > 0 ? b * ipow(r.x, a) * ipow(r.y, b - 1) : 0.0};
                for (int i = 0; i < n; ++i) out[i] += coefficients_(j, i) * dm;
            }
            return;
        }
        static constexpr std::array<Point, 3> dl{Point{-1.0, -1.0}, Point{1.0, 0.0}, Point{0.0, 1.0}};
        const std::array<double, 3> l{1.0 - r.x - r.y, r.x, r.y};
        for (int i = 0; i < count(); ++i) {
            // product of l_j^{n_j} with n_j = e_j + 1
            std::array<int, 3> n{exponents_[i][0] + 1, exponents_[i][1] + 1, exponents_[i][2] + 1};
            Point g{};
            for (int j = 0; j < 3; ++j) {
                double factor = n[j] * ipow(l[j], n[j] - 1);
                for (int m = 0; m < 3; ++m)
                    if (m != j) factor *= ipow(l[m], n[m]);
                g += factor * dl[j];
            }
            out[i] = g;
        }
    }

private:
    ReferenceBasis(BasisFamily f, int degree) : family_(f), degree_(degree) {}

    static double ipow(double x, int n) {
        double r = 1.0;
        for (int i = 0; i < n; ++i) r *= x;
        return r;
    }

    static std::vector<Point> lagrange_nodes(int p) {
        std::vector<Point> nodes{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
        for (int e = 0; e < 3; ++e) {
            const Point a = nodes[(e + 1) % 3], b = nodes[(e + 2) % 3];
            for (int s = 1; s < p; ++s) {
                const double t = static_cast<double>(s) / p;
                nodes.push_back(a + t * (b - a));
            }
        }
        if (p == 3) nodes.push_back({1.0 / 3.0, 1.0 / 3.0});
        return nodes;
    }

    BasisFamily family_;
    int degree_;
    std::vector<std::array<int, 3>> exponents_;
    std::vector<Point> nodes_;
    Eigen::MatrixXd coefficients_;  // column i: monomial coefficients of basis i
};

inline ReferenceBasis lagrange_basis(int p) { return ReferenceBasis::lagrange(p); }
inline ReferenceBasis bubble_basis(int k, bool without_cubic = false) { return ReferenceBasis::bubble(k, without_cubic); }

}  // namespace asfem

#pragma once

// Benchmark problems with closed-form solutions.

#include "asfem/forms.hpp"
#include "asfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asfem {

struct Benchmark {
    std::string name;
    ProblemData data;
    ScalarField exact;
    std::function<Point(const Point&)> exact_gradient;
    std::optional<Rectangle> qoi_region;
    Mesh initial_mesh;
    int p = 1;
    int k = 3;
    double theta = 0.5;
};

/// Curved advection around (0,-1) with reaction 0.1 and an arctan layer of width
/// `delta` on the circle of radius 1.5:
///   u = exp(mu r asin((x2+1)/r)) atan((r - 1.5)/delta),  r = |x - (0,-1)|.
/// b is the unit tangent of those circles, so b.grad(r asin(.)) = -1 and the
/// source b.grad u + mu u vanishes identically.
inline Benchmark experiment1(double delta = 0.01, int initial_cells_per_side = 8) {
    if (!(delta > 0.0)) throw std::invalid_argument("experiment1: delta must be positive");
    constexpr double mu = 0.1;
    Benchmark bm;
    bm.name = "exp1";
    auto radius = [](const Point& x) { return std::hypot(x.x, x.y + 1.0); };
    bm.data.advection = [radius](const Point& x) {
        const double r = radius(x);
        return Point{(x.y + 1.0) / r, -x.x / r};
    };
    bm.data.reaction = [](const Point&) { return mu; };
    bm.data.reaction_floor = mu;
    bm.data.gram_weight = mu;
    bm.data.source = [](const Point&) { return 0.0; };
    bm.exact = [radius, delta](const Point& x) {
        const double r = radius(x);
        const double s = std::clamp((x.y + 1.0) / r, -1.0, 1.0);
        return std::exp(mu * r * std::asin(s)) * std::atan((r - 1.5) / delta);
    };
    bm.exact_gradient = [radius, delta](const Point& x) {
        const double r = radius(x);
        const double s = std::clamp((x.y + 1.0) / r, -1.0, 1.0);
        const double phi = std::asin(s);
        const Point dr{x.x / r, (x.y + 1.0) / r};
        const Point dphi{-(x.y + 1.0) / (r * r), x.x / (r * r)};
        const double e = std::exp(mu * r * phi);
        const double z = (r - 1.5) / delta;
        const double a = std::atan(z);
        const Point de = (e * mu) * (phi * dr + r * dphi);
        const Point da = (1.0 / (delta * (1.0 + z * z))) * dr;
        return a * de + e * da;
    };
    bm.data.inflow = bm.exact;
    bm.initial_mesh = unit_square_mesh(initial_cells_per_side);
    bm.p = 1;
    bm.k = 3;
    bm.theta = 0.5;
    return bm;
}

/// Constant transport b = (3,1) without reaction; u is constant along
/// characteristics: 2 + tanh(10(x2 - x1/3 - 1/4)) + tanh(1000(x2 - x1/3 - 3/4)).
/// QoI: mean of u over (0.7,0.8) x (0.3,0.5).
inline Benchmark experiment2(int initial_cells_per_side = 10) {
    if (initial_cells_per_side % 10 != 0)
        throw std::invalid_argument("experiment2: the initial mesh must resolve the QoI region (multiple of 10 cells)");
    Benchmark bm;
    bm.name = "exp2";
    bm.data.advection = [](const Point&) { return Point{3.0, 1.0}; };
    bm.data.reaction = [](const Point&) { return 0.0; };
    bm.data.reaction_floor = 0.0;
    bm.data.gram_weight = default_gram_weight(0.0);
    bm.data.source = [](const Point&) { return 0.0; };
    bm.exact = [](const Point& x) {
        const double s = x.y - x.x / 3.0;
        return 2.0 + std::tanh(10.0 * (s - 0.25)) + std::tanh(1000.0 * (s - 0.75));
    };
    bm.exact_gradient = [](const Point& x) {
        const double s = x.y - x.x / 3.0;
        const double t1 = std::tanh(10.0 * (s - 0.25)), t2 = std::tanh(1000.0 * (s - 0.75));
        const double ds = 10.0 * (1.0 - t1 * t1) + 1000.0 * (1.0 - t2 * t2);
        return Point{-ds / 3.0, ds};
    };
    bm.data.inflow = bm.exact;
    bm.qoi_region = Rectangle{0.7, 0.8, 0.3, 0.5};
    bm.initial_mesh = unit_square_mesh(initial_cells_per_side);
    bm.p = 1;
    bm.k = 3;
    bm.theta = 0.2;
    return bm;
}

inline const std::vector<std::string>& benchmark_names() {
    static const std::vector<std::string> names{"exp1", "exp2"};
    return names;
}

inline Benchmark make_benchmark(const std::string& name, double delta = 0.01) {
    if (name == "exp1") return experiment1(delta);
    if (name == "exp2") return experiment2();
    throw std::invalid_argument("unknown benchmark '" + name + "'");
}

}  // namespace asfem

#include "asfem/forms.hpp"
#include "asfem/spaces.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace asfem;

namespace {

std::shared_ptr<const Mesh> mesh_ptr(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

std::vector<Point> random_points(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Point> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng)};
    return pts;
}

}  // namespace

TEST(Spaces, DimensionsOnSingleSquare) {
    const auto m = mesh_ptr(unit_square_mesh(1));
    EXPECT_EQ(FunctionSpace::lagrange(m, 1).dim(), 4);
    EXPECT_EQ(FunctionSpace::bubble(m, 3).dim(), 2);
    EXPECT_EQ(FunctionSpace::enriched(m, 1, 3).dim(), 6);
}

TEST(Spaces, HigherOrderDimensions) {
    const auto m = mesh_ptr(unit_square_mesh(2));  // 9 vertices, 16 edges, 8 cells
    EXPECT_EQ(FunctionSpace::lagrange(m, 2).dim(), 9 + 16);
    EXPECT_EQ(FunctionSpace::lagrange(m, 3).dim(), 9 + 32 + 8);
    EXPECT_EQ(FunctionSpace::enriched(m, 2, 5).dim(), 25 + 6 * 8);
    EXPECT_EQ(FunctionSpace::enriched(m, 1, 6).dim(), 9 + 10 * 8);
    // P3 already holds the cubic bubble, so one bubble per cell is left out
    EXPECT_EQ(FunctionSpace::enriched(m, 3, 5).dim(), 49 + 5 * 8);
    EXPECT_EQ(FunctionSpace::bubble(m, 5).dim(), 6 * 8);
}

TEST(Spaces, NoEnrichmentWhenBubbleDegreeNotAboveTrial) {
    const auto m = mesh_ptr(unit_square_mesh(2));
    const FunctionSpace V = FunctionSpace::enriched(m, 2, 2);
    EXPECT_FALSE(V.has_bubbles());
    EXPECT_EQ(V.dim(), FunctionSpace::lagrange(m, 2).dim());
    EXPECT_THROW(FunctionSpace::enriched(m, 1, 7), std::invalid_argument);
    EXPECT_THROW(FunctionSpace::lagrange(m, 4), std::invalid_argument);
    EXPECT_THROW(FunctionSpace::lagrange(nullptr, 1), std::invalid_argument);
}

TEST(Spaces, EnrichedNumberingExtendsTrialNumbering) {
    const auto m = mesh_ptr(refine(unit_square_mesh(3), {2, 9}));
    for (auto [p, k] : {std::pair{1, 3}, std::pair{2, 4}, std::pair{3, 5}}) {
        const FunctionSpace U = FunctionSpace::lagrange(m, p), V = FunctionSpace::enriched(m, p, k);
        ASSERT_EQ(V.lagrange_dim(), U.dim());
        for (int c = 0; c < m->num_cells(); ++c) {
            const auto u = U.cell_dofs(c), v = V.cell_dofs(c);
            for (int i = 0; i < U.local_dim(); ++i) EXPECT_EQ(u[i], v[i]);
            for (int i = U.local_dim(); i < V.local_dim(); ++i) EXPECT_GE(v[i], U.dim());
        }
    }
}

TEST(Spaces, InjectionPreservesFunctions) {
    const auto m = mesh_ptr(unit_square_mesh(4));
    const FunctionSpace U = FunctionSpace::lagrange(m, 1), V = FunctionSpace::enriched(m, 1, 3);
    EXPECT_EQ(inject_trial(U, V, Eigen::VectorXd::Zero(U.dim())), Eigen::VectorXd::Zero(V.dim()));

    const Eigen::VectorXd x1 = interpolate(U, [](const Point& x) { return x.x; });
    const Eigen::VectorXd y = inject_trial(U, V, x1);
    const DiscreteFunction fv(std::make_shared<const FunctionSpace>(V), y);
    for (const Point& p : random_points(100, 1)) EXPECT_NEAR(evaluate(fv, p), p.x, 1e-14);

    std::mt19937 rng(2);
    std::normal_distribution<double> g;
    Eigen::VectorXd r(U.dim());
    for (auto& v : r) v = g(rng);
    const Eigen::VectorXd ri = inject_trial(U, V, r);
    EXPECT_NEAR(r.dot(assemble_mass(U) * r), ri.dot(assemble_mass(V) * ri), 1e-13);

    EXPECT_THROW(inject_trial(U, FunctionSpace::enriched(m, 2, 4), x1), std::invalid_argument);
    EXPECT_THROW(inject_trial(U, V, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(Spaces, EvaluateReproducesPolynomials) {
    const auto m = mesh_ptr(unit_square_mesh(3));
    for (int p = 1; p <= 3; ++p) {
        auto V = std::make_shared<const FunctionSpace>(FunctionSpace::lagrange(m, p));
        auto poly = [p](const Point& x) { return 1.0 + x.x - 2.0 * x.y + (p >= 2 ? x.x * x.y : 0.0) + (p >= 3 ? x.y * x.y * x.x : 0.0); };
        auto grad = [p](const Point& x) {
            Point g{1.0, -2.0};
            if (p >= 2) g += Point{x.y, x.x};
            if (p >= 3) g += Point{x.y * x.y, 2 * x.x * x.y};
            return g;
        };
        const DiscreteFunction f(V, interpolate(*V, poly));
        for (const Point& x : random_points(100, 10 + p)) {
            EXPECT_NEAR(evaluate(f, x), poly(x), 1e-13);
            const Point gx = evaluate_gradient(f, x);
            EXPECT_NEAR(gx.x, grad(x).x, 1e-12);
            EXPECT_NEAR(gx.y, grad(x).y, 1e-12);
        }
    }
}

TEST(Spaces, SimpleEvaluationExample) {
    auto V = std::make_shared<const FunctionSpace>(FunctionSpace::lagrange(mesh_ptr(unit_square_mesh(1)), 1));
    Eigen::VectorXd c(4);
    c << 0, 1, 1, 2;  // vertex order (0,0),(1,0),(0,1),(1,1): u = x + y
    const DiscreteFunction f(V, c);
    EXPECT_NEAR(evaluate(f, {0.5, 0.5}), 1.0, 1e-15);
    EXPECT_NEAR(evaluate(f, {0.25, 0.1}), 0.35, 1e-15);
    EXPECT_THROW(evaluate(f, {1.5, 0.5}), std::out_of_range);
    EXPECT_THROW(evaluate_gradient(f, {-0.1, 0.5}), std::out_of_range);
    EXPECT_THROW(DiscreteFunction(V, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(Spaces, ContinuityAcrossInteriorFacets) {
    const auto m = mesh_ptr(refine(unit_square_mesh(3), {0, 4, 13}));
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    for (int p = 1; p <= 3; ++p) {
        const FunctionSpace V = FunctionSpace::enriched(m, p, p + 2);
        Eigen::VectorXd c(V.dim());
        for (auto& v : c) v = g(rng);
        for (const auto& f : m->interior_facets()) {
            const auto [a, b] = m->facet_points(f);
            for (double t : {0.13, 0.5, 0.77}) {
                const Point x = a + t * (b - a);
                const double up = evaluate_on_cell(V, c, f.plus, m->map(f.plus).inverse(x));
                const double um = evaluate_on_cell(V, c, f.minus, m->map(f.minus).inverse(x));
                EXPECT_NEAR(up, um, 1e-12) << "p=" << p;
            }
        }
    }
}

TEST(Spaces, BubblesAreCellLocal) {
    const auto m = mesh_ptr(unit_square_mesh(2));
    const FunctionSpace V = FunctionSpace::enriched(m, 1, 4);
    for (int j = V.lagrange_dim(); j < V.dim(); j += 5) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(V.dim());
        c[j] = 1.0;
        const int owner = (j - V.lagrange_dim()) / 3;
        for (int cell = 0; cell < m->num_cells(); ++cell) {
            const double centre = evaluate_on_cell(V, c, cell, {0.3, 0.3});
            if (cell != owner) EXPECT_EQ(centre, 0.0);
            else EXPECT_NE(centre, 0.0);
            for (const Point& r : {Point{0.4, 0.0}, Point{0.0, 0.7}, Point{0.5, 0.5}})
                EXPECT_NEAR(evaluate_on_cell(V, c, cell, r), 0.0, 1e-15);
        }
    }
}

TEST(Spaces, PhysicalGradientsOfAffineFunctions) {
    const auto m = mesh_ptr(refine(unit_square_mesh(2), {3}));
    const FunctionSpace V = FunctionSpace::lagrange(m, 1);
    const Eigen::VectorXd c = interpolate(V, [](const Point& x) { return 3.0 * x.x - 0.5 * x.y; });
    for (int cell = 0; cell < m->num_cells(); ++cell) {
        const Point g = evaluate_gradient_on_cell(V, c, cell, {0.2, 0.6});
        EXPECT_NEAR(g.x, 3.0, 1e-13);
        EXPECT_NEAR(g.y, -0.5, 1e-13);
    }
}

#include "asfem/bench.hpp"
#include "asfem/forms.hpp"
#include "asfem/resmin.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace asfem;

namespace {

std::shared_ptr<const Mesh> mesh_ptr(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

// u = x1 + x2 under b = (3,1), mu = 1.
ProblemData manufactured_linear() {
    ProblemData d;
    d.advection = [](const Point&) { return Point{3.0, 1.0}; };
    d.reaction = [](const Point&) { return 1.0; };
    d.reaction_floor = 1.0;
    d.gram_weight = 1.0;
    d.source = [](const Point& x) { return 4.0 + x.x + x.y; };
    d.inflow = [](const Point& x) { return x.x + x.y; };
    return d;
}

struct System {
    FunctionSpace U, V;
    SparseMatrix G, B_full, B;
    Eigen::VectorXd l;
};

System build(const std::shared_ptr<const Mesh>& m, const ProblemData& d, int p, int k) {
    System s{FunctionSpace::lagrange(m, p), FunctionSpace::enriched(m, p, k), {}, {}, {}, {}};
    s.G = assemble_gram(s.V, d);
    s.B_full = assemble_b(s.V, s.V, d);
    s.B = s.B_full.leftCols(s.U.dim());
    s.l = assemble_rhs(s.V, d);
    return s;
}

double g_norm(const SparseMatrix& G, const Eigen::VectorXd& v) { return std::sqrt(v.dot(G * v)); }

}  // namespace

TEST(ResidualMinimization, DegeneratesToGalerkinWithoutBubbles) {
    for (const Benchmark& bm : {experiment1(0.01, 8), experiment2()}) {
        for (int p : {1, 2}) {
            ProblemData d = bm.data;
            d.penalty_order = p;
            const System s = build(mesh_ptr(bm.initial_mesh), d, p, p);
            ASSERT_EQ(s.V.dim(), s.U.dim());
            const SaddleSolution sol = solve_saddle(s.G, s.B, s.l);
            EXPECT_LT(g_norm(s.G, sol.epsilon), 1e-10) << bm.name << " p=" << p;
            const Eigen::VectorXd galerkin = solve_cip_enriched(s.B_full, s.l);
            EXPECT_LT((sol.u - galerkin).lpNorm<Eigen::Infinity>(), 1e-10) << bm.name << " p=" << p;
        }
    }
}

TEST(ResidualMinimization, ReproducesLinearManufacturedSolution) {
    const auto m = mesh_ptr(refine(unit_square_mesh(4), {3, 8}));
    const ProblemData d = manufactured_linear();
    for (auto [p, k] : {std::pair{1, 3}, std::pair{2, 4}}) {
        const System s = build(m, d, p, k);
        const SaddleSolution sol = solve_saddle(s.G, s.B, s.l);
        const Eigen::VectorXd exact = interpolate(s.U, d.inflow);
        EXPECT_LT((sol.u - exact).lpNorm<Eigen::Infinity>(), 1e-11);
        EXPECT_LT(g_norm(s.G, sol.epsilon), 1e-11);
        EXPECT_LT(sol.kkt_residual, 1e-11 * sol.scale);
    }
}

TEST(ResidualMinimization, ZeroDataGivesZeroSolution) {
    ProblemData d = manufactured_linear();
    d.source = [](const Point&) { return 0.0; };
    d.inflow = [](const Point&) { return 0.0; };
    const System s = build(mesh_ptr(unit_square_mesh(4)), d, 1, 3);
    const SaddleSolution sol = solve_saddle(s.G, s.B, s.l);
    EXPECT_EQ(sol.u.lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_EQ(sol.epsilon.lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_DOUBLE_EQ(sol.scale, 1.0);
}

TEST(ResidualMinimization, MinimizesDualResidualNorm) {
    const Benchmark bm = experiment2();
    const System s = build(mesh_ptr(bm.initial_mesh), bm.data, 1, 3);
    const SaddleSolution sol = solve_saddle(s.G, s.B, s.l);
    const GramSolver gram(s.G);
    auto residual_sq = [&](const Eigen::VectorXd& u) {
        const Eigen::VectorXd r = s.l - s.B * u;
        return r.dot(gram.solve(r));
    };
    const double r0 = residual_sq(sol.u);
    EXPECT_NEAR(r0, sol.epsilon.dot(s.G * sol.epsilon), 1e-12 * (1 + r0));
    for (unsigned k = 0; k < 10; ++k) {
        const Eigen::VectorXd d = random_vector(s.U.dim(), k);
        const double t = 1e-3;
        const double plus = residual_sq(sol.u + t * d), minus = residual_sq(sol.u - t * d);
        EXPECT_GT(plus, r0);
        EXPECT_GT(minus, r0);
        // first derivative vanishes: the difference quotient is O(t^2) relative to the curvature
        EXPECT_NEAR((plus - minus) / (2 * t), 0.0, 1e-8 * (1 + (plus + minus - 2 * r0) / (t * t)));
    }
    EXPECT_LT(sol.orthogonality, 1e-9 * sol.scale);
    EXPECT_LT(sol.kkt_residual, 1e-9 * sol.scale);
}

TEST(ResidualMinimization, BitwiseDeterministic) {
    const Benchmark bm = experiment1(0.01, 6);
    const System s = build(mesh_ptr(bm.initial_mesh), bm.data, 2, 4);
    const SaddleSolution a = solve_saddle(s.G, s.B, s.l), b = solve_saddle(s.G, s.B, s.l);
    EXPECT_TRUE(a.u == b.u);
    EXPECT_TRUE(a.epsilon == b.epsilon);
}

TEST(ResidualMinimization, SingularSystemRaisesSolverError) {
    const auto m = mesh_ptr(unit_square_mesh(2));
    const FunctionSpace U = FunctionSpace::lagrange(m, 1), V = FunctionSpace::enriched(m, 1, 3);
    SparseMatrix G(V.dim(), V.dim()), B(V.dim(), U.dim());
    EXPECT_THROW(SaddleFactorization(G, B), SolverError);
    EXPECT_THROW(GramSolver{G}, SolverError);
}

TEST(Adjoint, ZeroFunctionalGivesZero) {
    const Benchmark bm = experiment2();
    const System s = build(mesh_ptr(bm.initial_mesh), bm.data, 1, 3);
    const SaddleFactorization K(s.G, s.B);
    const AdjointSolution a = solve_adjoint(K, GramSolver(s.G), s.B_full, Eigen::VectorXd::Zero(s.V.dim()));
    EXPECT_EQ(a.nu_star.lpNorm<Eigen::Infinity>(), 0.0);
    EXPECT_EQ(a.eps_star.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Adjoint, ReproducesFunctionalAndResidualIdentity) {
    const Benchmark bm = experiment2();
    for (auto [p, k] : {std::pair{1, 3}, std::pair{2, 4}}) {
        ProblemData d = bm.data;
        d.penalty_order = k;
        const System s = build(mesh_ptr(bm.initial_mesh), d, p, k);
        const Eigen::VectorXd q = assemble_qoi(s.V, *bm.qoi_region);
        const SaddleFactorization K(s.G, s.B);
        const GramSolver gram(s.G);
        const AdjointSolution a = solve_adjoint(K, gram, s.B_full, q);
        // b_h(w, nu*) = q(w) for every trial w
        EXPECT_LT((s.B.transpose() * a.nu_star - q.head(s.U.dim())).lpNorm<Eigen::Infinity>(), 1e-10);
        EXPECT_LT(a.kkt_residual, 1e-9 * a.scale);
        const Eigen::VectorXd lhs = s.G * a.eps_star, rhs = q - s.B_full.transpose() * a.nu_star;
        EXPECT_LT((lhs - rhs).lpNorm<Eigen::Infinity>(), 1e-10);

        const AdjointSolution fresh = solve_adjoint(SaddleFactorization(s.G, s.B), GramSolver(s.G), s.B_full, q);
        EXPECT_LT((fresh.nu_star - a.nu_star).lpNorm<Eigen::Infinity>(), 1e-12 * (1 + a.nu_star.lpNorm<Eigen::Infinity>()));
        EXPECT_LT((fresh.eps_star - a.eps_star).lpNorm<Eigen::Infinity>(), 1e-12 * (1 + a.eps_star.lpNorm<Eigen::Infinity>()));
        EXPECT_THROW(solve_adjoint(K, gram, s.B_full, q.head(3)), std::invalid_argument);
    }
}

TEST(EnrichedGalerkin, ExactForLinearSolution) {
    const ProblemData d = manufactured_linear();
    const System s = build(mesh_ptr(refine(unit_square_mesh(3), {0})), d, 1, 3);
    const Eigen::VectorXd theta = solve_cip_enriched(s.B_full, s.l);
    const Eigen::VectorXd exact = inject_trial(s.U, s.V, interpolate(s.U, d.inflow));
    EXPECT_LT((theta - exact).lpNorm<Eigen::Infinity>(), 1e-12);

    ProblemData z = d;
    z.source = [](const Point&) { return 0.0; };
    z.inflow = [](const Point&) { return 0.0; };
    EXPECT_EQ(solve_cip_enriched(s.B_full, assemble_rhs(s.V, z)).lpNorm<Eigen::Infinity>(), 0.0);
}

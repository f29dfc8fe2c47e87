#include "asfem/adapt.hpp"
#include "asfem/bench.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

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

Indicators make(std::vector<double> eta) { return Indicators{std::move(eta)}; }

}  // namespace

TEST(Dorfler, SpecExamples) {
    EXPECT_EQ(dorfler_mark(make({3, 1, 1, 1}), 0.5), std::vector<int>{0});
    EXPECT_EQ(dorfler_mark(make({1, 1, 1, 1}), 0.5), std::vector<int>{0});
    EXPECT_EQ(dorfler_mark(make({1, 0, 2, 1}), 1.0), (std::vector<int>{0, 2, 3}));
    EXPECT_TRUE(dorfler_mark(make({0, 0, 0}), 0.5).empty());
    EXPECT_THROW(dorfler_mark(make({1}), 0.0), std::invalid_argument);
    EXPECT_THROW(dorfler_mark(make({1}), 1.5), std::invalid_argument);
}

TEST(Dorfler, LinearRule) {
    // linear weights 3,1,1,1: half of 6 is reached by the first cell alone
    EXPECT_EQ(dorfler_mark(make({3, 1, 1, 1}), 0.5, MarkRule::linear), std::vector<int>{0});
    EXPECT_EQ(dorfler_mark(make({2, 1, 1, 1}), 0.5, MarkRule::linear), (std::vector<int>{0, 1}));
}

TEST(Dorfler, MinimalAndMonotoneInTheta) {
    std::mt19937 rng(42);
    std::exponential_distribution<double> e(1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> eta(40);
        for (auto& v : eta) v = e(rng);
        const Indicators ind = make(eta);
        std::vector<int> previous;
        for (double theta : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
            const std::vector<int> m = dorfler_mark(ind, theta);
            EXPECT_TRUE(std::includes(m.begin(), m.end(), previous.begin(), previous.end()));
            double marked = 0.0, total = ind.total_sq(), smallest = 1e300;
            for (int c : m) {
                marked += eta[c] * eta[c];
                smallest = std::min(smallest, eta[c] * eta[c]);
            }
            EXPECT_GE(marked, theta * theta * total * (1 - 1e-14));
            EXPECT_LT(marked - smallest, theta * theta * total);
            // every unmarked indicator is no larger than every marked one
            for (int c = 0; c < 40; ++c)
                if (!std::binary_search(m.begin(), m.end(), c)) EXPECT_LE(eta[c] * eta[c], smallest);
            previous = m;
        }
    }
}

TEST(EnergyIndicators, VanishForZeroResidual) {
    const Benchmark bm = experiment1(0.01, 4);
    const FunctionSpace V = FunctionSpace::enriched(mesh_ptr(bm.initial_mesh), 1, 3);
    for (double eta : energy_indicators(V, Eigen::VectorXd::Zero(V.dim()), bm.data).eta) EXPECT_EQ(eta, 0.0);
}

TEST(EnergyIndicators, BubbleSupport) {
    const Benchmark bm = experiment2();
    const auto m = mesh_ptr(bm.initial_mesh);
    const FunctionSpace V = FunctionSpace::enriched(m, 1, 3);
    const int cell = 57;
    Eigen::VectorXd eps = Eigen::VectorXd::Zero(V.dim());
    eps[V.cell_dofs(cell)[3]] = 1.0;
    std::set<int> allowed{cell};
    for (const auto& f : m->interior_facets())
        if (f.plus == cell || f.minus == cell) allowed.insert(f.plus == cell ? f.minus : f.plus);
    ASSERT_EQ(allowed.size(), 4u);
    const Indicators ind = energy_indicators(V, eps, bm.data);
    for (int c = 0; c < m->num_cells(); ++c) {
        if (allowed.count(c)) EXPECT_GT(ind.eta[c], 0.0) << c;
        else EXPECT_EQ(ind.eta[c], 0.0) << c;
    }
}

TEST(EnergyIndicators, SumOfSquaresIsGramNorm) {
    const Benchmark bm = experiment1(0.01, 5);
    const FunctionSpace V = FunctionSpace::enriched(mesh_ptr(refine(bm.initial_mesh, {4, 11})), 2, 4);
    ProblemData d = bm.data;
    d.penalty_order = 4;
    const SparseMatrix G = assemble_gram(V, d);
    for (unsigned s = 0; s < 5; ++s) {
        const Eigen::VectorXd eps = random_vector(V.dim(), s);
        const double g = eps.dot(G * eps);
        EXPECT_NEAR(energy_indicators(V, eps, d).total_sq(), g, 1e-12 * g);
    }
}

TEST(GoalIndicators, DegenerateAdjoints) {
    const Benchmark bm = experiment2();
    const FunctionSpace V = FunctionSpace::enriched(mesh_ptr(bm.initial_mesh), 1, 3);
    const SparseMatrix G = assemble_gram(V, bm.data);
    const Eigen::VectorXd eps = random_vector(V.dim(), 9);
    const GoaIndicators zero = goa_indicators(V, G, eps, Eigen::VectorXd::Zero(V.dim()), bm.data);
    EXPECT_EQ(zero.estimate_sq, 0.0);
    for (double v : zero.local.eta) EXPECT_EQ(v, 0.0);

    const GoaIndicators same = goa_indicators(V, G, eps, eps, bm.data);
    const Indicators energy = energy_indicators(V, eps, bm.data);
    for (std::size_t c = 0; c < energy.eta.size(); ++c) EXPECT_NEAR(same.local.eta[c], energy.eta[c] * energy.eta[c], 1e-14);
    EXPECT_NEAR(same.estimate_sq, eps.dot(G * eps), 1e-12 * same.estimate_sq);
}

TEST(GoalIndicators, CauchySchwarzBounds) {
    const Benchmark bm = experiment2();
    const FunctionSpace V = FunctionSpace::enriched(mesh_ptr(bm.initial_mesh), 1, 3);
    const SparseMatrix G = assemble_gram(V, bm.data);
    for (unsigned s = 0; s < 10; ++s) {
        const Eigen::VectorXd a = random_vector(V.dim(), 2 * s), b = random_vector(V.dim(), 2 * s + 1);
        const GoaIndicators goa = goa_indicators(V, G, a, b, bm.data);
        const double ea = energy_indicators(V, a, bm.data).total(), eb = energy_indicators(V, b, bm.data).total();
        EXPECT_LE(goa.estimate_sq, ea * eb * (1 + 1e-12));
        EXPECT_LE(goa.local.sum(), ea * eb * (1 + 1e-12));
        EXPECT_LE(goa.estimate_sq, std::sqrt(a.dot(G * a) * b.dot(G * b)) * (1 + 1e-12));
    }
}

TEST(AdaptiveLoop, ZeroIterationsSolvesOnce) {
    AdaptConfig cfg;
    cfg.max_iterations = 0;
    int calls = 0;
    const AdaptResult r = run_adaptive(experiment2(), cfg, [&](const IterationState& s) {
        ++calls;
        EXPECT_EQ(s.iter, 0);
        EXPECT_EQ(static_cast<long>(s.marked.size()), s.record.marked);
    });
    ASSERT_EQ(r.records.size(), 1u);
    EXPECT_EQ(calls, 1);
    const AdaptRecord& rec = r.records[0];
    EXPECT_EQ(rec.dofs_trial, 121);
    EXPECT_EQ(rec.dofs_test, 121 + 200);
    EXPECT_EQ(rec.dofs_total, 442);
    EXPECT_GT(rec.marked, 0);
    EXPECT_TRUE(std::isfinite(rec.err_qoi_rel));
    EXPECT_TRUE(std::isfinite(rec.saturation));
    EXPECT_EQ(r.final_mesh->num_cells(), 200);
}

TEST(AdaptiveLoop, DeterministicRecords) {
    AdaptConfig cfg;
    cfg.max_iterations = 3;
    const AdaptResult a = run_adaptive(experiment1(0.05, 4), cfg), b = run_adaptive(experiment1(0.05, 4), cfg);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].dofs_total, b.records[i].dofs_total);
        EXPECT_EQ(a.records[i].est_energy, b.records[i].est_energy);
        EXPECT_EQ(a.records[i].err_L2_rel, b.records[i].err_L2_rel);
        EXPECT_EQ(a.records[i].marked, b.records[i].marked);
    }
    EXPECT_EQ(a.final_mesh->vertices(), b.final_mesh->vertices());
}

TEST(AdaptiveLoop, EnergyMarkingLocalizesAndReducesEstimate) {
    AdaptConfig cfg;
    cfg.max_iterations = 5;
    const AdaptResult r = run_adaptive(experiment1(0.05, 8), cfg);
    ASSERT_EQ(r.records.size(), 6u);
    for (std::size_t i = 1; i < r.records.size(); ++i) {
        EXPECT_GT(r.records[i].dofs_total, r.records[i - 1].dofs_total);
        EXPECT_LT(r.records[i].marked, r.records[i].cells);
    }
    EXPECT_LT(r.records.back().est_energy, r.records.front().est_energy);
    EXPECT_LT(r.records.back().err_L2_rel, r.records.front().err_L2_rel);
    for (const auto& rec : r.records) {
        EXPECT_LT(rec.kkt, 1e-9 * rec.scale);
        EXPECT_LT(rec.orthogonality, 1e-9 * rec.scale);
    }
}

TEST(AdaptiveLoop, UniformModeQuadruplesCells) {
    AdaptConfig cfg;
    cfg.mode = AdaptMode::uniform;
    cfg.max_iterations = 2;
    const AdaptResult r = run_adaptive(experiment1(0.5, 4), cfg);
    ASSERT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.records[1].cells, 4 * r.records[0].cells);
    EXPECT_EQ(r.records[2].cells, 4 * r.records[1].cells);
    EXPECT_NEAR(r.records[1].h_max, 0.5 * r.records[0].h_max, 1e-14);
    EXPECT_EQ(r.records[0].marked, r.records[0].cells);
}

TEST(AdaptiveLoop, StopsBeforeExceedingDofBudget) {
    AdaptConfig cfg;
    cfg.mode = AdaptMode::goa;
    cfg.theta = 0.2;
    cfg.max_dofs = 1500;
    std::shared_ptr<const Mesh> last_mesh;
    std::vector<int> last_marked;
    const AdaptResult r = run_adaptive(experiment2(), cfg, [&](const IterationState& s) {
        last_mesh = s.mesh;
        last_marked = s.marked;
        EXPECT_TRUE(std::isfinite(s.record.goa_estimate));
        EXPECT_LT(s.record.adjoint_kkt, 1e-9 * s.record.adjoint_scale);
    });
    ASSERT_GE(r.records.size(), 2u);
    for (const auto& rec : r.records) EXPECT_LE(rec.dofs_total, cfg.max_dofs);
    const auto next = std::make_shared<const Mesh>(refine(*last_mesh, last_marked));
    EXPECT_GT(total_dofs(next, cfg), cfg.max_dofs);
}

TEST(AdaptiveLoop, RejectsInvalidConfigurations) {
    AdaptConfig cfg;
    cfg.mode = AdaptMode::goa;
    EXPECT_THROW(run_adaptive(experiment1(), cfg), std::invalid_argument);
    cfg = {};
    cfg.theta = 0.0;
    EXPECT_THROW(run_adaptive(experiment2(), cfg), std::invalid_argument);
    cfg = {};
    cfg.p = 4;
    EXPECT_THROW(run_adaptive(experiment2(), cfg), std::invalid_argument);
    EXPECT_EQ(parse_mode("goa"), AdaptMode::goa);
    EXPECT_THROW(parse_mode("fast"), std::invalid_argument);
}

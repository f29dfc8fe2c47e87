#pragma once

// Error indicators, Dorfler marking and the SOLVE -> ESTIMATE -> MARK -> REFINE loop.

#include "asfem/analysis.hpp"
#include "asfem/bench.hpp"
#include "asfem/forms.hpp"
#include "asfem/resmin.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace asfem {

struct Indicators {
    std::vector<double> eta;  // per cell, nonnegative

    double total_sq() const {
        double s = 0.0;
        for (double v : eta) s += v * v;
        return s;
    }
    double total() const { return std::sqrt(total_sq()); }
    double sum() const { return std::accumulate(eta.begin(), eta.end(), 0.0); }
};

/// eta_T = |||eps|||_T with facet jumps split evenly between neighbours.
inline Indicators energy_indicators(const FunctionSpace& V, const Eigen::VectorXd& eps, const ProblemData& data) {
    const LocalNormParts parts = local_norm_parts(V, eps, data);
    Indicators ind;
    ind.eta.resize(parts.l2.size());
    for (std::size_t c = 0; c < ind.eta.size(); ++c)
        ind.eta[c] = std::sqrt(std::max(0.0, parts.triple_sq(static_cast<int>(c), data.gram_weight)));
    return ind;
}

struct GoaIndicators {
    Indicators local;        // |||eps|||_T |||eps*|||_T
    double estimate_sq = 0;  // |(eps, eps*)_G|
};

inline GoaIndicators goa_indicators(const FunctionSpace& V, const SparseMatrix& G, const Eigen::VectorXd& eps,
                                    const Eigen::VectorXd& eps_star, const ProblemData& data) {
    const Indicators a = energy_indicators(V, eps, data);
    const Indicators b = energy_indicators(V, eps_star, data);
    GoaIndicators out;
    out.local.eta.resize(a.eta.size());
    for (std::size_t c = 0; c < a.eta.size(); ++c) out.local.eta[c] = a.eta[c] * b.eta[c];
    out.estimate_sq = std::abs(eps.dot(G * eps_star));
    return out;
}

enum class MarkRule {
    squared,  // sum_M eta^2 >= theta^2 sum eta^2
    linear    // sum_M eta >= theta sum eta
};

/// Smallest greedy set reaching the bulk fraction; largest indicators first, ties by cell index.
/// Returned indices are sorted ascending.
inline std::vector<int> dorfler_mark(const Indicators& ind, double theta, MarkRule rule = MarkRule::squared) {
    if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("dorfler_mark: theta must lie in (0, 1]");
    const int n = static_cast<int>(ind.eta.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ind.eta[a] > ind.eta[b]; });
    auto weight = [&](int c) { return rule == MarkRule::squared ? ind.eta[c] * ind.eta[c] : ind.eta[c]; };

    std::vector<int> marked;
    double total = 0.0;
    for (int c : order) total += weight(c);
    if (!(total > 0.0)) return marked;
    if (theta == 1.0) {
        for (int c : order)
            if (ind.eta[c] > 0.0) marked.push_back(c);
    } else {
        const double target = (rule == MarkRule::squared ? theta * theta : theta) * total;
        double acc = 0.0;
        for (int c : order) {
            if (acc >= target) break;
            acc += weight(c);
            marked.push_back(c);
        }
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

enum class AdaptMode { energy, goa, uniform };

inline std::string to_string(AdaptMode m) {
    switch (m) {
        case AdaptMode::energy: return "energy";
        case AdaptMode::goa: return "goa";
        case AdaptMode::uniform: return "uniform";
    }
    return "?";
}

inline AdaptMode parse_mode(const std::string& s) {
    if (s == "energy") return AdaptMode::energy;
    if (s == "goa") return AdaptMode::goa;
    if (s == "uniform") return AdaptMode::uniform;
    throw std::invalid_argument("unknown mode '" + s + "' (expected energy, goa or uniform)");
}

struct AdaptConfig {
    AdaptMode mode = AdaptMode::energy;
    int p = 1;
    int k = 3;
    double alpha = 3.5;
    double theta = 0.5;
    double sigma_fallback = 1.0;    // Gram L2 weight when mu0 = 0
    long max_dofs = 30000;          // trial + test
    int max_iterations = 100;
    long saturation_cap = 20000;    // skip the enriched CIP solve above this many test DoFs
    int quadrature_degree = -1;     // volume degree override for error norms
};

struct AdaptRecord {
    int iter = 0;
    long dofs_trial = 0;
    long dofs_test = 0;
    long dofs_total = 0;
    double est_energy = 0.0;  // ||eps||_G
    double err_L2_rel = std::numeric_limits<double>::quiet_NaN();
    double err_triple = std::numeric_limits<double>::quiet_NaN();
    double err_qoi_rel = std::numeric_limits<double>::quiet_NaN();
    double saturation = std::numeric_limits<double>::quiet_NaN();
    long marked = 0;

    // diagnostics not in the CSV
    int cells = 0;
    double h_max = 0.0;
    double kkt = 0.0;
    double orthogonality = 0.0;
    double scale = 1.0;
    double adjoint_kkt = 0.0;
    double adjoint_scale = 1.0;
    double goa_estimate = std::numeric_limits<double>::quiet_NaN();  // sqrt|(eps, eps*)_G|
    double goa_local_sum = std::numeric_limits<double>::quiet_NaN(); // (sum |||eps|||_T^2)^1/2 (sum |||eps*|||_T^2)^1/2
    double theta_gap = std::numeric_limits<double>::quiet_NaN();     // |||theta_h - u_h|||
    double err_qoi_abs = std::numeric_limits<double>::quiet_NaN();
};

/// What the loop exposes to observers after each estimate step.
struct IterationState {
    int iter;
    std::shared_ptr<const Mesh> mesh;
    const FunctionSpace& trial;
    const FunctionSpace& test;
    const SaddleSolution& primal;
    const Indicators& indicators;
    const std::vector<int>& marked;
    const AdaptRecord& record;
};

struct AdaptResult {
    std::vector<AdaptRecord> records;
    std::shared_ptr<const Mesh> final_mesh;
};

using IterationObserver = std::function<void(const IterationState&)>;

/// Problem data with the run's CIP parameters and Gram weight.
inline ProblemData configured_data(const Benchmark& bm, const AdaptConfig& cfg) {
    ProblemData data = bm.data;
    data.cip_exponent = cfg.alpha;
    data.penalty_order = cfg.k;
    data.gram_weight = default_gram_weight(data.reaction_floor, cfg.sigma_fallback);
    data.validate();
    return data;
}

inline void validate(const AdaptConfig& cfg) {
    if (cfg.p < 1 || cfg.p > 3) throw std::invalid_argument("p must be in 1..3");
    if (!(cfg.k <= cfg.p || (cfg.k > std::max(cfg.p, 2) && cfg.k <= 6)))
        throw std::invalid_argument("k must satisfy k <= p or max(p,2) < k <= 6");
    if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(cfg.sigma_fallback > 0.0)) throw std::invalid_argument("sigma fallback must be positive");
    if (cfg.max_iterations < 0) throw std::invalid_argument("max iterations must be >= 0");
    if (cfg.max_dofs <= 0) throw std::invalid_argument("max dofs must be positive");
}

inline long total_dofs(const std::shared_ptr<const Mesh>& mesh, const AdaptConfig& cfg) {
    return FunctionSpace::lagrange(mesh, cfg.p).dim() + FunctionSpace::enriched(mesh, cfg.p, cfg.k).dim();
}

inline AdaptResult run_adaptive(const Benchmark& bm, const AdaptConfig& cfg, const IterationObserver& observer = {}) {
    validate(cfg);
    if (cfg.mode == AdaptMode::goa && !bm.qoi_region)
        throw std::invalid_argument("goal-oriented mode needs a benchmark with a QoI region");
    const ProblemData data = configured_data(bm, cfg);
    const bool has_exact = static_cast<bool>(bm.exact);
    double exact_l2 = 0.0;
    if (has_exact) {
        Mesh fine = bm.initial_mesh;
        while (fine.num_cells() < 8192) fine = refine_all(fine);
        exact_l2 = l2_norm(fine, bm.exact, 16);
    }

    AdaptResult result;
    auto mesh = std::make_shared<const Mesh>(bm.initial_mesh);
    for (int iter = 0;; ++iter) {
        const FunctionSpace U = FunctionSpace::lagrange(mesh, cfg.p);
        const FunctionSpace V = FunctionSpace::enriched(mesh, cfg.p, cfg.k);
        AdaptRecord rec;
        rec.iter = iter;
        rec.dofs_trial = U.dim();
        rec.dofs_test = V.dim();
        rec.dofs_total = rec.dofs_trial + rec.dofs_test;
        rec.cells = mesh->num_cells();
        rec.h_max = mesh->max_diameter();

        const SparseMatrix G = assemble_gram(V, data);
        const SparseMatrix B_full = assemble_b(V, V, data);
        const SparseMatrix B = B_full.leftCols(U.dim());
        const Eigen::VectorXd l = assemble_rhs(V, data);

        std::unique_ptr<SaddleFactorization> K;
        SaddleSolution primal;
        try {
            K = std::make_unique<SaddleFactorization>(G, B);
            primal = solve_saddle(*K, B, l);
        } catch (const SolverError& e) {
            throw SolverError("iteration " + std::to_string(iter) + ": " + e.what());
        }
        rec.kkt = primal.kkt_residual;
        rec.orthogonality = primal.orthogonality;
        rec.scale = primal.scale;
        rec.est_energy = std::sqrt(std::max(0.0, primal.epsilon.dot(G * primal.epsilon)));

        if (has_exact) {
            const NormReport err = error_norms(U, primal.u, data, bm.exact, cfg.quadrature_degree);
            rec.err_L2_rel = err.l2 / exact_l2;
            rec.err_triple = err.triple;
        }
        if (bm.qoi_region && has_exact) {
            const QoiError q = qoi_error(U, primal.u, bm.exact, *bm.qoi_region);
            rec.err_qoi_rel = q.value;
            rec.err_qoi_abs = std::abs(q.reference - q.discrete);
        }
        if (V.has_bubbles() && V.dim() <= cfg.saturation_cap) {
            Eigen::VectorXd theta_h;
            try {
                theta_h = solve_cip_enriched(B_full, l);
            } catch (const SolverError& e) {
                throw SolverError("iteration " + std::to_string(iter) + ": " + e.what());
            }
            const Eigen::VectorXd diff = theta_h - inject_trial(U, V, primal.u);
            rec.theta_gap = std::sqrt(local_norm_parts(V, diff, data).total_triple_sq(data.gram_weight));
            if (has_exact) {
                const NormReport et = error_norms(V, theta_h, data, bm.exact, cfg.quadrature_degree);
                rec.saturation = et.triple / rec.err_triple;
            }
        }

        Indicators ind;
        std::vector<int> marked;
        switch (cfg.mode) {
            case AdaptMode::energy:
                ind = energy_indicators(V, primal.epsilon, data);
                marked = dorfler_mark(ind, cfg.theta, MarkRule::squared);
                break;
            case AdaptMode::goa: {
                const Eigen::VectorXd q_test = assemble_qoi(V, *bm.qoi_region);
                AdjointSolution adj;
                try {
                    adj = solve_adjoint(*K, GramSolver(G), B_full, q_test);
                } catch (const SolverError& e) {
                    throw SolverError("iteration " + std::to_string(iter) + ": " + e.what());
                }
                rec.adjoint_kkt = adj.kkt_residual;
                rec.adjoint_scale = adj.scale;
                const GoaIndicators goa = goa_indicators(V, G, primal.epsilon, adj.eps_star, data);
                rec.goa_estimate = std::sqrt(goa.estimate_sq);
                rec.goa_local_sum = energy_indicators(V, primal.epsilon, data).total() *
                                    energy_indicators(V, adj.eps_star, data).total();
                ind = goa.local;
                marked = dorfler_mark(ind, cfg.theta, MarkRule::linear);
                break;
            }
            case AdaptMode::uniform:
                ind = energy_indicators(V, primal.epsilon, data);
                marked.resize(mesh->num_cells());
                std::iota(marked.begin(), marked.end(), 0);
                break;
        }
        rec.marked = static_cast<long>(marked.size());
        result.records.push_back(rec);
        if (observer) observer(IterationState{iter, mesh, U, V, primal, ind, marked, result.records.back()});

        if (iter >= cfg.max_iterations || marked.empty()) break;
        auto next = std::make_shared<const Mesh>(cfg.mode == AdaptMode::uniform ? refine_all(refine_all(*mesh))
                                                                                 : refine(*mesh, marked));
        if (total_dofs(next, cfg) > cfg.max_dofs) break;
        mesh = next;
    }
    result.final_mesh = mesh;
    return result;
}

}  // namespace asfem

#pragma once

// Residual minimization onto the enriched test space as the saddle-point system
//
//   [ G   B ] [eps]   [l]
//   [ B^T 0 ] [ u ] = [0]
//
// with G the test Gram matrix and B = b_h(trial, test). The adjoint problem
// shares the matrix and uses the right-hand side [0; q].

#include "asfem/forms.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/SparseCholesky>

#include <memory>
#include <stdexcept>
#include <string>

namespace asfem {

/// Raised when a factorization fails; carries Eigen's diagnostic (zero pivot location).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SaddleSolution {
    Eigen::VectorXd epsilon;   // residual representative, enriched coefficients
    Eigen::VectorXd u;         // minimizer, trial coefficients
    double kkt_residual = 0.0;     // max-norm of the block residual
    double orthogonality = 0.0;    // max_w |b_h(w, eps)| over trial basis functions
    double scale = 1.0;            // 1 + max-norm of the right-hand side
};

struct AdjointSolution {
    Eigen::VectorXd nu_star;   // enriched
    Eigen::VectorXd w_star;    // trial
    Eigen::VectorXd eps_star;  // enriched
    double kkt_residual = 0.0;
    double scale = 1.0;
};

namespace detail {

inline SparseMatrix saddle_matrix(const SparseMatrix& G, const SparseMatrix& B) {
    const Eigen::Index n = G.rows(), m = B.cols();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(G.nonZeros() + 2 * B.nonZeros());
    for (Eigen::Index k = 0; k < G.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(G, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index k = 0; k < B.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(B, k); it; ++it) {
            t.emplace_back(it.row(), n + it.col(), it.value());
            t.emplace_back(n + it.col(), it.row(), it.value());
        }
    SparseMatrix K(n + m, n + m);
    K.setFromTriplets(t.begin(), t.end());
    K.makeCompressed();
    return K;
}

// COLAMD can stall on matrices with empty columns, so those are rejected up front.
inline void require_no_empty_column(const SparseMatrix& K, const char* what) {
    for (Eigen::Index j = 0; j < K.outerSize(); ++j) {
        bool any = false;
        for (SparseMatrix::InnerIterator it(K, j); it && !any; ++it) any = it.value() != 0.0;
        if (!any) throw SolverError(std::string(what) + ": structurally singular, zero column at " + std::to_string(j));
    }
}

inline double max_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace detail

/// LU factorization of the block system; reusable for several right-hand sides.
class SaddleFactorization {
public:
    SaddleFactorization(const SparseMatrix& G, const SparseMatrix& B) : n_(G.rows()), m_(B.cols()) {
        if (G.rows() != G.cols() || B.rows() != G.rows())
            throw std::invalid_argument("SaddleFactorization: G must be square and B must have as many rows as G");
        K_ = detail::saddle_matrix(G, B);
        detail::require_no_empty_column(K_, "saddle-point factorization failed");
        lu_.analyzePattern(K_);
        lu_.factorize(K_);
        if (lu_.info() != Eigen::Success)
            throw SolverError("saddle-point factorization failed: " + lu_.lastErrorMessage());
    }

    Eigen::Index test_dim() const { return n_; }
    Eigen::Index trial_dim() const { return m_; }
    const SparseMatrix& matrix() const { return K_; }

    /// Solves [G B; B^T 0][x; y] = [top; bottom]; returns the stacked solution.
    Eigen::VectorXd solve(const Eigen::VectorXd& top, const Eigen::VectorXd& bottom) const {
        Eigen::VectorXd rhs(n_ + m_);
        rhs << top, bottom;
        Eigen::VectorXd x = lu_.solve(rhs);
        if (lu_.info() != Eigen::Success) throw SolverError("saddle-point solve failed");
        return x;
    }

    double residual(const Eigen::VectorXd& x, const Eigen::VectorXd& top, const Eigen::VectorXd& bottom) const {
        Eigen::VectorXd rhs(n_ + m_);
        rhs << top, bottom;
        return detail::max_norm(K_ * x - rhs);
    }

private:
    Eigen::Index n_, m_;
    SparseMatrix K_;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

inline SaddleSolution solve_saddle(const SaddleFactorization& K, const SparseMatrix& B, const Eigen::VectorXd& l) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(K.trial_dim());
    const Eigen::VectorXd x = K.solve(l, zero);
    SaddleSolution s;
    s.epsilon = x.head(K.test_dim());
    s.u = x.tail(K.trial_dim());
    s.kkt_residual = K.residual(x, l, zero);
    s.orthogonality = detail::max_norm(B.transpose() * s.epsilon);
    s.scale = 1.0 + detail::max_norm(l);
    return s;
}

/// Primal solve with a fresh factorization.
inline SaddleSolution solve_saddle(const SparseMatrix& G, const SparseMatrix& B, const Eigen::VectorXd& l) {
    return solve_saddle(SaddleFactorization(G, B), B, l);
}

/// Cholesky of the Gram matrix (Riesz map inverse).
class GramSolver {
public:
    explicit GramSolver(const SparseMatrix& G) {
        llt_.compute(G);
        if (llt_.info() != Eigen::Success) throw SolverError("Gram matrix is not positive definite");
    }
    Eigen::VectorXd solve(const Eigen::VectorXd& r) const { return llt_.solve(r); }

private:
    Eigen::SimplicialLDLT<SparseMatrix> llt_;
};

/// Adjoint saddle problem with right-hand side [0; q], followed by the adjoint
/// residual representative G eps* = q_test - B_full^T nu*.
///
/// `B_full` is b_h on enriched x enriched; its leading `trial_dim` columns are B.
inline AdjointSolution solve_adjoint(const SaddleFactorization& K, const GramSolver& gram, const SparseMatrix& B_full,
                                     const Eigen::VectorXd& q_test) {
    const Eigen::Index n = K.test_dim(), m = K.trial_dim();
    if (q_test.size() != n || B_full.rows() != n || B_full.cols() != n)
        throw std::invalid_argument("solve_adjoint: dimension mismatch");
    const Eigen::VectorXd q = q_test.head(m);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd x = K.solve(zero, q);
    AdjointSolution a;
    a.nu_star = x.head(n);
    a.w_star = x.tail(m);
    a.kkt_residual = K.residual(x, zero, q);
    a.scale = 1.0 + detail::max_norm(q);
    a.eps_star = gram.solve(q_test - B_full.transpose() * a.nu_star);
    return a;
}

/// Plain CIP solve on the enriched space: B_full theta = l.
inline Eigen::VectorXd solve_cip_enriched(const SparseMatrix& B_full, const Eigen::VectorXd& l) {
    detail::require_no_empty_column(B_full, "enriched CIP factorization failed");
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(B_full);
    lu.factorize(B_full);
    if (lu.info() != Eigen::Success) throw SolverError("enriched CIP factorization failed: " + lu.lastErrorMessage());
    return lu.solve(l);
}

}  // namespace asfem

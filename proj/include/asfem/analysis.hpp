#pragma once

// Norms, projections and interpolation operators used to measure errors.

#include "asfem/forms.hpp"
#include "asfem/spaces.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace asfem {

struct NormReport {
    double l2 = 0.0;
    double triple = 0.0;  // sigma0 L2 + boundary flux + CIP jumps
    double semi_h = 0.0;  // (sum_T beta_T / h_T ||.||_T^2)^{1/2}
    double sharp = 0.0;   // triple + (k^2 h^{1/2} p^{1/2} + k^{alpha/2} p^{-1/2}) semi_h
};

/// Norms of u - v for a discrete v on V and a smooth u. Only v contributes
/// facet jumps. Passing an empty `exact` gives the norms of v itself.
inline NormReport error_norms(const FunctionSpace& V, const Eigen::VectorXd& coeffs, const ProblemData& data,
                              const ScalarField& exact = {}, int volume_degree = -1) {
    const LocalNormParts parts = local_norm_parts(V, coeffs, data, exact, volume_degree);
    const Mesh& mesh = V.mesh();

    // beta_T = max |b| over the cell quadrature points
    const QuadratureRule rule = triangle_rule(default_degrees(V, data).volume);
    double semi_sq = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const AffineMap m = mesh.map(c);
        double beta = 0.0;
        for (const auto& r : rule.points) beta = std::max(beta, norm(data.advection(m(r))));
        semi_sq += beta / mesh.cell_diameters()[c] * parts.l2[c];
    }

    NormReport report;
    report.l2 = std::sqrt(parts.total_l2_sq());
    report.triple = std::sqrt(parts.total_triple_sq(data.gram_weight));
    report.semi_h = std::sqrt(semi_sq);
    const double p = std::max(1, V.lagrange_degree());
    const double k = data.penalty_order;
    const double h = mesh.max_diameter();
    report.sharp = report.triple +
                   (k * k * std::sqrt(h) * std::sqrt(p) + std::pow(k, 0.5 * data.cip_exponent) / std::sqrt(p)) *
                       report.semi_h;
    return report;
}

/// L2 norm of a smooth function by cellwise quadrature on `mesh`.
template <class F>
double l2_norm(const Mesh& mesh, F&& u, int degree = 16) {
    const QuadratureRule rule = triangle_rule(degree);
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const AffineMap m = mesh.map(c);
        double sc = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double v = u(m(rule.points[q]));
            sc += rule.weights[q] * v * v;
        }
        s += sc * m.det();
    }
    return std::sqrt(s);
}

/// Right-hand side (u, phi_i) of the L2 projection.
template <class F>
Eigen::VectorXd l2_moments(const FunctionSpace& V, F&& u, int degree = -1) {
    if (degree < 0) degree = std::min(2 * V.max_degree() + 6, max_quadrature_degree);
    const QuadratureRule rule = triangle_rule(degree);
    const detail::Tabulation tab = detail::tabulate(V, rule);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(V.dim());
    for (int c = 0; c < V.mesh().num_cells(); ++c) {
        const AffineMap m = V.mesh().map(c);
        const auto dofs = V.cell_dofs(c);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = u(m(rule.points[q])) * rule.weights[q] * m.det();
            for (int i = 0; i < tab.n; ++i) b[dofs[i]] += w * tab.values[q * tab.n + i];
        }
    }
    return b;
}

/// L2-orthogonal projection onto V.
template <class F>
Eigen::VectorXd l2_project(const FunctionSpace& V, F&& u, int degree = -1) {
    const SparseMatrix M = assemble_mass(V, degree);
    Eigen::SimplicialLDLT<SparseMatrix> solver(M);
    if (solver.info() != Eigen::Success) throw std::runtime_error("l2_project: singular mass matrix");
    return solver.solve(l2_moments(V, u, degree));
}

/// Piecewise polynomial of degree p without continuity: nodal values per cell,
/// in the local order of the Lagrange reference nodes.
struct BrokenFunction {
    int degree = 1;
    int local_dim = 3;
    std::vector<double> values;  // [cell * local_dim + i]

    double& at(int c, int i) { return values[static_cast<std::size_t>(c) * local_dim + i]; }
    double at(int c, int i) const { return values[static_cast<std::size_t>(c) * local_dim + i]; }
};

inline BrokenFunction make_broken(const Mesh& mesh, int p) {
    BrokenFunction v;
    v.degree = p;
    v.local_dim = (p + 1) * (p + 2) / 2;
    v.values.assign(static_cast<std::size_t>(mesh.num_cells()) * v.local_dim, 0.0);
    return v;
}

/// Restriction of a continuous Lagrange function to its broken representation.
inline BrokenFunction to_broken(const FunctionSpace& V, const Eigen::VectorXd& coeffs) {
    BrokenFunction v = make_broken(V.mesh(), V.lagrange_degree());
    for (int c = 0; c < V.mesh().num_cells(); ++c) {
        const auto dofs = V.cell_dofs(c);
        for (int i = 0; i < v.local_dim; ++i) v.at(c, i) = coeffs[dofs[i]];
    }
    return v;
}

/// Oswald interpolation: every node takes the mean of the one-sided values of the cells sharing it.
inline Eigen::VectorXd oswald_interpolate(const FunctionSpace& V, const BrokenFunction& v) {
    if (V.kind() != SpaceKind::lagrange || V.lagrange_degree() != v.degree)
        throw std::invalid_argument("oswald_interpolate: target must be the continuous space of the same degree");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(V.dim());
    Eigen::VectorXd count = Eigen::VectorXd::Zero(V.dim());
    for (int c = 0; c < V.mesh().num_cells(); ++c) {
        const auto dofs = V.cell_dofs(c);
        for (int i = 0; i < v.local_dim; ++i) {
            sum[dofs[i]] += v.at(c, i);
            count[dofs[i]] += 1.0;
        }
    }
    return sum.cwiseQuotient(count);
}

/// Value of a broken function on cell c at reference point r.
inline double evaluate_broken(const ReferenceBasis& basis, const BrokenFunction& v, int c, const Point& r) {
    std::vector<double> phi(basis.count());
    basis.evaluate(r, phi);
    double s = 0.0;
    for (int i = 0; i < basis.count(); ++i) s += v.at(c, i) * phi[i];
    return s;
}

/// Mean of a smooth function over a rectangle by composite tensor Gauss quadrature.
template <class F>
double region_mean(F&& u, const Rectangle& r, int degree = 20, int subdivisions = 8) {
    const QuadratureRule g = edge_rule(degree);
    const double hx = (r.x1 - r.x0) / subdivisions, hy = (r.y1 - r.y0) / subdivisions;
    double s = 0.0;
    for (int i = 0; i < subdivisions; ++i)
        for (int j = 0; j < subdivisions; ++j)
            for (std::size_t a = 0; a < g.size(); ++a)
                for (std::size_t b = 0; b < g.size(); ++b)
                    s += g.weights[a] * g.weights[b] *
                         u(Point{r.x0 + (i + g.points[a].x) * hx, r.y0 + (j + g.points[b].x) * hy});
    return s * hx * hy / r.area();
}

struct QoiError {
    double value = 0.0;     // relative error, or absolute if `relative` is false
    bool relative = true;   // false when q(u) == 0
    double reference = 0.0; // q(u)
    double discrete = 0.0;  // q(u_h)
};

/// |q(u) - q(u_h)| / |q(u)| for the region mean q.
inline QoiError qoi_error(const FunctionSpace& V, const Eigen::VectorXd& coeffs, const ScalarField& exact,
                          const Rectangle& region) {
    QoiError e;
    e.reference = region_mean(exact, region);
    e.discrete = assemble_qoi(V, region).dot(coeffs);
    const double diff = std::abs(e.reference - e.discrete);
    e.relative = e.reference != 0.0;
    e.value = e.relative ? diff / std::abs(e.reference) : diff;
    return e;
}

}  // namespace asfem

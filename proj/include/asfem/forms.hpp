#pragma once

// Discrete operators of the advection-reaction CIP formulation:
//
//   a(v, w) = (mu v, w) - (v, b.grad w) + (b.n v, w)_{outflow}
//   j(v, w) = sum_e gamma_e ([grad v.n_e], [grad w.n_e])_e,
//             gamma_e = h_e^2 / k^alpha * max_e |b.n_e|
//   b_h     = a + j
//   G       = sigma0 (v, w) + 1/2 (|b.n| v, w)_{boundary} + j(v, w)
//
// Matrices are stored test-row / trial-column: B(i, j) = b_h(phi_j, psi_i).

#include "asfem/mesh.hpp"
#include "asfem/refquad.hpp"
#include "asfem/spaces.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace asfem {

using ScalarField = std::function<double(const Point&)>;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct ProblemData {
    AdvectionField advection;
    ScalarField reaction;
    double reaction_floor = 0.0;  // mu0
    ScalarField source;
    ScalarField inflow;           // g, imposed weakly on the inflow boundary
    double cip_exponent = 3.5;    // alpha
    int penalty_order = 3;        // k in gamma
    double gram_weight = 1.0;     // sigma0, L2 weight of the test inner product

    void validate() const {
        if (!advection || !reaction || !source || !inflow)
            throw std::invalid_argument("ProblemData: all coefficient functions must be set");
        if (!(cip_exponent > 0.0)) throw std::invalid_argument("ProblemData: CIP exponent must be positive");
        if (!(gram_weight > 0.0)) throw std::invalid_argument("ProblemData: Gram L2 weight must be positive");
        if (penalty_order < 1) throw std::invalid_argument("ProblemData: penalty order must be >= 1");
    }
};

/// sigma0 = mu0 when mu0 > 0, else `fallback`.
inline double default_gram_weight(double reaction_floor, double fallback = 1.0) {
    return reaction_floor > 0.0 ? reaction_floor : fallback;
}

struct QuadratureDegrees {
    int volume;
    int facet;
};

/// 2k+4 for cells and 2k+2 for facets, k the highest degree in play.
inline QuadratureDegrees default_degrees(const FunctionSpace& V, const ProblemData& data) {
    const int k = std::max(V.max_degree(), data.penalty_order);
    return {std::min(2 * k + 4, max_quadrature_degree), std::min(2 * k + 2, max_quadrature_degree)};
}

/// Penalty weight of an interior facet; the sup of |b.n| is sampled at Gauss points.
inline double cip_penalty(const Mesh& mesh, const InteriorFacet& f, const ProblemData& data,
                          const QuadratureRule& sampling) {
    const auto [p, q] = mesh.facet_points(f);
    double bmax = 0.0;
    for (const auto& t : sampling.points) bmax = std::max(bmax, std::abs(dot(data.advection(p + t.x * (q - p)), f.normal)));
    return f.length * f.length / std::pow(static_cast<double>(data.penalty_order), data.cip_exponent) * bmax;
}

inline std::vector<double> cip_penalties(const Mesh& mesh, const ProblemData& data) {
    const QuadratureRule sampling = edge_rule(std::min(2 * data.penalty_order + 2, max_quadrature_degree));
    std::vector<double> gamma;
    gamma.reserve(mesh.interior_facets().size());
    for (const auto& f : mesh.interior_facets()) gamma.push_back(cip_penalty(mesh, f, data, sampling));
    return gamma;
}

namespace detail {

struct Tabulation {
    int n = 0;
    std::vector<double> values;  // [q * n + i]
    std::vector<Point> grads;    // reference gradients
};

inline Tabulation tabulate(const FunctionSpace& V, const QuadratureRule& rule) {
    Tabulation t;
    t.n = V.local_dim();
    t.values.resize(rule.size() * t.n);
    t.grads.resize(rule.size() * t.n);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        V.local_values(rule.points[q], std::span(t.values).subspan(q * t.n, t.n));
        V.local_gradients(rule.points[q], std::span(t.grads).subspan(q * t.n, t.n));
    }
    return t;
}

inline void scatter(const Eigen::MatrixXd& local, std::span<const int> rows, std::span<const int> cols,
                    std::vector<Eigen::Triplet<double>>& out) {
    for (Eigen::Index i = 0; i < local.rows(); ++i)
        for (Eigen::Index j = 0; j < local.cols(); ++j)
            if (local(i, j) != 0.0) out.emplace_back(rows[i], cols[j], local(i, j));
}

struct VolumeTerms {
    double mass_weight = 0.0;  // constant L2 weight
    bool reaction = false;     // (mu v, w)
    bool advection = false;    // -(v, b.grad w)
};

inline void volume_terms(const FunctionSpace& trial, const FunctionSpace& test, const ProblemData* data,
                         VolumeTerms terms, int degree, std::vector<Eigen::Triplet<double>>& out) {
    const QuadratureRule rule = triangle_rule(degree);
    const Tabulation tt = tabulate(trial, rule), ts = tabulate(test, rule);
    const Mesh& mesh = trial.mesh();
    Eigen::MatrixXd local(ts.n, tt.n);
    std::vector<double> bgrad(ts.n);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const AffineMap m = mesh.map(c);
        const double jac = m.det();
        local.setZero();
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double w = rule.weights[q] * jac;
            const Point x = m(rule.points[q]);
            const double* phi = &tt.values[q * tt.n];
            const double* psi = &ts.values[q * ts.n];
            double mass = terms.mass_weight;
            if (terms.reaction) {
                const double mu = data->reaction(x);
                if (mu < data->reaction_floor - 1e-14)
                    throw std::invalid_argument("ProblemData: reaction below the stated floor at a quadrature point");
                mass += mu;
            }
            if (mass != 0.0)
                for (int i = 0; i < ts.n; ++i)
                    for (int j = 0; j < tt.n; ++j) local(i, j) += w * mass * psi[i] * phi[j];
            if (terms.advection) {
                const Point b = data->advection(x);
                for (int i = 0; i < ts.n; ++i) bgrad[i] = dot(b, m.push_gradient(ts.grads[q * ts.n + i]));
                for (int i = 0; i < ts.n; ++i)
                    for (int j = 0; j < tt.n; ++j) local(i, j) -= w * bgrad[i] * phi[j];
            }
        }
        scatter(local, test.cell_dofs(c), trial.cell_dofs(c), out);
    }
}

/// Boundary mass with weight w(b.n).
template <class Weight>
void boundary_terms(const FunctionSpace& trial, const FunctionSpace& test, const ProblemData& data, Weight weight,
                    int degree, std::vector<Eigen::Triplet<double>>& out) {
    const QuadratureRule rule = edge_rule(degree);
    const Mesh& mesh = trial.mesh();
    std::vector<double> phi(trial.local_dim()), psi(test.local_dim());
    Eigen::MatrixXd local(test.local_dim(), trial.local_dim());
    for (const auto& f : mesh.boundary_facets()) {
        const auto [p, q] = mesh.edge_points(f.cell, f.local);
        const AffineMap m = mesh.map(f.cell);
        local.setZero();
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const Point x = p + rule.points[k].x * (q - p);
            const double wt = weight(dot(data.advection(x), f.normal));
            if (wt == 0.0) continue;
            const Point r = m.inverse(x);
            trial.local_values(r, phi);
            test.local_values(r, psi);
            const double w = rule.weights[k] * f.length * wt;
            for (int i = 0; i < test.local_dim(); ++i)
                for (int j = 0; j < trial.local_dim(); ++j) local(i, j) += w * psi[i] * phi[j];
        }
        scatter(local, test.cell_dofs(f.cell), trial.cell_dofs(f.cell), out);
    }
}

/// Normal-gradient jumps of all local basis functions of both neighbours at
/// one facet point: [g+.n for plus dofs, -g-.n for minus dofs].
inline void facet_jumps(const FunctionSpace& V, const InteriorFacet& f, const Point& x, std::vector<Point>& scratch,
                        std::vector<double>& jumps) {
    const Mesh& mesh = V.mesh();
    const int n = V.local_dim();
    jumps.resize(2 * n);
    scratch.resize(n);
    const AffineMap mp = mesh.map(f.plus), mm = mesh.map(f.minus);
    V.physical_gradients(f.plus, mp.inverse(x), scratch);
    for (int i = 0; i < n; ++i) jumps[i] = dot(scratch[i], f.normal);
    V.physical_gradients(f.minus, mm.inverse(x), scratch);
    for (int i = 0; i < n; ++i) jumps[n + i] = -dot(scratch[i], f.normal);
}

inline std::vector<int> facet_dofs(const FunctionSpace& V, const InteriorFacet& f) {
    std::vector<int> dofs(V.cell_dofs(f.plus).begin(), V.cell_dofs(f.plus).end());
    const auto minus = V.cell_dofs(f.minus);
    dofs.insert(dofs.end(), minus.begin(), minus.end());
    return dofs;
}

inline void jump_terms(const FunctionSpace& trial, const FunctionSpace& test, const ProblemData& data, int degree,
                       std::vector<Eigen::Triplet<double>>& out) {
    const QuadratureRule rule = edge_rule(degree);
    const Mesh& mesh = trial.mesh();
    std::vector<Point> scratch;
    std::vector<double> jt, js;
    Eigen::MatrixXd local(2 * test.local_dim(), 2 * trial.local_dim());
    const std::vector<double> penalty = cip_penalties(mesh, data);
    for (std::size_t fi = 0; fi < mesh.interior_facets().size(); ++fi) {
        const InteriorFacet& f = mesh.interior_facets()[fi];
        const double gamma = penalty[fi];
        if (gamma == 0.0) continue;
        const auto [p, q] = mesh.facet_points(f);
        local.setZero();
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const Point x = p + rule.points[k].x * (q - p);
            facet_jumps(trial, f, x, scratch, jt);
            facet_jumps(test, f, x, scratch, js);
            const double w = gamma * rule.weights[k] * f.length;
            for (Eigen::Index i = 0; i < local.rows(); ++i)
                for (Eigen::Index j = 0; j < local.cols(); ++j) local(i, j) += w * js[i] * jt[j];
        }
        scatter(local, facet_dofs(test, f), facet_dofs(trial, f), out);
    }
}

inline SparseMatrix from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<double>>& t) {
    SparseMatrix m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

inline void require_same_mesh(const FunctionSpace& a, const FunctionSpace& b) {
    if (!a.same_mesh(b)) throw std::invalid_argument("assembly: trial and test spaces live on different meshes");
}

}  // namespace detail

/// Selects the pieces of b_h to assemble.
enum FormTerm : unsigned {
    reaction_term = 1u,
    advection_term = 2u,
    outflow_term = 4u,
    jump_term = 8u,
    all_terms = 15u,
};

/// B(i, j) = b_h(trial_j, test_i), restricted to `terms`.
inline SparseMatrix assemble_b(const FunctionSpace& trial, const FunctionSpace& test, const ProblemData& data,
                               unsigned terms = all_terms) {
    detail::require_same_mesh(trial, test);
    data.validate();
    const QuadratureDegrees deg = default_degrees(test, data);
    std::vector<Eigen::Triplet<double>> t;
    if (terms & (reaction_term | advection_term))
        detail::volume_terms(trial, test, &data,
                             {.reaction = (terms & reaction_term) != 0, .advection = (terms & advection_term) != 0},
                             deg.volume, t);
    if (terms & outflow_term)
        detail::boundary_terms(trial, test, data, [](double bn) { return bn > 0.0 ? bn : 0.0; }, deg.facet, t);
    if (terms & jump_term) detail::jump_terms(trial, test, data, deg.facet, t);
    return detail::from_triplets(test.dim(), trial.dim(), t);
}

/// Test-space inner product inducing the triple norm with L2 weight sigma0.
inline SparseMatrix assemble_gram(const FunctionSpace& test, const ProblemData& data) {
    data.validate();
    const QuadratureDegrees deg = default_degrees(test, data);
    std::vector<Eigen::Triplet<double>> t;
    detail::volume_terms(test, test, &data, {.mass_weight = data.gram_weight}, deg.volume, t);
    detail::boundary_terms(test, test, data, [](double bn) { return 0.5 * std::abs(bn); }, deg.facet, t);
    detail::jump_terms(test, test, data, deg.facet, t);
    return detail::from_triplets(test.dim(), test.dim(), t);
}

inline SparseMatrix assemble_mass(const FunctionSpace& V, int degree = -1) {
    if (degree < 0) degree = std::min(2 * V.max_degree() + 4, max_quadrature_degree);
    std::vector<Eigen::Triplet<double>> t;
    detail::volume_terms(V, V, nullptr, {.mass_weight = 1.0}, degree, t);
    return detail::from_triplets(V.dim(), V.dim(), t);
}

/// (b.n v, w) over the whole boundary.
inline SparseMatrix assemble_boundary_flux(const FunctionSpace& V, const ProblemData& data) {
    std::vector<Eigen::Triplet<double>> t;
    detail::boundary_terms(V, V, data, [](double bn) { return bn; }, default_degrees(V, data).facet, t);
    return detail::from_triplets(V.dim(), V.dim(), t);
}

/// l(w) = (f, w) - (b.n g, w)_{inflow}.
inline Eigen::VectorXd assemble_rhs(const FunctionSpace& test, const ProblemData& data) {
    data.validate();
    const QuadratureDegrees deg = default_degrees(test, data);
    const Mesh& mesh = test.mesh();
    Eigen::VectorXd l = Eigen::VectorXd::Zero(test.dim());
    const QuadratureRule vol = triangle_rule(deg.volume);
    const detail::Tabulation tab = detail::tabulate(test, vol);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const AffineMap m = mesh.map(c);
        const auto dofs = test.cell_dofs(c);
        for (std::size_t q = 0; q < vol.size(); ++q) {
            const double fw = data.source(m(vol.points[q])) * vol.weights[q] * m.det();
            if (fw == 0.0) continue;
            for (int i = 0; i < tab.n; ++i) l[dofs[i]] += fw * tab.values[q * tab.n + i];
        }
    }
    const QuadratureRule edge = edge_rule(deg.facet);
    std::vector<double> psi(test.local_dim());
    for (const auto& f : mesh.boundary_facets()) {
        const auto [p, q] = mesh.edge_points(f.cell, f.local);
        const AffineMap m = mesh.map(f.cell);
        const auto dofs = test.cell_dofs(f.cell);
        for (std::size_t k = 0; k < edge.size(); ++k) {
            const Point x = p + edge.points[k].x * (q - p);
            const double bn = dot(data.advection(x), f.normal);
            if (bn >= 0.0) continue;
            const double gw = -bn * data.inflow(x) * edge.weights[k] * f.length;
            if (gw == 0.0) continue;
            test.local_values(m.inverse(x), psi);
            for (int i = 0; i < test.local_dim(); ++i) l[dofs[i]] += gw * psi[i];
        }
    }
    return l;
}

/// Whether cell c lies inside the closed region (+1), outside its interior (0), or straddles it (-1).
inline int region_relation(const Mesh& mesh, int c, const Rectangle& r, double tol = 1e-12) {
    bool inside = true;
    std::array<bool, 4> sep{true, true, true, true};
    for (int i = 0; i < 3; ++i) {
        const Point v = mesh.vertex(c, i);
        inside = inside && r.contains_closed(v, tol);
        sep[0] = sep[0] && v.x <= r.x0 + tol;
        sep[1] = sep[1] && v.x >= r.x1 - tol;
        sep[2] = sep[2] && v.y <= r.y0 + tol;
        sep[3] = sep[3] && v.y >= r.y1 - tol;
    }
    if (inside) return 1;
    if (sep[0] || sep[1] || sep[2] || sep[3]) return 0;
    return -1;
}

/// q(w) = |region|^{-1} \int_region w. The mesh must resolve the region.
inline Eigen::VectorXd assemble_qoi(const FunctionSpace& V, const Rectangle& region) {
    const Mesh& mesh = V.mesh();
    const QuadratureRule rule = triangle_rule(std::min(2 * V.max_degree() + 2, max_quadrature_degree));
    const detail::Tabulation tab = detail::tabulate(V, rule);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(V.dim());
    const double inv = 1.0 / region.area();
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const int rel = region_relation(mesh, c, region);
        if (rel < 0)
            throw std::invalid_argument("assemble_qoi: cell " + std::to_string(c) + " straddles the QoI region");
        if (rel == 0) continue;
        const double jac = mesh.map(c).det();
        const auto dofs = V.cell_dofs(c);
        for (std::size_t k = 0; k < rule.size(); ++k)
            for (int i = 0; i < tab.n; ++i) q[dofs[i]] += inv * rule.weights[k] * jac * tab.values[k * tab.n + i];
    }
    return q;
}

/// Per-cell pieces of |||v - u|||^2 for a discrete v and optional smooth u.
struct LocalNormParts {
    std::vector<double> l2;        // ||v - u||_T^2
    std::vector<double> boundary;  // 1/2 || |b.n|^{1/2} (v - u) ||^2 on boundary facets of T
    std::vector<double> jump;      // half of gamma ||[grad v . n]||^2 of each interior facet of T

    double triple_sq(int c, double sigma0) const { return sigma0 * l2[c] + boundary[c] + jump[c]; }
    double total_triple_sq(double sigma0) const {
        double s = 0.0;
        for (std::size_t c = 0; c < l2.size(); ++c) s += triple_sq(static_cast<int>(c), sigma0);
        return s;
    }
    double total_l2_sq() const {
        double s = 0.0;
        for (double v : l2) s += v;
        return s;
    }
};

inline LocalNormParts local_norm_parts(const FunctionSpace& V, const Eigen::VectorXd& coeffs, const ProblemData& data,
                                       const ScalarField& exact = {}, int volume_degree = -1) {
    const Mesh& mesh = V.mesh();
    QuadratureDegrees deg = default_degrees(V, data);
    if (volume_degree > 0) deg = {volume_degree, volume_degree};
    LocalNormParts parts;
    parts.l2.assign(mesh.num_cells(), 0.0);
    parts.boundary.assign(mesh.num_cells(), 0.0);
    parts.jump.assign(mesh.num_cells(), 0.0);

    const QuadratureRule vol = triangle_rule(deg.volume);
    const detail::Tabulation tab = detail::tabulate(V, vol);
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const AffineMap m = mesh.map(c);
        const auto dofs = V.cell_dofs(c);
        double s = 0.0;
        for (std::size_t q = 0; q < vol.size(); ++q) {
            double v = 0.0;
            for (int i = 0; i < tab.n; ++i) v += coeffs[dofs[i]] * tab.values[q * tab.n + i];
            if (exact) v -= exact(m(vol.points[q]));
            s += vol.weights[q] * v * v;
        }
        parts.l2[c] = s * m.det();
    }

    const QuadratureRule edge = edge_rule(deg.facet);
    std::vector<double> psi(V.local_dim());
    for (const auto& f : mesh.boundary_facets()) {
        const auto [p, q] = mesh.edge_points(f.cell, f.local);
        const AffineMap m = mesh.map(f.cell);
        const auto dofs = V.cell_dofs(f.cell);
        double s = 0.0;
        for (std::size_t k = 0; k < edge.size(); ++k) {
            const Point x = p + edge.points[k].x * (q - p);
            V.local_values(m.inverse(x), psi);
            double v = 0.0;
            for (int i = 0; i < V.local_dim(); ++i) v += coeffs[dofs[i]] * psi[i];
            if (exact) v -= exact(x);
            s += edge.weights[k] * std::abs(dot(data.advection(x), f.normal)) * v * v;
        }
        parts.boundary[f.cell] += 0.5 * s * f.length;
    }

    std::vector<Point> scratch;
    std::vector<double> jumps;
    const std::vector<double> penalty = cip_penalties(mesh, data);
    for (std::size_t fi = 0; fi < mesh.interior_facets().size(); ++fi) {
        const InteriorFacet& f = mesh.interior_facets()[fi];
        const double gamma = penalty[fi];
        const auto [p, q] = mesh.facet_points(f);
        const auto dofs = detail::facet_dofs(V, f);
        double s = 0.0;
        for (std::size_t k = 0; k < edge.size(); ++k) {
            detail::facet_jumps(V, f, p + edge.points[k].x * (q - p), scratch, jumps);
            double j = 0.0;
            for (std::size_t i = 0; i < dofs.size(); ++i) j += coeffs[dofs[i]] * jumps[i];
            s += edge.weights[k] * j * j;
        }
        const double contribution = gamma * s * f.length;
        parts.jump[f.plus] += 0.5 * contribution;
        parts.jump[f.minus] += 0.5 * contribution;
    }
    return parts;
}

}  // namespace asfem

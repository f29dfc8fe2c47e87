#pragma once

// Global DoF layout for continuous Lagrange spaces, per-cell bubbles and
// their sum. In an enriched space the Lagrange block comes first, so the
// trial space embeds by zero padding.

#include "asfem/mesh.hpp"
#include "asfem/refquad.hpp"

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asfem {

enum class SpaceKind { lagrange, bubble, enriched };

class FunctionSpace {
public:
    static FunctionSpace lagrange(std::shared_ptr<const Mesh> mesh, int p) {
        return FunctionSpace(std::move(mesh), SpaceKind::lagrange, p, 0);
    }
    static FunctionSpace bubble(std::shared_ptr<const Mesh> mesh, int k) {
        return FunctionSpace(std::move(mesh), SpaceKind::bubble, 0, k);
    }
    /// U^p + B^k. For k <= p the bubble block is empty and the space equals U^p.
    static FunctionSpace enriched(std::shared_ptr<const Mesh> mesh, int p, int k) {
        return FunctionSpace(std::move(mesh), SpaceKind::enriched, p, k);
    }

    SpaceKind kind() const { return kind_; }
    const Mesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }

    int lagrange_degree() const { return p_; }
    int bubble_degree() const { return k_; }
    /// Highest polynomial degree present on a cell.
    int max_degree() const { return std::max(p_, has_bubbles() ? k_ : 0); }
    bool has_bubbles() const { return bubbles_.has_value(); }

    int dim() const { return dim_; }
    /// Size of the leading continuous block (0 for a pure bubble space).
    int lagrange_dim() const { return lagrange_dim_; }
    int local_dim() const { return local_dim_; }
    int local_lagrange_dim() const { return lagrange_ ? lagrange_->count() : 0; }

    std::span<const int> cell_dofs(int c) const {
        return {cell_dofs_.data() + static_cast<std::size_t>(c) * local_dim_, static_cast<std::size_t>(local_dim_)};
    }

    /// Local basis values at a reference point: Lagrange functions first, then bubbles.
    void local_values(const Point& r, std::span<double> out) const {
        int off = 0;
        if (lagrange_) {
            lagrange_->evaluate(r, out.subspan(0, lagrange_->count()));
            off = lagrange_->count();
        }
        if (bubbles_) bubbles_->evaluate(r, out.subspan(off, bubbles_->count()));
    }

    /// Local reference gradients, same ordering as local_values.
    void local_gradients(const Point& r, std::span<Point> out) const {
        int off = 0;
        if (lagrange_) {
            lagrange_->gradient(r, out.subspan(0, lagrange_->count()));
            off = lagrange_->count();
        }
        if (bubbles_) bubbles_->gradient(r, out.subspan(off, bubbles_->count()));
    }

    /// Physical gradients on cell c.
    void physical_gradients(int c, const Point& r, std::span<Point> out) const {
        local_gradients(r, out);
        const AffineMap m = mesh_->map(c);
        for (auto& g : out) g = m.push_gradient(g);
    }

    const ReferenceBasis* lagrange_basis() const { return lagrange_ ? &*lagrange_ : nullptr; }
    const ReferenceBasis* bubble_basis() const { return bubbles_ ? &*bubbles_ : nullptr; }

    bool same_mesh(const FunctionSpace& other) const { return mesh_ == other.mesh_; }

private:
    FunctionSpace(std::shared_ptr<const Mesh> mesh, SpaceKind kind, int p, int k)
        : mesh_(std::move(mesh)), kind_(kind), p_(p), k_(k) {
        if (!mesh_) throw std::invalid_argument("FunctionSpace: null mesh");
        if (kind != SpaceKind::bubble) {
            if (p < 1 || p > 3) throw std::invalid_argument("FunctionSpace: Lagrange degree must be in [1, 3]");
            lagrange_ = ReferenceBasis::lagrange(p);
        }
        if (kind == SpaceKind::bubble || (kind == SpaceKind::enriched && k > p)) {
            if (k < 3 || k > 6)
                throw std::invalid_argument("FunctionSpace: unsupported bubble degree " + std::to_string(k) +
                                            " (need 3 <= k <= 6, or k <= p for no enrichment)");
            bubbles_ = ReferenceBasis::bubble(k, kind == SpaceKind::enriched && p == 3);
        }
        number();
    }

    void number() {
        const Mesh& m = *mesh_;
        const int nl = local_lagrange_dim();
        const int nb = bubbles_ ? bubbles_->count() : 0;
        local_dim_ = nl + nb;
        cell_dofs_.assign(static_cast<std::size_t>(m.num_cells()) * local_dim_, -1);
        lagrange_dim_ = 0;
        if (lagrange_) {
            const int per_edge = p_ - 1;
            const int per_cell = p_ == 3 ? 1 : 0;
            const int edge_base = m.num_vertices();
            const int cell_base = edge_base + per_edge * m.num_edges();
            lagrange_dim_ = cell_base + per_cell * m.num_cells();
            for (int c = 0; c < m.num_cells(); ++c) {
                int* dofs = cell_dofs_.data() + static_cast<std::size_t>(c) * local_dim_;
                for (int i = 0; i < 3; ++i) dofs[i] = m.cells()[c][i];
                for (int e = 0; e < 3; ++e) {
                    const int ge = m.cell_edges()[c][e];
                    // Local edge nodes run from vertex (e+1)%3 to (e+2)%3; global ones from the lower vertex id.
                    const bool aligned = m.cells()[c][(e + 1) % 3] < m.cells()[c][(e + 2) % 3];
                    for (int s = 0; s < per_edge; ++s) {
                        const int gs = aligned ? s : per_edge - 1 - s;
                        dofs[3 + e * per_edge + s] = edge_base + ge * per_edge + gs;
                    }
                }
                if (per_cell) dofs[3 + 3 * per_edge] = cell_base + c;
            }
        }
        for (int c = 0; c < m.num_cells(); ++c)
            for (int j = 0; j < nb; ++j)
                cell_dofs_[static_cast<std::size_t>(c) * local_dim_ + nl + j] = lagrange_dim_ + c * nb + j;
        dim_ = lagrange_dim_ + nb * m.num_cells();
    }

    std::shared_ptr<const Mesh> mesh_;
    SpaceKind kind_;
    int p_ = 0;
    int k_ = 0;
    std::optional<ReferenceBasis> lagrange_;
    std::optional<ReferenceBasis> bubbles_;
    int dim_ = 0;
    int lagrange_dim_ = 0;
    int local_dim_ = 0;
    std::vector<int> cell_dofs_;
};

/// Coefficient vector on a space.
struct DiscreteFunction {
    std::shared_ptr<const FunctionSpace> space;
    Eigen::VectorXd coefficients;

    DiscreteFunction(std::shared_ptr<const FunctionSpace> s, Eigen::VectorXd c)
        : space(std::move(s)), coefficients(std::move(c)) {
        if (!space || coefficients.size() != space->dim())
            throw std::invalid_argument("DiscreteFunction: coefficient length does not match space dimension");
    }
    explicit DiscreteFunction(std::shared_ptr<const FunctionSpace> s)
        : DiscreteFunction(s, Eigen::VectorXd::Zero(s ? s->dim() : 0)) {}
};

/// Value of sum_i c_i phi_i restricted to cell c at reference point r.
inline double evaluate_on_cell(const FunctionSpace& V, const Eigen::VectorXd& coeffs, int c, const Point& r) {
    std::vector<double> phi(V.local_dim());
    V.local_values(r, phi);
    double v = 0.0;
    const auto dofs = V.cell_dofs(c);
    for (int i = 0; i < V.local_dim(); ++i) v += coeffs[dofs[i]] * phi[i];
    return v;
}

inline Point evaluate_gradient_on_cell(const FunctionSpace& V, const Eigen::VectorXd& coeffs, int c, const Point& r) {
    std::vector<Point> g(V.local_dim());
    V.physical_gradients(c, r, g);
    Point v{};
    const auto dofs = V.cell_dofs(c);
    for (int i = 0; i < V.local_dim(); ++i) v += coeffs[dofs[i]] * g[i];
    return v;
}

inline double evaluate(const DiscreteFunction& f, const Point& x) {
    const Mesh& m = f.space->mesh();
    const int c = m.locate(x);
    if (c < 0) throw std::out_of_range("evaluate: point outside the mesh");
    return evaluate_on_cell(*f.space, f.coefficients, c, m.map(c).inverse(x));
}

inline Point evaluate_gradient(const DiscreteFunction& f, const Point& x) {
    const Mesh& m = f.space->mesh();
    const int c = m.locate(x);
    if (c < 0) throw std::out_of_range("evaluate_gradient: point outside the mesh");
    return evaluate_gradient_on_cell(*f.space, f.coefficients, c, m.map(c).inverse(x));
}

/// Embeds trial coefficients into the enriched space (bubble part zero).
inline Eigen::VectorXd inject_trial(const FunctionSpace& trial, const FunctionSpace& enriched,
                                    const Eigen::VectorXd& coeffs) {
    if (trial.kind() != SpaceKind::lagrange || enriched.kind() != SpaceKind::enriched || !trial.same_mesh(enriched) ||
        trial.lagrange_degree() != enriched.lagrange_degree())
        throw std::invalid_argument("inject_trial: target is not the enrichment of the source space");
    if (coeffs.size() != trial.dim()) throw std::invalid_argument("inject_trial: coefficient length mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(enriched.dim());
    out.head(trial.dim()) = coeffs;
    return out;
}

/// Lagrange nodal interpolant of a function.
template <class F>
Eigen::VectorXd interpolate(const FunctionSpace& V, F&& u) {
    if (!V.lagrange_basis()) throw std::invalid_argument("interpolate: space has no nodal basis");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(V.dim());
    const auto& nodes = V.lagrange_basis()->nodes();
    for (int c = 0; c < V.mesh().num_cells(); ++c) {
        const AffineMap m = V.mesh().map(c);
        const auto dofs = V.cell_dofs(c);
        for (std::size_t i = 0; i < nodes.size(); ++i) out[dofs[i]] = u(m(nodes[i]));
    }
    return out;
}

}  // namespace asfem

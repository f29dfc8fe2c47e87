#pragma once

// Conforming triangle meshes with facet data and newest-vertex bisection.

#include "asfem/geometry.hpp"
#include "asfem/refquad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace asfem {

using Cell = std::array<int, 3>;

struct Edge {
    std::array<int, 2> vertices;          // sorted ascending
    std::array<int, 2> cells{-1, -1};     // cells[1] == -1 on the boundary
    std::array<int, 2> local{-1, -1};     // local edge index within each cell
};

/// Interior facet; `normal` is the outward normal of the plus cell.
struct InteriorFacet {
    int edge;
    int plus;
    int minus;
    int plus_local;  // local edge index within the plus cell
    Point normal;
    double length;
};

struct BoundaryFacet {
    int edge;
    int cell;
    int local;
    Point normal;  // outward
    double length;
};

class Mesh {
public:
    Mesh() = default;

    /// Cells must be counterclockwise. `refinement_edge[c]` is the local edge
    /// (opposite vertex) bisected first; `parent[c]` the cell of the previous
    /// mesh this one descends from (defaults to the identity).
    Mesh(std::vector<Point> vertices, std::vector<Cell> cells, std::vector<int> refinement_edge,
         std::vector<int> parent = {})
        : vertices_(std::move(vertices)),
          cells_(std::move(cells)),
          refinement_edge_(std::move(refinement_edge)),
          parent_(std::move(parent)) {
        if (refinement_edge_.size() != cells_.size())
            throw std::invalid_argument("Mesh: refinement_edge size mismatch");
        if (parent_.empty()) {
            parent_.resize(cells_.size());
            for (std::size_t c = 0; c < cells_.size(); ++c) parent_[c] = static_cast<int>(c);
        }
        build();
    }

    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_cells() const { return static_cast<int>(cells_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::array<int, 3>>& cell_edges() const { return cell_edges_; }
    const std::vector<InteriorFacet>& interior_facets() const { return interior_; }
    const std::vector<BoundaryFacet>& boundary_facets() const { return boundary_; }
    const std::vector<int>& refinement_edge() const { return refinement_edge_; }
    const std::vector<int>& parent() const { return parent_; }
    const std::vector<double>& cell_diameters() const { return diameters_; }

    Point vertex(int c, int i) const { return vertices_[cells_[c][i]]; }
    AffineMap map(int c) const { return {vertex(c, 0), vertex(c, 1), vertex(c, 2)}; }
    double area(int c) const { return 0.5 * cross(vertex(c, 1) - vertex(c, 0), vertex(c, 2) - vertex(c, 0)); }
    Point barycenter(int c) const { return (1.0 / 3.0) * (vertex(c, 0) + vertex(c, 1) + vertex(c, 2)); }
    double max_diameter() const { return diameters_.empty() ? 0.0 : *std::max_element(diameters_.begin(), diameters_.end()); }

    /// Endpoints of local edge `e` of cell `c`, in counterclockwise order.
    std::pair<Point, Point> edge_points(int c, int e) const {
        return {vertex(c, (e + 1) % 3), vertex(c, (e + 2) % 3)};
    }

    std::pair<Point, Point> facet_points(const InteriorFacet& f) const { return edge_points(f.plus, f.plus_local); }

    /// Index of a cell whose closure contains `x`, or -1.
    int locate(const Point& x, double tol = 1e-12) const {
        for (int c = 0; c < num_cells(); ++c) {
            const Point r = map(c).inverse(x);
            if (r.x >= -tol && r.y >= -tol && r.x + r.y <= 1.0 + tol) return c;
        }
        return -1;
    }

    double min_angle() const {
        double best = std::numbers::pi;
        for (int c = 0; c < num_cells(); ++c)
            for (int i = 0; i < 3; ++i) {
                const Point a = vertex(c, i), b = vertex(c, (i + 1) % 3), d = vertex(c, (i + 2) % 3);
                const Point u = b - a, v = d - a;
                best = std::min(best, std::atan2(std::abs(cross(u, v)), dot(u, v)));
            }
        return best;
    }

private:
    void build() {
        std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> incidence;
        for (int c = 0; c < num_cells(); ++c) {
            if (area(c) <= 0.0)
                throw std::invalid_argument("Mesh: cell " + std::to_string(c) + " has non-positive signed area");
            for (int e = 0; e < 3; ++e) {
                int a = cells_[c][(e + 1) % 3], b = cells_[c][(e + 2) % 3];
                if (a > b) std::swap(a, b);
                incidence[{a, b}].push_back({c, e});
            }
        }
        cell_edges_.assign(cells_.size(), {-1, -1, -1});
        edges_.clear();
        edges_.reserve(incidence.size());
        for (const auto& [key, users] : incidence) {
            if (users.size() > 2)
                throw std::invalid_argument("Mesh: edge (" + std::to_string(key.first) + "," +
                                            std::to_string(key.second) + ") shared by more than two cells");
            Edge edge{{key.first, key.second}};
            for (std::size_t i = 0; i < users.size(); ++i) {
                edge.cells[i] = users[i].first;
                edge.local[i] = users[i].second;
                cell_edges_[users[i].first][users[i].second] = static_cast<int>(edges_.size());
            }
            edges_.push_back(edge);
        }

        interior_.clear();
        boundary_.clear();
        for (int ei = 0; ei < num_edges(); ++ei) {
            const Edge& edge = edges_[ei];
            const int slot = (edge.cells[1] >= 0 && edge.cells[1] < edge.cells[0]) ? 1 : 0;
            const int c = edge.cells[slot], le = edge.local[slot];
            const auto [p, q] = edge_points(c, le);
            const double len = distance(p, q);
            const Point n{(q.y - p.y) / len, -(q.x - p.x) / len};
            if (edge.cells[1] < 0)
                boundary_.push_back({ei, c, le, n, len});
            else
                interior_.push_back({ei, c, edge.cells[1 - slot], le, n, len});
        }

        diameters_.resize(cells_.size());
        for (int c = 0; c < num_cells(); ++c) {
            double h = 0.0;
            for (int e = 0; e < 3; ++e) {
                const auto [p, q] = edge_points(c, e);
                h = std::max(h, distance(p, q));
            }
            diameters_[c] = h;
        }
    }

    std::vector<Point> vertices_;
    std::vector<Cell> cells_;
    std::vector<int> refinement_edge_;
    std::vector<int> parent_;
    std::vector<Edge> edges_;
    std::vector<std::array<int, 3>> cell_edges_;
    std::vector<InteriorFacet> interior_;
    std::vector<BoundaryFacet> boundary_;
    std::vector<double> diameters_;
};

/// Longest edge of each cell; ties go to the edge whose opposite vertex has the lowest index.
inline std::vector<int> longest_edge_marking(const std::vector<Point>& vertices, const std::vector<Cell>& cells) {
    std::vector<int> ref(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        int best = -1;
        double best_len = -1.0;
        for (int e = 0; e < 3; ++e) {
            const double len = distance(vertices[cells[c][(e + 1) % 3]], vertices[cells[c][(e + 2) % 3]]);
            const bool longer = len > best_len * (1.0 + 1e-12);
            const bool tie = !longer && len >= best_len * (1.0 - 1e-12);
            if (longer || (tie && cells[c][e] < cells[c][best])) {
                best = e;
                best_len = std::max(len, best_len);
            }
        }
        ref[c] = best;
    }
    return ref;
}

enum class DiagonalPattern {
    alternating,  // checkerboard of (x0,y0)-(x1,y1) and (x1,y0)-(x0,y1) diagonals
    parallel      // every rectangle split along (x0,y0)-(x1,y1)
};

/// Tensor grid with each rectangle split into two triangles. Rectangle (i,j) with
/// i+j even always uses the (x0,y0)-(x1,y1) diagonal.
inline Mesh structured_mesh(std::span<const double> xs, std::span<const double> ys,
                            DiagonalPattern pattern = DiagonalPattern::alternating) {
    auto check = [](std::span<const double> g, const char* name) {
        if (g.size() < 2) throw std::invalid_argument(std::string("structured_mesh: need at least two ") + name + " grid lines");
        for (std::size_t i = 1; i < g.size(); ++i)
            if (!(g[i] > g[i - 1]))
                throw std::invalid_argument(std::string("structured_mesh: ") + name + " grid lines not strictly increasing");
    };
    check(xs, "x");
    check(ys, "y");
    const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
    std::vector<Point> vertices;
    vertices.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) vertices.push_back({xs[i], ys[j]});
    auto id = [nx](int i, int j) { return j * nx + i; };
    std::vector<Cell> cells;
    for (int j = 0; j + 1 < ny; ++j)
        for (int i = 0; i + 1 < nx; ++i) {
            if (pattern == DiagonalPattern::parallel || (i + j) % 2 == 0) {
                cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            } else {
                cells.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
                cells.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }
    auto ref = longest_edge_marking(vertices, cells);
    return Mesh(std::move(vertices), std::move(cells), std::move(ref));
}

inline std::vector<double> uniform_grid_lines(int n, double a = 0.0, double b = 1.0) {
    if (n < 1) throw std::invalid_argument("uniform_grid_lines: n must be >= 1");
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = a + (b - a) * i / n;
    return g;
}

/// Unit square with n x n rectangles.
inline Mesh unit_square_mesh(int n, DiagonalPattern pattern = DiagonalPattern::alternating) {
    const auto g = uniform_grid_lines(n);
    return structured_mesh(g, g, pattern);
}

enum class BoundaryKind { inflow, outflow, characteristic };

using AdvectionField = std::function<Point(const Point&)>;

/// Labels every boundary facet by the sign of b.n at Gauss points.
inline std::vector<BoundaryKind> classify_boundary(const Mesh& mesh, const AdvectionField& b, double tol = 1e-12) {
    const QuadratureRule rule = edge_rule(5);
    std::vector<BoundaryKind> kinds;
    kinds.reserve(mesh.boundary_facets().size());
    for (const auto& f : mesh.boundary_facets()) {
        const auto [p, q] = mesh.edge_points(f.cell, f.local);
        bool all_in = true, all_out = true;
        for (const auto& t : rule.points) {
            const double bn = dot(b(p + t.x * (q - p)), f.normal);
            all_in = all_in && bn < -tol;
            all_out = all_out && bn > tol;
        }
        kinds.push_back(all_in ? BoundaryKind::inflow : all_out ? BoundaryKind::outflow : BoundaryKind::characteristic);
    }
    return kinds;
}

/// Newest-vertex bisection of the marked cells plus the closure needed for conformity.
///
/// A bisected cell (a, b, c) with refinement edge bc and midpoint m yields the
/// children (m, a, b) and (m, c, a), whose refinement edges lie opposite m.
/// The returned mesh's parent() maps each cell to its source cell in `mesh`.
inline Mesh refine(const Mesh& mesh, std::span<const int> marked) {
    const int ne = mesh.num_edges();
    std::vector<char> split(ne, 0);
    std::vector<int> stack;
    auto mark_edge = [&](int e) {
        if (!split[e]) {
            split[e] = 1;
            stack.push_back(e);
        }
    };
    for (int c : marked) {
        if (c < 0 || c >= mesh.num_cells()) throw std::out_of_range("refine: marked cell index out of range");
        mark_edge(mesh.cell_edges()[c][mesh.refinement_edge()[c]]);
    }
    // Closure: any cell with a split edge must also split its refinement edge.
    while (!stack.empty()) {
        const int e = stack.back();
        stack.pop_back();
        for (int c : mesh.edges()[e].cells)
            if (c >= 0) mark_edge(mesh.cell_edges()[c][mesh.refinement_edge()[c]]);
    }

    std::vector<Point> vertices = mesh.vertices();
    std::vector<int> midpoint(ne, -1);
    auto midpoint_of = [&](int e) {
        if (midpoint[e] < 0) {
            const auto& v = mesh.edges()[e].vertices;
            midpoint[e] = static_cast<int>(vertices.size());
            vertices.push_back(0.5 * (mesh.vertices()[v[0]] + mesh.vertices()[v[1]]));
        }
        return midpoint[e];
    };

    std::vector<Cell> cells;
    std::vector<int> ref, parent;
    cells.reserve(mesh.num_cells() + 2 * std::count(split.begin(), split.end(), 1));
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const int r = mesh.refinement_edge()[c];
        const auto& ce = mesh.cell_edges()[c];
        if (!split[ce[r]]) {
            cells.push_back(mesh.cells()[c]);
            ref.push_back(r);
            parent.push_back(c);
            continue;
        }
        const int a = mesh.cells()[c][r], b = mesh.cells()[c][(r + 1) % 3], d = mesh.cells()[c][(r + 2) % 3];
        const int m = midpoint_of(ce[r]);
        // Old edges a-b and d-a become the children's refinement edges.
        const int edge_ab = ce[(r + 2) % 3], edge_da = ce[(r + 1) % 3];
        auto emit = [&](int apex, int p, int q, int old_edge) {
            if (split[old_edge]) {
                const int m2 = midpoint_of(old_edge);
                cells.push_back({m2, apex, p});
                cells.push_back({m2, q, apex});
                ref.insert(ref.end(), {0, 0});
                parent.insert(parent.end(), {c, c});
            } else {
                cells.push_back({apex, p, q});
                ref.push_back(0);
                parent.push_back(c);
            }
        };
        emit(m, a, b, edge_ab);
        emit(m, d, a, edge_da);
    }
    return Mesh(std::move(vertices), std::move(cells), std::move(ref), std::move(parent));
}

inline Mesh refine(const Mesh& mesh, std::initializer_list<int> marked) {
    return refine(mesh, std::span<const int>(marked.begin(), marked.size()));
}

/// Bisects every cell once (each cell bisected through its refinement edge).
inline Mesh refine_all(const Mesh& mesh) {
    std::vector<int> all(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) all[c] = c;
    return refine(mesh, all);
}

}  // namespace asfem

#pragma once

// VTK legacy output, plain-text mesh fixtures and Matrix Market export.

#include "asfem/forms.hpp"
#include "asfem/mesh.hpp"
#include "asfem/spaces.hpp"

#include <unsupported/Eigen/SparseExtra>

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace asfem {

struct NamedField {
    std::string name;
    std::vector<double> values;
};

/// Legacy ASCII UNSTRUCTURED_GRID with triangle cells (VTK type 5).
inline void write_vtk(std::ostream& os, const Mesh& mesh, const std::vector<NamedField>& cell_fields = {},
                      const std::vector<NamedField>& point_fields = {}, const std::string& title = "asfem mesh") {
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << std::setprecision(17);
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& v : mesh.vertices()) os << v.x << ' ' << v.y << " 0\n";
    os << "CELLS " << mesh.num_cells() << ' ' << 4 * mesh.num_cells() << '\n';
    for (const auto& c : mesh.cells()) os << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    os << "CELL_TYPES " << mesh.num_cells() << '\n';
    for (int c = 0; c < mesh.num_cells(); ++c) os << "5\n";

    auto block = [&os](const NamedField& f, std::size_t expected, const char* where) {
        if (f.values.size() != expected)
            throw std::invalid_argument("write_vtk: " + std::string(where) + " field '" + f.name + "' has wrong length");
        os << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : f.values) os << v << '\n';
    };
    if (!cell_fields.empty()) {
        os << "CELL_DATA " << mesh.num_cells() << '\n';
        for (const auto& f : cell_fields) block(f, mesh.num_cells(), "cell");
    }
    if (!point_fields.empty()) {
        os << "POINT_DATA " << mesh.num_vertices() << '\n';
        for (const auto& f : point_fields) block(f, mesh.num_vertices(), "point");
    }
}

inline void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<NamedField>& cell_fields = {},
                      const std::vector<NamedField>& point_fields = {}) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_vtk(os, mesh, cell_fields, point_fields);
}

/// Vertex values of a discrete function (its trial part, bubbles vanish there).
inline NamedField vertex_samples(const std::string& name, const FunctionSpace& V, const Eigen::VectorXd& coeffs) {
    const Mesh& mesh = V.mesh();
    NamedField f{name, std::vector<double>(mesh.num_vertices(), 0.0)};
    // Lagrange DoFs 0..nv-1 are the vertex values
    for (int v = 0; v < mesh.num_vertices(); ++v) f.values[v] = coeffs[v];
    return f;
}

/// Plain-text dump: vertex count, coordinates, cell count, vertex triples with refinement edge.
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
    os << std::setprecision(17);
    os << "vertices " << mesh.num_vertices() << '\n';
    for (const auto& v : mesh.vertices()) os << v.x << ' ' << v.y << '\n';
    os << "cells " << mesh.num_cells() << '\n';
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto& t = mesh.cells()[c];
        os << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << mesh.refinement_edge()[c] << '\n';
    }
}

inline Mesh read_mesh(std::istream& is) {
    std::string tag;
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "vertices") throw std::runtime_error("read_mesh: expected 'vertices <n>'");
    std::vector<Point> vertices(n);
    for (auto& v : vertices)
        if (!(is >> v.x >> v.y)) throw std::runtime_error("read_mesh: truncated vertex list");
    if (!(is >> tag >> n) || tag != "cells") throw std::runtime_error("read_mesh: expected 'cells <n>'");
    std::vector<Cell> cells(n);
    std::vector<int> ref(n);
    for (std::size_t c = 0; c < n; ++c)
        if (!(is >> cells[c][0] >> cells[c][1] >> cells[c][2] >> ref[c])) throw std::runtime_error("read_mesh: truncated cell list");
    return Mesh(std::move(vertices), std::move(cells), std::move(ref));
}

inline void write_mesh(const std::string& path, const Mesh& mesh) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_mesh(os, mesh);
}

inline Mesh read_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_mesh(is);
}

inline void write_matrix_market(const std::string& path, const SparseMatrix& A) {
    if (!Eigen::saveMarket(A, path)) throw std::runtime_error("cannot write " + path);
}

inline void write_matrix_market(const std::string& path, const Eigen::VectorXd& v) {
    if (!Eigen::saveMarketVector(v, path)) throw std::runtime_error("cannot write " + path);
}

}  // namespace asfem

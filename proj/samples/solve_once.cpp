// One residual-minimization solve on a fixed mesh, then the error and the local indicators.
//   c++ -std=c++20 -O2 -I include $(pkg-config --cflags eigen3) samples/solve_once.cpp -o solve_once

#include "asfem/asfem.hpp"

#include <algorithm>
#include <iostream>

int main() {
    using namespace asfem;
    const Benchmark bm = experiment1(0.05, 16);
    AdaptConfig cfg;
    const ProblemData data = configured_data(bm, cfg);

    auto mesh = std::make_shared<const Mesh>(bm.initial_mesh);
    const FunctionSpace U = FunctionSpace::lagrange(mesh, cfg.p);
    const FunctionSpace V = FunctionSpace::enriched(mesh, cfg.p, cfg.k);
    const SparseMatrix G = assemble_gram(V, data);
    const SparseMatrix B = assemble_b(V, V, data).leftCols(U.dim());
    const SaddleSolution sol = solve_saddle(G, B, assemble_rhs(V, data));

    const NormReport err = error_norms(U, sol.u, data, bm.exact);
    const Indicators ind = energy_indicators(V, sol.epsilon, data);
    const auto worst = std::max_element(ind.eta.begin(), ind.eta.end()) - ind.eta.begin();
    std::cout << "trial dofs " << U.dim() << ", test dofs " << V.dim() << "\n"
              << "L2 error " << err.l2 << ", triple-norm error " << err.triple << "\n"
              << "estimate " << ind.total() << ", largest indicator on cell " << worst << " at "
              << mesh->barycenter(static_cast<int>(worst)).x << ", " << mesh->barycenter(static_cast<int>(worst)).y << "\n"
              << "marked for theta = 0.5: " << dorfler_mark(ind, 0.5).size() << " of " << mesh->num_cells() << " cells\n";
}

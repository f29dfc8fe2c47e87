#pragma once

// Command-line surface: run configuration, option parsing and the `run` driver.

#include "asfem/adapt.hpp"
#include "asfem/bench.hpp"
#include "asfem/io.hpp"
#include "asfem/report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace asfem {

enum ExitCode { exit_ok = 0, exit_config_error = 1, exit_solver_error = 2 };

struct RunConfig {
    std::string benchmark = "exp1";
    std::string mode = "energy";
    int p = 1;
    std::optional<int> k;          // p + 2 when unset
    double alpha = 3.5;
    std::optional<double> theta;   // 0.5 energy, 0.2 goa when unset
    double sigma_fallback = 1.0;
    long max_dofs = 30000;
    int max_iters = 100;
    double delta = 0.01;
    std::optional<int> initial_cells;  // benchmark default when unset
    std::string output = "asfem_out";
    bool vtk = false;
    bool matrices = false;
    int quadrature = -1;
    int window = 5;
    long saturation_cap = 20000;

    int effective_k() const { return k.value_or(p + 2); }
    double effective_theta() const { return theta.value_or(mode == "goa" ? 0.2 : 0.5); }

    AdaptConfig adapt_config() const {
        AdaptConfig c;
        c.mode = parse_mode(mode);
        c.p = p;
        c.k = effective_k();
        c.alpha = alpha;
        c.theta = effective_theta();
        c.sigma_fallback = sigma_fallback;
        c.max_dofs = max_dofs;
        c.max_iterations = max_iters;
        c.saturation_cap = saturation_cap;
        c.quadrature_degree = quadrature;
        return c;
    }

    Benchmark make_benchmark() const {
        if (benchmark == "exp1") return initial_cells ? experiment1(delta, *initial_cells) : experiment1(delta);
        if (benchmark == "exp2") return initial_cells ? experiment2(*initial_cells) : experiment2();
        throw std::invalid_argument("unknown benchmark '" + benchmark + "'");
    }

    void validate() const {
        make_benchmark();
        asfem::validate(adapt_config());
        if (window < 2) throw std::invalid_argument("window must be >= 2");
        if (quadrature > max_quadrature_degree) throw std::invalid_argument("quadrature degree exceeds 20");
    }

    bool operator==(const RunConfig&) const = default;
};

/// Registers the options of `run` on `app`; a TOML/INI file given by --config
/// supplies values that explicit flags override.
inline void add_run_options(CLI::App& app, RunConfig& cfg) {
    app.set_config("--config", "", "TOML or INI file with option values (flags take precedence)");
    app.add_option("--benchmark", cfg.benchmark, "exp1 or exp2")->check(CLI::IsMember(benchmark_names()));
    app.add_option("--mode", cfg.mode, "energy, goa or uniform")->check(CLI::IsMember({"energy", "goa", "uniform"}));
    app.add_option("--p", cfg.p, "trial polynomial degree (1..3)");
    app.add_option("--k", cfg.k, "bubble degree of the test space (default p+2; k <= p gives plain CIP)");
    app.add_option("--alpha", cfg.alpha, "CIP exponent");
    app.add_option("--theta", cfg.theta, "Dorfler fraction (default 0.5 energy, 0.2 goa)");
    app.add_option("--sigma0", cfg.sigma_fallback, "Gram L2 weight used when the reaction floor is zero");
    app.add_option("--max-dofs", cfg.max_dofs, "stop before exceeding this many trial+test DoFs");
    app.add_option("--max-iters", cfg.max_iters, "maximum number of refinements");
    app.add_option("--delta", cfg.delta, "layer width of exp1");
    app.add_option("--initial-cells", cfg.initial_cells, "cells per side of the initial mesh");
    app.add_option("--output", cfg.output, "output directory");
    app.add_flag("--vtk", cfg.vtk, "write a VTK file per iteration");
    app.add_flag("--matrices", cfg.matrices, "write G, B and l in Matrix Market format per iteration");
    app.add_option("--quadrature", cfg.quadrature, "volume quadrature degree for error norms");
    app.add_option("--window", cfg.window, "rows used by the summary slope fits");
    app.add_option("--saturation-cap", cfg.saturation_cap, "largest test space for the saturation solve");
}

/// Parses a config file (plus optional extra flags) into a RunConfig.
inline RunConfig parse_run_config(const std::vector<std::string>& args) {
    CLI::App app{"asfem run"};
    RunConfig cfg;
    add_run_options(app, cfg);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    return cfg;
}

/// Serialized form of the options that were set, readable by --config.
inline std::string config_to_string(const std::vector<std::string>& args) {
    CLI::App app{"asfem run"};
    RunConfig cfg;
    add_run_options(app, cfg);
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    return app.config_to_str(false, false);
}

struct RunSummary {
    std::vector<std::pair<std::string, double>> slopes;  // column -> slope vs dofs_total
};

inline RunSummary summarize(const std::vector<AdaptRecord>& records, int window) {
    std::ostringstream csv;
    write_csv(csv, records);
    std::istringstream in(csv.str());
    const Table t = read_csv(in);
    RunSummary s;
    for (const char* col : {"est_energy", "err_L2_rel", "err_triple", "err_qoi_rel"}) {
        try {
            s.slopes.emplace_back(col, slope(t, "dofs_total", col, window));
        } catch (const std::invalid_argument&) {
            // column unavailable (NaN) or too few rows
        }
    }
    return s;
}

inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    Benchmark bm;
    AdaptConfig acfg;
    try {
        cfg.validate();
        bm = cfg.make_benchmark();
        acfg = cfg.adapt_config();
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config_error;
    }
    namespace fs = std::filesystem;
    try {
        fs::create_directories(cfg.output);
    } catch (const fs::filesystem_error& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config_error;
    }

    const ProblemData data = configured_data(bm, acfg);
    auto observer = [&](const IterationState& s) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "iter_%03d", s.iter);
        const fs::path base = fs::path(cfg.output) / tag;
        if (cfg.vtk) {
            std::vector<double> marked(s.mesh->num_cells(), 0.0);
            for (int c : s.marked) marked[c] = 1.0;
            write_vtk(base.string() + ".vtk", *s.mesh, {{"indicator", s.indicators.eta}, {"marked", marked}},
                      {vertex_samples("u_h", s.trial, s.primal.u), vertex_samples("eps_h", s.test, s.primal.epsilon)});
        }
        if (cfg.matrices) {
            write_matrix_market(base.string() + "_G.mtx", assemble_gram(s.test, data));
            write_matrix_market(base.string() + "_B.mtx", assemble_b(s.trial, s.test, data));
            write_matrix_market(base.string() + "_l.mtx", Eigen::VectorXd(assemble_rhs(s.test, data)));
        }
    };

    AdaptResult result;
    try {
        result = run_adaptive(bm, acfg, observer);
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << '\n';
        return exit_solver_error;
    } catch (const std::invalid_argument& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config_error;
    }

    const fs::path csv = fs::path(cfg.output) / "records.csv";
    write_csv(csv.string(), result.records);
    write_mesh((fs::path(cfg.output) / "final_mesh.txt").string(), *result.final_mesh);

    std::ostringstream summary;
    const AdaptRecord& last = result.records.back();
    summary << "benchmark " << cfg.benchmark << ", mode " << cfg.mode << ", p=" << acfg.p << ", k=" << acfg.k
            << ", theta=" << acfg.theta << "\n";
    summary << "iterations " << result.records.size() << ", final dofs_total " << last.dofs_total << ", cells "
            << last.cells << "\n";
    for (const auto& [col, s] : summarize(result.records, cfg.window).slopes)
        summary << "slope " << col << " vs dofs_total (last " << cfg.window << "): " << s << "\n";
    std::ofstream(fs::path(cfg.output) / "summary.txt") << summary.str();
    out << summary.str() << "records written to " << csv.string() << "\n";
    return exit_ok;
}

}  // namespace asfem

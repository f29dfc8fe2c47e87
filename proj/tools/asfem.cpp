// asfem command-line driver: `run` an adaptive experiment or fit a `slope` from a CSV.

#include "asfem/cli.hpp"

#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Adaptive stabilized finite elements by residual minimization"};
    app.require_subcommand(1);

    asfem::RunConfig cfg;
    CLI::App* run = app.add_subcommand("run", "run an adaptive (or uniform) refinement study");
    asfem::add_run_options(*run, cfg);

    std::string csv, xcol = "dofs_total", ycol = "err_L2_rel";
    int window = 5;
    CLI::App* slope = app.add_subcommand("slope", "least-squares log-log slope over the last rows of a CSV");
    slope->add_option("csv", csv, "records file")->required()->check(CLI::ExistingFile);
    slope->add_option("--x", xcol, "abscissa column");
    slope->add_option("--y", ycol, "ordinate column");
    slope->add_option("--window", window, "number of trailing rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? asfem::exit_ok : asfem::exit_config_error;
    }

    if (*run) {
        // CLI11 reads config files only on the root app, so `run` is parsed again on its own
        if (!run->get_config_ptr()->empty()) {
            try {
                cfg = asfem::parse_run_config(std::vector<std::string>(argv + 2, argv + argc));
            } catch (const CLI::Error& e) {
                std::cerr << "configuration error: " << e.what() << "\n";
                return asfem::exit_config_error;
            }
        }
        return asfem::run(cfg);
    }
    try {
        std::cout << std::setprecision(15) << asfem::slope(csv, xcol, ycol, window) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "slope: " << e.what() << "\n";
        return asfem::exit_config_error;
    }
    return asfem::exit_ok;
}

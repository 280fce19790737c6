#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "driftmc/experiments.hpp"
#include "driftmc/quadrature.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Drift-correction Monte Carlo pricer"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    std::size_t bench = 0;
    std::size_t quad = 0;
    double riemann = 0.0;
    bool greeks = false;
    bool reproducible = false;
    auto* run = app.add_subcommand("run", "Run an experiment suite and write a CSV report");
    run->add_option("--config", config, "Suite file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output CSV")->required();
    auto* seed_opt = run->add_option("--seed", seed, "Base seed (row i uses seed + i)");
    auto* paths_opt = run->add_option("--paths", paths, "Method paths per experiment")->check(CLI::Range(2ul, 1ul << 40));
    auto* bench_opt = run->add_option("--benchmark-paths", bench, "Crude MC benchmark paths")->check(CLI::Range(2ul, 1ul << 40));
    auto* quad_opt = run->add_option("--quad", quad, "Gauss-Legendre nodes per segment")->check(CLI::PositiveNumber);
    auto* riemann_opt = run->add_option("--riemann", riemann, "Left Riemann sum with this step")->check(CLI::PositiveNumber);
    quad_opt->excludes(riemann_opt);
    run->add_flag("--greeks", greeks, "Also estimate deltas");
    run->add_flag("--reproducible", reproducible, "Write runtime_ms as 0 so reruns are byte-identical");

    std::size_t nodes = 24;
    auto* quad_cmd = app.add_subcommand("quad", "Print a Gauss-Legendre rule on (0,1)");
    quad_cmd->add_option("--nodes", nodes, "Node count")->required()->check(CLI::PositiveNumber);

    auto* selftest = app.add_subcommand("selftest", "Run invariant checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto suite = driftmc::load_suite(config);
            driftmc::SuiteOverrides o;
            if (*seed_opt) o.seed = seed;
            if (*paths_opt) o.paths = paths;
            if (*bench_opt) o.benchmark_paths = bench;
            if (*quad_opt) o.quad_nodes = quad;
            if (*riemann_opt) o.riemann_dt = riemann;
            o.greeks = greeks;
            driftmc::apply_overrides(suite, o);
            std::ofstream csv(out);
            if (!csv) {
                std::cerr << "error: cannot write " << out << '\n';
                return 1;
            }
            const auto summary = driftmc::run_suite(suite, csv, reproducible, &std::cout);
            return summary.passed == summary.rows && summary.delta_passed == summary.delta_rows ? 0 : 3;
        }
        if (*quad_cmd) {
            const auto rule = driftmc::gauss_legendre(nodes);
            std::printf("k,abscissa,weight\n");
            for (std::size_t k = 0; k < rule.size(); ++k) {
                std::printf("%zu,%.17g,%.17g\n", k + 1, rule.abscissas[k], rule.weights[k]);
            }
            return 0;
        }
        if (*selftest) return driftmc::run_selftest(std::cout) ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

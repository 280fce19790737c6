#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "driftmc/analytic_pricers.hpp"
#include "driftmc/greeks.hpp"
#include "driftmc/payoffs.hpp"
#include "driftmc/sde_models.hpp"

namespace driftmc {

struct ExperimentConfig {
    std::string name;
    ModelSpec model;
    PayoffSpec payoff;
    int simplified_exponent = 1;       // 1: Black-Scholes, 0: Bachelier
    std::vector<double> sigma_tilde;   // empty: match the diffusion at inception
    std::size_t n_paths = 5000;
    std::size_t n_benchmark = 200000;
    double dt = 1.0 / 512.0;
    std::size_t quad_nodes = 24;
    std::optional<double> riemann_dt;  // set: integrate by left Riemann sum instead
    std::uint64_t seed = 1;
    bool greeks = false;
    double delta_bump = 0.01;

    /// Throws std::invalid_argument naming the experiment.
    void validate() const;
};

/// sigma~ per asset: the configured values, else the simulated diffusion at
/// t = 0 in forward coordinates (relative for Black-Scholes, absolute for
/// Bachelier).
SimplifiedModel simplified_model(const ExperimentConfig& cfg);

/// Seed of the benchmark run, independent of the method seed.
std::uint64_t benchmark_seed(std::uint64_t seed);

/// (a - b) / sqrt(se_a^2 + se_b^2). Equal estimates give 0; throws
/// std::domain_error when both errors vanish and the estimates differ.
double compute_z_score(double a, double se_a, double b, double se_b);

struct DeltaReport {
    double crude = 0.0;
    double crude_se = 0.0;  // at the method's path count
    double method = 0.0;
    double method_se = 0.0;
    double z_score = 0.0;
    double variance_ratio = 0.0;
    bool approximate = false;
};

struct EstimatorReport {
    std::string name;
    std::string dynamics;
    std::string payoff;
    std::string simplified;
    std::string method;
    double maturity = 0.0;
    double strike = 0.0;
    double psi0 = 0.0;
    double benchmark_estimate = 0.0;
    double benchmark_stderr = 0.0;  // at n_benchmark
    double crude_stderr = 0.0;      // at n_paths, from the benchmark sample deviation
    double estimate = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
    double variance_ratio = 0.0;    // inf when the method error is 0
    std::optional<DeltaReport> delta;
    double runtime_ms = 0.0;
    std::uint64_t seed = 0;
};

EstimatorReport run_experiment(const ExperimentConfig& cfg);

/// Command-line overrides applied to every experiment of a suite.
struct SuiteOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::size_t> benchmark_paths;
    std::optional<std::size_t> quad_nodes;
    std::optional<double> riemann_dt;
    bool greeks = false;
};

/// Parses an INI suite: optional [defaults] section, then one section per
/// experiment. Row i without an explicit seed gets defaults.seed + i.
/// Errors carry the file line (syntax) or section and key (values).
std::vector<ExperimentConfig> parse_suite(std::istream& in, const std::string& source = "<input>");
std::vector<ExperimentConfig> load_suite(const std::string& path);
void apply_overrides(std::vector<ExperimentConfig>& suite, const SuiteOverrides& overrides);

/// CSV schema, fixed column order.
std::string csv_header();
/// Floats with 17 significant digits; with `reproducible` the runtime is written as 0.
std::string csv_row(const EstimatorReport& r, bool reproducible);

struct SuiteSummary {
    std::size_t rows = 0;
    std::size_t passed = 0;
    std::size_t delta_rows = 0;
    std::size_t delta_passed = 0;
};

/// Runs every experiment in order, writing the header and one row per
/// experiment to `csv`. A row passes when |z| < 4 (and |delta z| < 4).
/// Progress lines go to `log` if given.
SuiteSummary run_suite(const std::vector<ExperimentConfig>& suite, std::ostream& csv,
                       bool reproducible, std::ostream* log);

/// Fast invariant checks; prints one line per check, returns true if all pass.
bool run_selftest(std::ostream& out);

}  // namespace driftmc

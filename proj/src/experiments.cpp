#include "driftmc/experiments.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "driftmc/correction_engine.hpp"
#include "driftmc/parallel.hpp"
#include "driftmc/rng.hpp"

namespace driftmc {

void ExperimentConfig::validate() const {
    auto fail = [&](const std::string& m) { throw std::invalid_argument("experiment " + name + ": " + m); };
    if (n_paths < 2) fail("paths must be at least 2");
    if (n_benchmark < 2) fail("benchmark_paths must be at least 2");
    if (!(dt > 0.0)) fail("dt must be positive");
    if (quad_nodes == 0) fail("quad must be at least 1");
    if (riemann_dt && !(*riemann_dt > 0.0)) fail("riemann dt must be positive");
    if (simplified_exponent != 0 && simplified_exponent != 1) fail("simplified must be bs or bachelier");
    if (name.find_first_of(",\"\n") != std::string::npos) fail("name may not contain commas, quotes or newlines");
    try {
        model.validate();
        payoff.validate(model.dimension(), model.x0.empty() ? 0.0 : model.x0[0]);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (std::abs(payoff.spot_carry - model.carry_rate()) > 0.0) fail("payoff spot carry must equal the model rate");
    if (!sigma_tilde.empty() && sigma_tilde.size() != model.dimension()) fail("sigma_tilde needs one entry per asset");
    const bool bs = simplified_exponent == 1;
    switch (payoff.kind) {
        case PayoffKind::Vanilla: break;
        case PayoffKind::Barrier:
        case PayoffKind::Rainbow:
            if (!bs) fail(to_string(payoff.kind) + " requires the Black-Scholes simplified model");
            break;
        case PayoffKind::Asian:
        case PayoffKind::Basket:
            if (bs) fail(to_string(payoff.kind) + " requires the Bachelier simplified model");
            break;
    }
}

SimplifiedModel simplified_model(const ExperimentConfig& cfg) {
    const ModelSpec& m = cfg.model;
    std::vector<double> sigma = cfg.sigma_tilde;
    if (sigma.empty()) {
        const std::vector<double> f0 = m.initial_forward(cfg.payoff.maturity);
        for (std::size_t i = 0; i < m.dimension(); ++i) {
            const double s0 = m.local_diffusion(i, f0[i], m.initial_vol(i));
            sigma.push_back(cfg.simplified_exponent == 1 ? s0 / f0[i] : s0);
        }
    }
    return SimplifiedModel::create(cfg.simplified_exponent, std::move(sigma), m.correlation());
}

std::uint64_t benchmark_seed(std::uint64_t seed) { return seed + 0x9E3779B97F4A7C15ULL; }

double compute_z_score(double a, double se_a, double b, double se_b) {
    const double pooled = std::sqrt(se_a * se_a + se_b * se_b);
    if (a == b) return 0.0;
    if (pooled == 0.0) throw std::domain_error("compute_z_score: estimates differ but both errors are zero");
    return (a - b) / pooled;
}

namespace {

std::vector<double> crude_payoffs(const PathSource& paths, const PayoffSpec& spec) {
    std::vector<double> z(paths.n_paths());
    parallel_for(z.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) z[n] = payoff(spec, paths, n);
    });
    return z;
}

}  // namespace

EstimatorReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const PayoffSpec& spec = cfg.payoff;
    const double horizon = spec.maturity;

    const QuadratureRule rule = gauss_legendre(cfg.quad_nodes);
    const double grid_dt = cfg.riemann_dt ? std::min(cfg.dt, *cfg.riemann_dt) : cfg.dt;
    const TimeGrid grid = build_grid(horizon, grid_dt, &rule, spec.fixing_dates);
    const SimplifiedModel sm = simplified_model(cfg);
    const auto psi = make_psi(spec, sm, grid.mean_step());
    const IntegrationMethod method = cfg.riemann_dt ? IntegrationMethod::riemann(*cfg.riemann_dt)
                                                    : IntegrationMethod::legendre(cfg.quad_nodes);

    EstimatorReport r;
    r.name = cfg.name;
    r.dynamics = to_string(cfg.model.kind);
    r.payoff = to_string(spec.kind);
    r.simplified = cfg.simplified_exponent == 1 ? "Black-Scholes" : "Bachelier";
    r.method = method.label();
    r.maturity = horizon;
    r.strike = spec.strike;
    r.seed = cfg.seed;

    const PathSimulator paths(cfg.model, grid, cfg.n_paths, cfg.seed);
    const CorrectionSample sample = integrate_correction(paths, spec, *psi, method);
    const std::vector<double> f0 = cfg.model.initial_forward(horizon);
    r.psi0 = initial_psi(*psi, spec, f0);
    const PriceEstimate est = estimate_price(r.psi0, sample);
    r.estimate = est.estimate;
    r.std_error = est.std_error;

    const PathSimulator bench(cfg.model, grid, cfg.n_benchmark, benchmark_seed(cfg.seed));
    const MeanStd crude = mean_std(crude_payoffs(bench, spec));
    r.benchmark_estimate = crude.mean;
    r.benchmark_stderr = crude.sd / std::sqrt(static_cast<double>(cfg.n_benchmark));
    r.crude_stderr = crude.sd / std::sqrt(static_cast<double>(cfg.n_paths));
    r.z_score = compute_z_score(r.estimate, r.std_error, r.benchmark_estimate, r.benchmark_stderr);
    r.variance_ratio = r.std_error > 0.0 ? std::pow(r.crude_stderr / r.std_error, 2)
                                         : std::numeric_limits<double>::infinity();

    const bool greeks_supported = spec.kind != PayoffKind::Barrier && cfg.model.kind != Dynamics::Abm;
    if (cfg.greeks && greeks_supported) {
        const std::size_t asset = highest_vol_asset(cfg.model);
        const GreekReport dc = drift_correction_greeks(cfg.model, paths, spec, *psi, method, asset, false);
        const GreekReport bump = bump_revalue_greeks(cfg.model, grid, spec, cfg.n_benchmark,
                                                     benchmark_seed(cfg.seed), cfg.delta_bump, asset, false);
        DeltaReport d;
        d.method = dc.delta;
        d.method_se = dc.stderr_delta;
        d.crude = bump.delta;
        d.crude_se = bump.stderr_delta * std::sqrt(static_cast<double>(cfg.n_benchmark) /
                                                   static_cast<double>(cfg.n_paths));
        d.z_score = compute_z_score(d.method, d.method_se, d.crude, bump.stderr_delta);
        d.variance_ratio = d.method_se > 0.0 ? std::pow(d.crude_se / d.method_se, 2)
                                             : std::numeric_limits<double>::infinity();
        d.approximate = dc.approximate;
        r.delta = d;
    }
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// ---- suite parsing -------------------------------------------------------

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

class Section {
public:
    Section(std::string source, std::string name, const pt::ptree* row, const pt::ptree* defaults)
        : source_(std::move(source)), name_(std::move(name)), row_(row), defaults_(defaults) {}

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw std::invalid_argument(source_ + ": [" + name_ + "] " + key + ": " + msg);
    }

    std::optional<std::string> raw(const std::string& key) const {
        if (row_) {
            if (auto v = row_->get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
        }
        if (defaults_) {
            if (auto v = defaults_->get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
        }
        return std::nullopt;
    }

    bool has_own(const std::string& key) const {
        return row_ && row_->get_optional<std::string>(pt::ptree::path_type(key, '\0')).has_value();
    }

    std::string text(const std::string& key) const {
        auto v = raw(key);
        if (!v || v->empty()) fail(key, "missing");
        return *v;
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
        auto v = raw(key);
        if (!v) {
            if (fallback) return *fallback;
            fail(key, "missing");
        }
        return parse_number(key, *v);
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        auto v = raw(key);
        if (!v) return fallback;
        const double x = parse_number(key, *v);
        if (x < 0 || x != std::floor(x) || x > 1e15) fail(key, "expected a nonnegative integer, got '" + *v + "'");
        return static_cast<std::size_t>(x);
    }

    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        auto v = raw(key);
        if (!v) return out;
        std::istringstream in(*v);
        std::string item;
        while (std::getline(in, item, ',')) out.push_back(parse_number(key, trim(item)));
        return out;
    }

    bool flag(const std::string& key, bool fallback) const {
        auto v = raw(key);
        if (!v) return fallback;
        const std::string s = lower(*v);
        if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
        if (s == "false" || s == "no" || s == "0" || s == "off") return false;
        fail(key, "expected a boolean, got '" + *v + "'");
    }

    void check_keys(const std::vector<std::string>& allowed) const {
        for (const pt::ptree* t : {row_, defaults_}) {
            if (!t) continue;
            for (const auto& [key, child] : *t) {
                if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) fail(key, "unknown key");
            }
        }
    }

private:
    // Decimal or a/b fraction.
    double parse_number(const std::string& key, const std::string& s) const {
        auto one = [&](const std::string& part) {
            std::size_t used = 0;
            double x = 0.0;
            try {
                x = std::stod(part, &used);
            } catch (const std::exception&) {
                fail(key, "expected a number, got '" + s + "'");
            }
            if (trim(part.substr(used)).size() != 0 || !std::isfinite(x)) fail(key, "expected a number, got '" + s + "'");
            return x;
        };
        const auto slash = s.find('/');
        if (slash == std::string::npos) return one(trim(s));
        const double den = one(trim(s.substr(slash + 1)));
        if (den == 0.0) fail(key, "division by zero in '" + s + "'");
        return one(trim(s.substr(0, slash))) / den;
    }

    std::string source_;
    std::string name_;
    const pt::ptree* row_;
    const pt::ptree* defaults_;
};

const std::vector<std::string> kKeys = {
    "dynamics", "payoff", "simplified", "maturity", "strike", "barrier", "fixings", "weights",
    "x0", "r", "kappa", "theta", "vol_of_vol", "rho", "v0", "alpha", "beta", "sigma",
    "asset_corr", "sigma_tilde", "paths", "benchmark_paths", "dt", "quad", "riemann", "seed",
    "greeks", "delta_bump"};

std::vector<double> broadcast(std::vector<double> v, std::size_t d) {
    if (v.size() == 1 && d > 1) v.assign(d, v[0]);
    return v;
}

ExperimentConfig parse_experiment(const Section& s, const std::string& name, std::uint64_t default_seed) {
    s.check_keys(kKeys);
    ExperimentConfig cfg;
    cfg.name = name;

    const std::string dyn = lower(s.text("dynamics"));
    std::vector<double> x0 = s.list("x0");
    std::vector<double> v0 = s.list("v0");
    std::vector<double> sigma = s.list("sigma");
    std::size_t d = std::max({x0.size(), v0.size(), sigma.size(), std::size_t{1}});
    if (x0.empty()) s.fail("x0", "missing");
    ModelSpec& m = cfg.model;
    m.x0 = broadcast(x0, d);
    if (dyn == "heston") {
        m.kind = Dynamics::Heston;
        HestonParams h;
        h.v0 = broadcast(v0, d);
        h.kappa = s.number("kappa");
        h.theta = broadcast(s.list("theta"), d);
        h.gamma = s.number("vol_of_vol");
        h.rho_sv = s.number("rho", 0.0);
        h.r = s.number("r", 0.0);
        m.heston = h;
    } else if (dyn == "sabr") {
        m.kind = Dynamics::Sabr;
        SabrParams p;
        p.v0 = broadcast(v0, d);
        p.alpha = s.number("alpha");
        p.beta = s.number("beta");
        p.rho_sv = s.number("rho", 0.0);
        m.sabr = p;
    } else if (dyn == "gbm" || dyn == "abm") {
        m.kind = dyn == "gbm" ? Dynamics::Gbm : Dynamics::Abm;
        m.sigma = broadcast(sigma, d);
    } else {
        s.fail("dynamics", "expected heston, sabr, gbm or abm, got '" + dyn + "'");
    }
    if (m.kind != Dynamics::Heston && s.raw("r") && s.number("r") != 0.0) {
        s.fail("r", "a nonzero rate is only supported for heston");
    }
    if (auto rho = s.raw("asset_corr")) {
        const double c = s.number("asset_corr");
        const auto n = static_cast<Eigen::Index>(d);
        m.asset_corr = Eigen::MatrixXd::Constant(n, n, c);
        m.asset_corr.diagonal().setOnes();
    }

    PayoffSpec& p = cfg.payoff;
    const std::string kind = lower(s.text("payoff"));
    if (kind == "vanilla") p.kind = PayoffKind::Vanilla;
    else if (kind == "barrier") p.kind = PayoffKind::Barrier;
    else if (kind == "asian") p.kind = PayoffKind::Asian;
    else if (kind == "basket") p.kind = PayoffKind::Basket;
    else if (kind == "rainbow") p.kind = PayoffKind::Rainbow;
    else s.fail("payoff", "expected vanilla, barrier, asian, basket or rainbow, got '" + kind + "'");
    p.maturity = s.number("maturity");
    p.strike = s.number("strike");
    p.spot_carry = m.carry_rate();
    if (p.kind == PayoffKind::Barrier) p.barrier = s.number("barrier");
    if (p.kind == PayoffKind::Asian) {
        const auto f = s.raw("fixings");
        p.fixing_dates = (!f || lower(*f) == "quarterly") ? quarterly_fixings(p.maturity) : s.list("fixings");
    }
    if (p.kind == PayoffKind::Basket) {
        p.weights = s.list("weights");
        if (p.weights.empty()) p.weights.assign(d, 1.0 / static_cast<double>(d));
    }

    const std::string simplified = lower(s.text("simplified"));
    if (simplified == "bs" || simplified == "black-scholes") cfg.simplified_exponent = 1;
    else if (simplified == "bachelier") cfg.simplified_exponent = 0;
    else s.fail("simplified", "expected bs or bachelier, got '" + simplified + "'");
    cfg.sigma_tilde = broadcast(s.list("sigma_tilde"), d);

    cfg.n_paths = s.count("paths", cfg.n_paths);
    cfg.n_benchmark = s.count("benchmark_paths", cfg.n_benchmark);
    cfg.dt = s.number("dt", cfg.dt);
    cfg.quad_nodes = s.count("quad", cfg.quad_nodes);
    if (s.raw("riemann")) cfg.riemann_dt = s.number("riemann");
    cfg.seed = s.has_own("seed") ? s.count("seed", 0) : default_seed;
    cfg.greeks = s.flag("greeks", false);
    cfg.delta_bump = s.number("delta_bump", cfg.delta_bump);
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        s.fail("(section)", e.what());
    }
    return cfg;
}

}  // namespace

std::vector<ExperimentConfig> parse_suite(std::istream& in, const std::string& source) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        std::ostringstream msg;
        msg << source << ":" << e.line() << ": " << e.message();
        throw std::invalid_argument(msg.str());
    }
    const pt::ptree* defaults = nullptr;
    for (const auto& [key, child] : tree) {
        if (child.empty()) {
            throw std::invalid_argument(source + ": key '" + key + "' outside of any section");
        }
        if (key == "defaults") defaults = &child;
    }
    std::uint64_t base_seed = 1;
    if (defaults) {
        const Section d(source, "defaults", nullptr, defaults);
        d.check_keys(kKeys);
        base_seed = d.count("seed", 1);
    }
    std::vector<ExperimentConfig> suite;
    for (const auto& [key, child] : tree) {
        if (key == "defaults") continue;
        const Section s(source, key, &child, defaults);
        suite.push_back(parse_experiment(s, key, base_seed + suite.size()));
    }
    return suite;
}

std::vector<ExperimentConfig> load_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open suite file " + path);
    return parse_suite(in, path);
}

void apply_overrides(std::vector<ExperimentConfig>& suite, const SuiteOverrides& o) {
    for (std::size_t i = 0; i < suite.size(); ++i) {
        ExperimentConfig& c = suite[i];
        if (o.seed) c.seed = *o.seed + i;
        if (o.paths) c.n_paths = *o.paths;
        if (o.benchmark_paths) c.n_benchmark = *o.benchmark_paths;
        if (o.quad_nodes) {
            c.quad_nodes = *o.quad_nodes;
            c.riemann_dt.reset();
        }
        if (o.riemann_dt) c.riemann_dt = *o.riemann_dt;
        if (o.greeks) c.greeks = true;
    }
}

// ---- CSV -----------------------------------------------------------------

namespace {

std::string fmt(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::string csv_header() {
    return "dynamics,payoff,simplified,maturity,strike,crude_estimate,crude_se,method_estimate,"
           "method_se,z_score,variance_ratio,crude_delta,crude_delta_se,method_delta,method_delta_se,"
           "delta_z_score,delta_variance_ratio,runtime_ms,seed,method,name,benchmark_se,psi0";
}

std::string csv_row(const EstimatorReport& r, bool reproducible) {
    std::ostringstream o;
    o << r.dynamics << ',' << r.payoff << ',' << r.simplified << ',' << fmt(r.maturity) << ','
      << fmt(r.strike) << ',' << fmt(r.benchmark_estimate) << ',' << fmt(r.crude_stderr) << ','
      << fmt(r.estimate) << ',' << fmt(r.std_error) << ',' << fmt(r.z_score) << ','
      << fmt(r.variance_ratio) << ',';
    if (r.delta) {
        const DeltaReport& d = *r.delta;
        o << fmt(d.crude) << ',' << fmt(d.crude_se) << ',' << fmt(d.method) << ',' << fmt(d.method_se)
          << ',' << fmt(d.z_score) << ',' << fmt(d.variance_ratio) << ',';
    } else {
        o << ",,,,,,";
    }
    o << fmt(reproducible ? 0.0 : r.runtime_ms) << ',' << r.seed << ',' << r.method << ',' << r.name
      << ',' << fmt(r.benchmark_stderr) << ',' << fmt(r.psi0);
    return o.str();
}

SuiteSummary run_suite(const std::vector<ExperimentConfig>& suite, std::ostream& csv,
                       bool reproducible, std::ostream* log) {
    SuiteSummary summary;
    csv << csv_header() << '\n';
    csv.flush();
    for (std::size_t i = 0; i < suite.size(); ++i) {
        const ExperimentConfig& cfg = suite[i];
        EstimatorReport r;
        try {
            r = run_experiment(cfg);
        } catch (const std::exception& e) {
            throw std::runtime_error("experiment " + cfg.name + ": " + e.what());
        }
        csv << csv_row(r, reproducible) << '\n';
        csv.flush();
        ++summary.rows;
        const bool ok = std::abs(r.z_score) < 4.0;
        summary.passed += ok ? 1 : 0;
        bool delta_ok = true;
        if (r.delta) {
            ++summary.delta_rows;
            delta_ok = std::abs(r.delta->z_score) < 4.0;
            summary.delta_passed += delta_ok ? 1 : 0;
        }
        if (log) {
            char line[400];
            std::snprintf(line, sizeof line,
                          "[%zu/%zu] %-28s crude %.4f (%.4f)  method %.4f (%.4f)  z %+.2f  vr %.1f  %s\n",
                          i + 1, suite.size(), cfg.name.c_str(), r.benchmark_estimate, r.crude_stderr,
                          r.estimate, r.std_error, r.z_score, r.variance_ratio, ok && delta_ok ? "pass" : "FAIL");
            *log << line;
            if (r.delta) {
                std::snprintf(line, sizeof line,
                              "        delta crude %.4f (%.4f)  method %.4f (%.4f)  z %+.2f  vr %.1f\n",
                              r.delta->crude, r.delta->crude_se, r.delta->method, r.delta->method_se,
                              r.delta->z_score, r.delta->variance_ratio);
                *log << line;
            }
            log->flush();
        }
    }
    if (log) {
        *log << "summary: " << summary.passed << "/" << summary.rows << " value rows and "
             << summary.delta_passed << "/" << summary.delta_rows << " delta rows within |z| < 4\n";
    }
    return summary;
}

// ---- selftest -------------------------------------------------------------

bool run_selftest(std::ostream& out) {
    bool all = true;
    auto check = [&](const std::string& name, bool ok, const std::string& detail = {}) {
        out << (ok ? "PASS " : "FAIL ") << name << (detail.empty() ? "" : "  (" + detail + ")") << '\n';
        all = all && ok;
    };
    auto guarded = [&](const std::string& name, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            check(name, false, e.what());
        }
    };

    guarded("philox known answer", [&] {
        const auto r = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
        check("philox known answer", r == Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    });

    guarded("gauss-legendre exactness", [&] {
        const QuadratureRule q = gauss_legendre(2);
        double s = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * std::pow(q.abscissas[k], 3);
        check("gauss-legendre exactness", std::abs(s - 0.25) < 1e-15);
    });

    guarded("black call", [&] {
        const double v = bs_call(100.0, 100.0, 0.2, 1.0).value;
        check("black call", std::abs(v - 7.965567455405804) < 1e-10, fmt(v));
    });

    guarded("exact cancellation", [&] {
        ModelSpec m;
        m.kind = Dynamics::Gbm;
        m.x0 = {100.0, 90.0};
        m.sigma = {0.2, 0.3};
        m.asset_corr = Eigen::MatrixXd::Identity(2, 2);
        m.asset_corr(0, 1) = m.asset_corr(1, 0) = 0.4;
        PayoffSpec p;
        p.kind = PayoffKind::Rainbow;
        p.strike = 100.0;
        p.maturity = 1.0;
        const QuadratureRule rule = gauss_legendre(8);
        const TimeGrid grid = build_grid(1.0, 0.05, &rule, {});
        const auto psi = make_psi(p, SimplifiedModel::create(1, {0.2, 0.3}, m.correlation()), grid.mean_step());
        const PathSimulator paths(m, grid, 64, 7);
        const CorrectionSample s = integrate_correction(paths, p, *psi, IntegrationMethod::legendre(8));
        const bool zero = std::all_of(s.J.begin(), s.J.end(), [](double j) { return j == 0.0; });
        check("exact cancellation", zero);
    });

    guarded("directional laplacian", [&] {
        Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 0.4);
        c.diagonal().setOnes();
        const SimplifiedModel sm = SimplifiedModel::create(1, {0.2, 0.25, 0.3}, c);
        PayoffSpec p;
        p.kind = PayoffKind::Rainbow;
        p.strike = 100.0;
        p.maturity = 1.0;
        const auto psi = make_psi(p, sm, 0.01);
        const std::vector<double> x{95.0, 102.0, 99.0};
        const std::vector<double> scale{19.0, 25.5, 29.7};
        const double fast = directional_laplacian(*psi, 0.3, x, {}, scale, sm.factor);
        // Dense Hessian by central differences.
        Eigen::Matrix3d h;
        const double e = 0.1;
        auto f = [&](int i, double di, int j, double dj) {
            std::vector<double> y = x;
            y[static_cast<std::size_t>(i)] += di;
            y[static_cast<std::size_t>(j)] += dj;
            return psi->value(0.3, y, {});
        };
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                h(i, j) = (f(i, e, j, e) - f(i, e, j, -e) - f(i, -e, j, e) + f(i, -e, j, -e)) / (4 * e * e);
            }
        }
        const Eigen::Matrix3d a = Eigen::Vector3d(scale[0], scale[1], scale[2]).asDiagonal() * sm.factor.loadings;
        const double dense = (a.transpose() * h * a).trace();
        check("directional laplacian", std::abs(fast - dense) < 1e-4 * std::abs(dense),
              fmt(fast) + " vs " + fmt(dense));
    });

    guarded("asian fixing continuity", [&] {
        const std::vector<double> times{0.25, 0.5, 0.75, 1.0};
        const std::vector<double> c{1.0, 1.0, 1.0, 1.0};
        const double before = bachelier_asian_psi(0.5, 101.0, 197.0, std::span(times).subspan(1),
                                                  std::span(c).subspan(1), 4, 100.0, 10.0);
        const double after = bachelier_asian_psi(0.5, 101.0, 298.0, std::span(times).subspan(2),
                                                 std::span(c).subspan(2), 4, 100.0, 10.0);
        check("asian fixing continuity", std::abs(before - after) < 1e-10);
    });
    return all;
}

}  // namespace driftmc

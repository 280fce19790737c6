#include "driftmc/greeks.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "driftmc/parallel.hpp"

namespace driftmc {

std::string to_string(GreekMethod m) {
    return m == GreekMethod::DriftCorrection ? "drift_correction" : "bump_revalue";
}

std::size_t highest_vol_asset(const ModelSpec& model) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < model.dimension(); ++i) {
        if (model.initial_vol(i) > model.initial_vol(best)) best = i;
    }
    return best;
}

bool require_multiplicative(const ModelSpec& model, const PayoffSpec& payoff) {
    if (payoff.kind == PayoffKind::Barrier) {
        throw std::invalid_argument(
            "greeks: barrier deltas are not supported (knock-out indicator is not differentiable pathwise)");
    }
    switch (model.kind) {
        case Dynamics::Heston:
        case Dynamics::Gbm:
            return false;
        case Dynamics::Sabr:
            return model.sabr->beta != 1.0;
        case Dynamics::Abm:
            break;
    }
    throw std::invalid_argument(
        "greeks: " + to_string(model.kind) +
        " paths are not proportional to X_0, so dX_t/dX_0 = X_t/X_0 does not hold");
}

GreekReport drift_correction_greeks(const ModelSpec& model, const PathSource& paths,
                                    const PayoffSpec& payoff, const PsiFunction& psi,
                                    const IntegrationMethod& method, std::size_t asset,
                                    bool gamma) {
    GreekReport report;
    report.method = GreekMethod::DriftCorrection;
    report.asset = asset;
    report.approximate = require_multiplicative(model, payoff);
    if (report.approximate) report.note = "SABR beta < 1: dX_t/dX_0 approximated by X_t/X_0";
    const std::size_t d = paths.dimension();
    if (asset >= d) throw std::invalid_argument("greeks: asset index out of range");
    if (gamma && d != 1) throw std::invalid_argument("greeks: gamma is single-asset only");

    const TimeGrid& grid = paths.grid();
    const NodePlan plan = plan_nodes(method, grid, payoff);
    std::vector<int> node_of(grid.size(), -1);
    std::vector<double> weight_at(grid.size(), 0.0);
    for (std::size_t p = 0; p < plan.index.size(); ++p) {
        node_of[plan.index[p]] = static_cast<int>(p);
        weight_at[plan.index[p]] += plan.weight[p];
    }

    const std::vector<double> f0 = model.initial_forward(grid.horizon());
    // Derivatives are taken with respect to the spot X_0; scaling the path by
    // lambda moves X_0 by lambda X_0.
    const double x0 = model.x0[asset];
    const double to_spot = f0[asset] / x0;
    const PathObservables obs0 = initial_observables(payoff, f0);
    const double h1 = 1e-4;
    const double h2 = 1e-3;

    const std::size_t n_paths = paths.n_paths();
    std::vector<double> d1(n_paths, 0.0);
    std::vector<double> d2(n_paths, 0.0);
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        std::vector<double> x(d);
        std::vector<double> sig(d);
        for (std::size_t n = begin; n < end; ++n) {
            PathObservables obs;
            double acc1 = 0.0;
            double acc2 = 0.0;
            paths.visit(n, [&](std::size_t j, const StateView& s) {
                const double t = grid.times[j];
                if (payoff.path_dependent()) {
                    obs = update_observables(payoff, obs, t, s.asset[0] * payoff.spot_factor(t));
                }
                if (node_of[j] < 0) return;
                auto scaled_xi = [&](double lambda) {
                    std::copy(s.asset.begin(), s.asset.end(), x.begin());
                    std::copy(s.diffusion.begin(), s.diffusion.end(), sig.begin());
                    x[asset] *= lambda;
                    sig[asset] = model.local_diffusion(asset, x[asset], s.vol[asset]);
                    PathObservables o = obs;
                    if (asset == 0) {
                        o.partial_sum *= lambda;
                        o.running_min *= lambda;
                    }
                    return xi(psi, t, x, sig, o);
                };
                try {
                    const double w = weight_at[j];
                    acc1 += w * (scaled_xi(1.0 + h1) - scaled_xi(1.0 - h1)) / (2.0 * h1);
                    if (gamma) {
                        acc2 += w * (scaled_xi(1.0 + h2) - 2.0 * scaled_xi(1.0) + scaled_xi(1.0 - h2)) /
                                (h2 * h2);
                    }
                } catch (const std::exception& e) {
                    std::ostringstream msg;
                    msg.precision(17);
                    msg << "greeks: xi evaluation failed on path " << n << " at t=" << t << ": " << e.what();
                    throw std::runtime_error(msg.str());
                }
            });
            d1[n] = acc1 / x0;
            d2[n] = acc2 / (x0 * x0);
        }
    });

    if (n_paths < 2) throw std::invalid_argument("greeks: need at least two paths");
    const double root_n = std::sqrt(static_cast<double>(n_paths));
    const MeanStd m1 = mean_std(d1);
    report.delta = to_spot * psi.delta(0.0, f0, obs0, asset) + m1.mean;
    report.stderr_delta = m1.sd / root_n;
    if (gamma) {
        const MeanStd m2 = mean_std(d2);
        report.gamma = to_spot * to_spot * psi.gamma(0.0, f0, obs0, asset) + m2.mean;
        report.stderr_gamma = m2.sd / root_n;
    }
    return report;
}

GreekReport bump_revalue_greeks(const ModelSpec& model, const TimeGrid& grid,
                                const PayoffSpec& payoff, std::size_t n_paths, std::uint64_t seed,
                                double bump, std::size_t asset, bool gamma) {
    if (!(bump > 0.0)) throw std::invalid_argument("bump_revalue: bump must be positive");
    if (asset >= model.dimension()) throw std::invalid_argument("bump_revalue: asset index out of range");
    if (n_paths < 2) throw std::invalid_argument("bump_revalue: need at least two paths");

    ModelSpec up = model;
    ModelSpec down = model;
    up.x0[asset] *= 1.0 + bump;
    down.x0[asset] *= 1.0 - bump;
    const PathSimulator sim_up(up, grid, n_paths, seed);
    const PathSimulator sim_down(down, grid, n_paths, seed);
    const PathSimulator sim_mid(model, grid, n_paths, seed);
    const double h = bump * model.x0[asset];

    std::vector<double> d1(n_paths);
    std::vector<double> d2(gamma ? n_paths : 0);
    parallel_for(n_paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
            const double zu = driftmc::payoff(payoff, sim_up, n);
            const double zd = driftmc::payoff(payoff, sim_down, n);
            d1[n] = (zu - zd) / (2.0 * h);
            if (gamma) d2[n] = (zu - 2.0 * driftmc::payoff(payoff, sim_mid, n) + zd) / (h * h);
        }
    });

    GreekReport report;
    report.method = GreekMethod::BumpRevalue;
    report.asset = asset;
    const double root_n = std::sqrt(static_cast<double>(n_paths));
    const MeanStd m1 = mean_std(d1);
    report.delta = m1.mean;
    report.stderr_delta = m1.sd / root_n;
    if (gamma) {
        const MeanStd m2 = mean_std(d2);
        report.gamma = m2.mean;
        report.stderr_gamma = m2.sd / root_n;
    }
    return report;
}

}  // namespace driftmc

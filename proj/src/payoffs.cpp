#include "driftmc/payoffs.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace driftmc {

std::string to_string(PayoffKind k) {
    switch (k) {
        case PayoffKind::Vanilla: return "Vanilla";
        case PayoffKind::Barrier: return "Barrier";
        case PayoffKind::Asian: return "Asian";
        case PayoffKind::Basket: return "Basket";
        case PayoffKind::Rainbow: return "Rainbow";
    }
    return "unknown";
}

std::vector<double> quarterly_fixings(double maturity) {
    std::vector<double> dates;
    const auto count = static_cast<std::size_t>(std::llround(4.0 * maturity));
    for (std::size_t k = 1; k <= count; ++k) dates.push_back(static_cast<double>(k) / 4.0);
    return dates;
}

std::vector<double> PayoffSpec::segment_boundaries() const {
    std::vector<double> b{0.0};
    if (kind == PayoffKind::Asian) {
        for (double f : fixing_dates) {
            if (f > 1e-12 && f < maturity - 1e-12) b.push_back(f);
        }
    }
    b.push_back(maturity);
    return b;
}

void PayoffSpec::validate(std::size_t dimension, double spot0) const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("PayoffSpec: " + m); };
    if (!(strike > 0.0)) fail("strike must be positive");
    if (!(maturity > 0.0)) fail("maturity must be positive");
    switch (kind) {
        case PayoffKind::Vanilla:
        case PayoffKind::Barrier:
        case PayoffKind::Asian:
            if (dimension != 1) fail(to_string(kind) + " payoff is single-asset");
            break;
        case PayoffKind::Basket:
        case PayoffKind::Rainbow:
            break;
    }
    if (kind == PayoffKind::Barrier) {
        if (!(barrier > 0.0)) fail("barrier must be positive");
        if (!(barrier < spot0)) fail("down barrier must lie below spot");
    }
    if (kind == PayoffKind::Asian) {
        if (fixing_dates.empty()) fail("Asian payoff needs fixing dates");
        if (!std::is_sorted(fixing_dates.begin(), fixing_dates.end())) fail("fixing dates unsorted");
        if (fixing_dates.front() <= 0.0 || fixing_dates.back() > maturity + 1e-12) {
            fail("fixing dates must lie in (0, T]");
        }
    }
    if (kind == PayoffKind::Basket) {
        if (weights.size() != dimension) fail("basket weights must have one entry per asset");
        double sum = 0.0;
        for (double w : weights) sum += w;
        if (std::abs(sum - 1.0) > 1e-12) fail("basket weights must sum to 1");
    }
}

PathObservables update_observables(const PayoffSpec& spec, PathObservables obs, double t,
                                   double spot) {
    obs.running_min = std::min(obs.running_min, spot);
    if (spec.kind == PayoffKind::Barrier && spot <= spec.barrier) obs.knocked_out = true;
    if (obs.fixings_observed < spec.fixing_dates.size() &&
        std::abs(spec.fixing_dates[obs.fixings_observed] - t) <= 1e-12) {
        obs.partial_sum += spot;
        ++obs.fixings_observed;
    }
    return obs;
}

double terminal_payoff(const PayoffSpec& spec, const PathObservables& obs,
                       std::span<const double> terminal) {
    switch (spec.kind) {
        case PayoffKind::Vanilla:
            return std::max(0.0, terminal[0] - spec.strike);
        case PayoffKind::Barrier:
            return obs.running_min > spec.barrier ? std::max(0.0, terminal[0] - spec.strike) : 0.0;
        case PayoffKind::Asian: {
            const double avg = obs.partial_sum / static_cast<double>(spec.fixing_dates.size());
            return std::max(0.0, avg - spec.strike);
        }
        case PayoffKind::Basket: {
            double level = 0.0;
            for (std::size_t i = 0; i < terminal.size(); ++i) level += spec.weights[i] * terminal[i];
            return std::max(0.0, level - spec.strike);
        }
        case PayoffKind::Rainbow: {
            const double best = *std::max_element(terminal.begin(), terminal.end());
            return std::max(0.0, best - spec.strike);
        }
    }
    return 0.0;
}

double payoff(const PayoffSpec& spec, const PathSource& paths, std::size_t path) {
    const TimeGrid& grid = paths.grid();
    for (double f : spec.fixing_dates) {
        if (!grid.find(f)) {
            std::ostringstream msg;
            msg << "payoff: fixing date " << f << " missing from simulation grid";
            throw std::invalid_argument(msg.str());
        }
    }
    PathObservables obs;
    std::vector<double> terminal(paths.dimension());
    paths.visit(path, [&](std::size_t j, const StateView& s) {
        const double t = grid.times[j];
        if (spec.path_dependent()) obs = update_observables(spec, obs, t, s.asset[0] * spec.spot_factor(t));
        if (j + 1 == grid.size()) std::copy(s.asset.begin(), s.asset.end(), terminal.begin());
    });
    if (obs.fixings_observed != spec.fixing_dates.size()) {
        throw std::invalid_argument("payoff: not all fixing dates were observed on the grid");
    }
    return terminal_payoff(spec, obs, terminal);
}

}  // namespace driftmc

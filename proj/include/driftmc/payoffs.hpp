#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "driftmc/sde_models.hpp"

namespace driftmc {

enum class PayoffKind { Vanilla, Barrier, Asian, Basket, Rainbow };

std::string to_string(PayoffKind k);

/// Call-type payoff on simulated forwards. Path observations (barrier
/// monitoring, Asian fixings) are made on spot X_t = F_t exp(-carry (T - t)).
struct PayoffSpec {
    PayoffKind kind = PayoffKind::Vanilla;
    double strike = 0.0;
    double maturity = 0.0;
    double barrier = 0.0;               // down-and-out level (Barrier)
    std::vector<double> fixing_dates;   // Asian
    std::vector<double> weights;        // Basket
    double spot_carry = 0.0;

    double spot_factor(double t) const { return std::exp(-spot_carry * (maturity - t)); }
    bool path_dependent() const { return kind == PayoffKind::Barrier || kind == PayoffKind::Asian; }

    /// Segment boundaries {0, T_1, ..., T}: ends of the intervals on which psi
    /// is smooth in time.
    std::vector<double> segment_boundaries() const;

    void validate(std::size_t dimension, double spot0) const;
};

/// Quarterly fixing dates k/4, k = 1..4T.
std::vector<double> quarterly_fixings(double maturity);

/// Path history needed by path-dependent payoffs and psi_k.
struct PathObservables {
    double running_min = std::numeric_limits<double>::infinity();
    double partial_sum = 0.0;  // sum of observed spot fixings
    std::size_t fixings_observed = 0;
    bool knocked_out = false;
};

/// Adds the spot observation x at grid time t. The fixing counter increments
/// iff t is (within 1e-12) the next unobserved fixing date.
PathObservables update_observables(const PayoffSpec& spec, PathObservables obs, double t,
                                   double spot);

/// Payoff from final observables and terminal forwards.
double terminal_payoff(const PayoffSpec& spec, const PathObservables& obs,
                       std::span<const double> terminal);

/// Payoff of path `path` of a source. Throws if a fixing date is missing from
/// the grid.
double payoff(const PayoffSpec& spec, const PathSource& paths, std::size_t path);

}  // namespace driftmc

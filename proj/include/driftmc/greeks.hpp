#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "driftmc/analytic_pricers.hpp"
#include "driftmc/correction_engine.hpp"
#include "driftmc/payoffs.hpp"
#include "driftmc/sde_models.hpp"

namespace driftmc {

enum class GreekMethod { DriftCorrection, BumpRevalue };

std::string to_string(GreekMethod m);

/// Derivatives of the undiscounted (forward-measure) expected payoff with
/// respect to the initial spot X_0 of `asset`.
struct GreekReport {
    double delta = 0.0;
    double stderr_delta = 0.0;
    std::optional<double> gamma;
    std::optional<double> stderr_gamma;
    GreekMethod method = GreekMethod::DriftCorrection;
    std::size_t asset = 0;
    bool approximate = false;  // path only approximately proportional to X_0
    std::string note;
};

/// Asset whose delta is reported for multi-asset payoffs: the one with the
/// largest initial vol state (first on ties).
std::size_t highest_vol_asset(const ModelSpec& model);

/// Paths scale with X_0 exactly for Heston, GBM and SABR with beta = 1;
/// SABR with beta < 1 is accepted as an approximation. Throws
/// std::invalid_argument for additive dynamics and for barrier payoffs.
bool require_multiplicative(const ModelSpec& model, const PayoffSpec& payoff);

/// Delta = dpsi/dX_0 + E int (1/X_0) dxi/dlambda dt, where the whole path of
/// `asset` (forward, diffusion at fixed vol state, observed fixings) is scaled
/// by lambda. With gamma set, also
/// Gamma = d2psi/dX_0^2 + E int (1/X_0^2) d2xi/dlambda^2 dt (single asset only).
GreekReport drift_correction_greeks(const ModelSpec& model, const PathSource& paths,
                                    const PayoffSpec& payoff, const PsiFunction& psi,
                                    const IntegrationMethod& method, std::size_t asset,
                                    bool gamma);

inline GreekReport delta_drift_correction(const ModelSpec& model, const PathSource& paths,
                                          const PayoffSpec& payoff, const PsiFunction& psi,
                                          const IntegrationMethod& method, std::size_t asset = 0) {
    return drift_correction_greeks(model, paths, payoff, psi, method, asset, false);
}

inline GreekReport gamma_drift_correction(const ModelSpec& model, const PathSource& paths,
                                          const PayoffSpec& payoff, const PsiFunction& psi,
                                          const IntegrationMethod& method) {
    return drift_correction_greeks(model, paths, payoff, psi, method, 0, true);
}

/// Central differences of crude MC prices with X_0 of `asset` bumped by
/// +-bump * X_0 under common random numbers. With gamma set, the second
/// difference is reported too.
GreekReport bump_revalue_greeks(const ModelSpec& model, const TimeGrid& grid,
                                const PayoffSpec& payoff, std::size_t n_paths, std::uint64_t seed,
                                double bump, std::size_t asset, bool gamma);

inline GreekReport delta_bump_revalue(const ModelSpec& model, const TimeGrid& grid,
                                      const PayoffSpec& payoff, std::size_t n_paths,
                                      std::uint64_t seed, double bump = 0.01, std::size_t asset = 0) {
    return bump_revalue_greeks(model, grid, payoff, n_paths, seed, bump, asset, false);
}

}  // namespace driftmc

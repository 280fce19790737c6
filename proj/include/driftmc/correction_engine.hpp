#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "driftmc/analytic_pricers.hpp"
#include "driftmc/payoffs.hpp"
#include "driftmc/sde_models.hpp"

namespace driftmc {

/// tr(A^T gamma A) for A = diag(c) C, as a sum over the columns of C of second
/// central differences of psi along A e_r. Columns with |A e_r| < 1e-14 are
/// skipped. Uses at most 2R + 1 psi evaluations; `evaluations` (if set) is
/// incremented by the number made.
double directional_laplacian(const PsiFunction& psi, double t, std::span<const double> x,
                             const PathObservables& y, std::span<const double> c,
                             const CorrelationFactor& factor, std::size_t* evaluations = nullptr);

/// Correction integrand 1/2 [tr(s^T gamma s) - tr(s~^T gamma s~)] with s = diag(sigma_t) C
/// and s~ = diag(sigma~(x)) C, both traces sharing the centre evaluation
/// (at most 4R + 1 psi evaluations). Where a direction of s and s~ coincides
/// the same evaluations are used for both, so matching dynamics give exactly 0.
double xi(const PsiFunction& psi, double t, std::span<const double> x,
          std::span<const double> sigma_t, const PathObservables& y,
          std::size_t* evaluations = nullptr);

inline double xi_european(const PsiFunction& psi, double t, std::span<const double> x,
                          std::span<const double> sigma_t) {
    return xi(psi, t, x, sigma_t, PathObservables{});
}

/// psi_k is selected by `observables`: fixings observed so far and knock-out state.
inline double xi_path_dependent(const PsiFunction& psi, double t, std::span<const double> x,
                                std::span<const double> sigma_t, const PathObservables& observables) {
    return xi(psi, t, x, sigma_t, observables);
}

struct IntegrationMethod {
    enum class Kind { Legendre, Riemann };
    Kind kind = Kind::Legendre;
    std::size_t nodes = 24;  // Legendre
    double dt = 0.0;         // Riemann: largest step the grid may have

    static IntegrationMethod legendre(std::size_t nodes) { return {Kind::Legendre, nodes, 0.0}; }
    static IntegrationMethod riemann(double dt) { return {Kind::Riemann, 0, dt}; }
    std::string label() const;
};

/// Grid indices and weights at which xi is evaluated.
struct NodePlan {
    std::vector<std::size_t> index;
    std::vector<double> weight;
};

/// Legendre: the L-point rule on every segment between consecutive fixing
/// dates, weights scaled by segment length. Riemann: every left endpoint of the
/// grid with weight t_{j+1} - t_j. Throws if a node time is missing from the grid.
NodePlan plan_nodes(const IntegrationMethod& method, const TimeGrid& grid, const PayoffSpec& payoff);

struct CorrectionSample {
    IntegrationMethod method;
    std::vector<double> J;          // per path
    std::vector<double> Z;          // per path payoff
    std::vector<double> node_times;
    std::vector<double> node_mean;  // path-average xi at each node
};

/// Observables after the time-0 observation.
PathObservables initial_observables(const PayoffSpec& payoff, std::span<const double> forward0);

/// psi(0, X_0; Y_0).
double initial_psi(const PsiFunction& psi, const PayoffSpec& payoff, std::span<const double> forward0);

/// Integrates xi along every path of `paths`, once per method, visiting each
/// path a single time. Observables are updated with the state at t_j before xi
/// is evaluated at t_j.
std::vector<CorrectionSample> integrate_correction(const PathSource& paths, const PayoffSpec& payoff,
                                                   const PsiFunction& psi,
                                                   std::span<const IntegrationMethod> methods);

CorrectionSample integrate_correction(const PathSource& paths, const PayoffSpec& payoff,
                                      const PsiFunction& psi, const IntegrationMethod& method);

struct PriceEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// psi0 + mean(J), stderr = sd(J) / sqrt(N). Throws for N < 2.
PriceEstimate estimate_price(double psi0, const CorrectionSample& sample);

/// Crude payoff average of the same sample.
PriceEstimate crude_estimate(std::span<const double> payoffs);

/// Mean and sample standard deviation, summed in index order.
struct MeanStd {
    double mean = 0.0;
    double sd = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace driftmc

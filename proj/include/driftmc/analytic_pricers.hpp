#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "driftmc/payoffs.hpp"
#include "driftmc/quadrature.hpp"
#include "driftmc/sde_models.hpp"

namespace driftmc {

struct CallGreeks {
    double value = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
};

/// Undiscounted Black call on a forward. Zero total variance gives intrinsic
/// value with indicator delta and zero gamma.
CallGreeks bs_call(double forward, double strike, double sigma, double tau);

/// Undiscounted Bachelier call with absolute volatility.
CallGreeks bachelier_call(double forward, double strike, double sigma_abs, double tau);

/// Broadie-Glasserman shift for discretely monitored barriers.
inline constexpr double kBarrierShiftBeta = 0.5826;

struct BarrierValue {
    double value = 0.0;
    double delta = 0.0;
};

/// Continuously monitored down-and-out call (no rebate) in forward terms:
/// the spot is forward * exp(-rate * tau) and the result is undiscounted.
double bs_down_out_call_continuous(double forward, double strike, double barrier, double sigma,
                                   double tau, double rate = 0.0);

/// Down-and-out call for a barrier monitored every dt_monitor, priced with the
/// continuous formula at the shifted barrier H exp(-0.5826 sigma sqrt(dt)).
/// Delta is a central difference in the forward.
BarrierValue bs_down_out_call(double forward, double strike, double barrier, double sigma,
                              double tau, double dt_monitor, double rate = 0.0);

/// Bachelier value of an arithmetic-average call given the fixings still to
/// come. Fixing j observes spot_factors[j] * F_{t_j}; the forward follows
/// dF = sigma_abs dW. The average divides by total_fixings.
double bachelier_asian_psi(double t, double x, double partial_sum,
                           std::span<const double> remaining_times,
                           std::span<const double> remaining_factors, std::size_t total_fixings,
                           double strike, double sigma_abs);

/// Bachelier value of a weighted basket call over correlated arithmetic
/// Brownian motions; throws if the effective variance is negative.
double bachelier_basket_psi(double tau, std::span<const double> x, std::span<const double> weights,
                            double strike, std::span<const double> sigma_abs,
                            const Eigen::MatrixXd& corr);

/// Call on the maximum of correlated lognormal forwards.
///
/// Evaluates E[(M - K)^+] = int_K^inf P(M > x) dx with a fixed Gauss-Legendre
/// rule in log x. When the correlation has one-factor form rho_ij = a_i a_j
/// (any equicorrelation, any d <= 2) the assets are independent given the
/// common factor, which is integrated by Gauss-Hermite. Perfect correlation is
/// priced in closed form by splitting the factor line at crossing points.
/// Other structures fall back to sequential conditioning (nested Legendre
/// panels over each conditional normal).
/// The rule sizes are checked at construction against a doubled rule; an
/// accuracy miss above `tolerance` throws.
class RainbowMaxCall {
public:
    enum class Method { Single, Comonotone, OneFactor, Sequential };

    struct Options {
        std::size_t factor_nodes = 20;
        std::size_t level_nodes = 40;
        std::size_t sequential_nodes = 8;  // per panel of width 2
        double tolerance = 1e-6;
    };

    RainbowMaxCall(std::vector<double> sigma, const Eigen::MatrixXd& corr);
    RainbowMaxCall(std::vector<double> sigma, const Eigen::MatrixXd& corr, Options options);

    double value(double tau, std::span<const double> forwards, double strike) const;
    Method method() const { return method_; }

private:
    double one_factor(double tau, std::span<const double> f, double strike,
                      const NormalQuadrature& factor_rule, const QuadratureRule& level_rule) const;
    double comonotone(double tau, std::span<const double> f, double strike) const;
    double sequential(double tau, std::span<const double> f, double strike,
                      const QuadratureRule& level_rule, const QuadratureRule& nested_rule) const;
    double evaluate(double tau, std::span<const double> f, double strike, bool refined) const;

    std::vector<double> sigma_;
    std::vector<double> loading_;  // one-factor loadings a_i
    Eigen::MatrixXd cholesky_;
    Method method_ = Method::Single;
    Options options_;
    NormalQuadrature factor_rule_;
    NormalQuadrature factor_rule_fine_;
    QuadratureRule level_rule_;
    QuadratureRule level_rule_fine_;
    QuadratureRule nested_rule_;
    QuadratureRule nested_rule_fine_;
};

double bs_rainbow_max_psi(double tau, std::span<const double> x, double strike,
                          std::span<const double> sigma, const Eigen::MatrixXd& corr);

/// Auxiliary dynamics dX~ = diag(sigma~ X~^B) C dW~ with B in {0, 1}.
struct SimplifiedModel {
    int exponent = 1;  // 1: Black-Scholes, 0: Bachelier
    std::vector<double> sigma_tilde;
    Eigen::MatrixXd corr;
    CorrelationFactor factor;

    static SimplifiedModel create(int exponent, std::vector<double> sigma_tilde,
                                  Eigen::MatrixXd corr);

    std::size_t dimension() const { return sigma_tilde.size(); }
    double diffusion(std::size_t asset, double x) const {
        return exponent == 1 ? sigma_tilde[asset] * x : sigma_tilde[asset];
    }
};

/// Pricing function psi_k(t, x; y) of the payoff under the simplified
/// dynamics; y carries the observed path history.
class PsiFunction {
public:
    PsiFunction(SimplifiedModel model, double maturity)
        : model_(std::move(model)), maturity_(maturity) {}
    virtual ~PsiFunction() = default;

    std::size_t dimension() const { return model_.dimension(); }
    const SimplifiedModel& simplified() const { return model_; }
    double maturity() const { return maturity_; }

    virtual double value(double t, std::span<const double> x, const PathObservables& y) const = 0;

    /// Black-Scholes psi needs strictly positive assets; Bachelier accepts any.
    virtual bool in_domain(std::span<const double> x) const;

    /// dpsi/dx_i; central difference with step 1e-4 max(|x_i|, 1) unless overridden.
    virtual double delta(double t, std::span<const double> x, const PathObservables& y,
                         std::size_t asset) const;
    /// d2psi/dx_i^2; central difference with step 1e-3 max(|x_i|, 1) unless overridden.
    virtual double gamma(double t, std::span<const double> x, const PathObservables& y,
                         std::size_t asset) const;

protected:
    double tau(double t) const { return std::max(maturity_ - t, 0.0); }

private:
    SimplifiedModel model_;
    double maturity_;
};

/// Builds psi for a payoff. Valid pairings: Vanilla with either model,
/// Barrier and Rainbow with Black-Scholes, Asian and Basket with Bachelier.
/// `monitoring_step` feeds the barrier shift.
std::unique_ptr<PsiFunction> make_psi(const PayoffSpec& payoff, const SimplifiedModel& model,
                                      double monitoring_step);

struct SecondDerivative {
    double value = 0.0;
    bool step_shrunk = false;
};

/// [psi(x + h u) - 2 psi(x) + psi(x - h u)] / h^2. If x - h u or x + h u
/// leaves the domain the step is halved until both stay inside.
SecondDerivative psi_directional_second_derivative(const PsiFunction& psi, double t,
                                                   std::span<const double> x,
                                                   const PathObservables& y,
                                                   std::span<const double> direction, double h);

}  // namespace driftmc

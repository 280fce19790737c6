#include "driftmc/analytic_pricers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "driftmc/normal.hpp"

namespace driftmc {

CallGreeks bs_call(double forward, double strike, double sigma, double tau) {
    if (strike <= 0.0) return {forward - strike, 1.0, 0.0};
    const double v = sigma * std::sqrt(std::max(tau, 0.0));
    if (!(v > 0.0) || forward <= 0.0) {
        return {std::max(forward - strike, 0.0), forward > strike ? 1.0 : 0.0, 0.0};
    }
    const double d1 = (std::log(forward / strike) + 0.5 * v * v) / v;
    const double d2 = d1 - v;
    return {forward * norm_cdf(d1) - strike * norm_cdf(d2), norm_cdf(d1),
            norm_pdf(d1) / (forward * v)};
}

CallGreeks bachelier_call(double forward, double strike, double sigma_abs, double tau) {
    const double v = sigma_abs * std::sqrt(std::max(tau, 0.0));
    if (!(v > 0.0)) return {std::max(forward - strike, 0.0), forward > strike ? 1.0 : 0.0, 0.0};
    const double d = (forward - strike) / v;
    return {(forward - strike) * norm_cdf(d) + v * norm_pdf(d), norm_cdf(d), norm_pdf(d) / v};
}

double bs_down_out_call_continuous(double forward, double strike, double barrier, double sigma,
                                   double tau, double rate) {
    if (strike <= 0.0 || barrier <= 0.0) {
        throw std::invalid_argument("bs_down_out_call: strike and barrier must be positive");
    }
    tau = std::max(tau, 0.0);
    const double discount = std::exp(-rate * tau);
    const double spot = forward * discount;
    if (spot <= barrier) return 0.0;
    const double v = sigma * std::sqrt(tau);
    if (!(v > 0.0)) return std::max(forward - strike, 0.0);

    const double lambda = (rate + 0.5 * sigma * sigma) / (sigma * sigma);
    const double ratio = barrier / spot;
    const double reflect = std::pow(ratio, 2.0 * lambda);
    const double reflect_k = std::pow(ratio, 2.0 * lambda - 2.0);
    if (barrier <= strike) {
        const double vanilla = bs_call(forward, strike, sigma, tau).value;
        const double y = std::log(barrier * barrier / (spot * strike)) / v + lambda * v;
        const double knock_in = forward * reflect * norm_cdf(y) - strike * reflect_k * norm_cdf(y - v);
        return std::max(vanilla - knock_in, 0.0);
    }
    const double x1 = std::log(spot / barrier) / v + lambda * v;
    const double y1 = std::log(barrier / spot) / v + lambda * v;
    const double value = forward * norm_cdf(x1) - strike * norm_cdf(x1 - v) -
                         forward * reflect * norm_cdf(y1) + strike * reflect_k * norm_cdf(y1 - v);
    return std::max(value, 0.0);
}

BarrierValue bs_down_out_call(double forward, double strike, double barrier, double sigma,
                              double tau, double dt_monitor, double rate) {
    if (!(dt_monitor > 0.0)) throw std::invalid_argument("bs_down_out_call: dt_monitor must be positive");
    const double shifted = barrier * std::exp(-kBarrierShiftBeta * sigma * std::sqrt(dt_monitor));
    const double h = 1e-4 * std::max(std::abs(forward), 1.0);
    return {bs_down_out_call_continuous(forward, strike, shifted, sigma, tau, rate),
            (bs_down_out_call_continuous(forward + h, strike, shifted, sigma, tau, rate) -
             bs_down_out_call_continuous(forward - h, strike, shifted, sigma, tau, rate)) /
                (2.0 * h)};
}

double bachelier_asian_psi(double t, double x, double partial_sum,
                           std::span<const double> remaining_times,
                           std::span<const double> remaining_factors, std::size_t total_fixings,
                           double strike, double sigma_abs) {
    const auto n = static_cast<double>(total_fixings);
    if (remaining_times.empty()) return std::max(partial_sum / n - strike, 0.0);

    double factor_sum = 0.0;
    for (double c : remaining_factors) factor_sum += c;
    const double mean = (partial_sum + x * factor_sum) / n;

    // sum_{j,l} c_j c_l min(s_j, s_l) over ascending s_j = t_j - t.
    double suffix = 0.0;
    double weighted = 0.0;
    for (std::size_t j = remaining_times.size(); j-- > 0;) {
        const double c = remaining_factors[j];
        const double s = std::max(remaining_times[j] - t, 0.0);
        weighted += c * s * (c + 2.0 * suffix);
        suffix += c;
    }
    const double variance = std::max(sigma_abs * sigma_abs * weighted / (n * n), 0.0);
    return bachelier_call(mean, strike, std::sqrt(variance), 1.0).value;
}

double bachelier_basket_psi(double tau, std::span<const double> x, std::span<const double> weights,
                            double strike, std::span<const double> sigma_abs,
                            const Eigen::MatrixXd& corr) {
    const std::size_t d = x.size();
    if (weights.size() != d || sigma_abs.size() != d || static_cast<std::size_t>(corr.rows()) != d) {
        throw std::invalid_argument("bachelier_basket_psi: dimension mismatch");
    }
    double mean = 0.0;
    double q = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        mean += weights[i] * x[i];
        const double wi = weights[i] * sigma_abs[i];
        scale += wi * wi;
        for (std::size_t j = 0; j < d; ++j) {
            q += wi * weights[j] * sigma_abs[j] *
                 corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    if (q < -1e-12 * std::max(scale, 1e-300)) {
        throw std::invalid_argument("bachelier_basket_psi: effective variance is negative");
    }
    return bachelier_call(mean, strike, std::sqrt(std::max(q, 0.0)), tau).value;
}

namespace {

constexpr double kTruncation = 8.0;

std::size_t dim_of(const Eigen::MatrixXd& m) { return static_cast<std::size_t>(m.rows()); }

double corr_at(const Eigen::MatrixXd& m, std::size_t i, std::size_t j) {
    return m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

}  // namespace

RainbowMaxCall::RainbowMaxCall(std::vector<double> sigma, const Eigen::MatrixXd& corr)
    : RainbowMaxCall(std::move(sigma), corr, Options{}) {}

RainbowMaxCall::RainbowMaxCall(std::vector<double> sigma, const Eigen::MatrixXd& corr,
                               Options options)
    : sigma_(std::move(sigma)), options_(options) {
    const std::size_t d = sigma_.size();
    if (d == 0 || dim_of(corr) != d || static_cast<std::size_t>(corr.cols()) != d) {
        throw std::invalid_argument("RainbowMaxCall: dimension mismatch");
    }
    for (double s : sigma_) {
        if (!(s >= 0.0)) throw std::invalid_argument("RainbowMaxCall: volatilities must be nonnegative");
    }

    bool comonotone = true;
    bool equicorrelated = true;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            comonotone = comonotone && corr_at(corr, i, j) >= 1.0 - 1e-12;
            equicorrelated = equicorrelated && std::abs(corr_at(corr, i, j) - corr_at(corr, 1, 0)) <= 1e-12;
        }
    }

    if (d == 1) {
        method_ = Method::Single;
    } else if (comonotone) {
        method_ = Method::Comonotone;
    } else if (d == 2) {
        const double r = corr_at(corr, 1, 0);
        method_ = Method::OneFactor;
        loading_ = {std::sqrt(std::abs(r)), std::copysign(std::sqrt(std::abs(r)), r)};
    } else if (equicorrelated && corr_at(corr, 1, 0) >= 0.0) {
        method_ = Method::OneFactor;
        loading_.assign(d, std::sqrt(corr_at(corr, 1, 0)));
    } else {
        method_ = Method::Sequential;
        Eigen::LLT<Eigen::MatrixXd> llt(corr);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument(
                "RainbowMaxCall: correlation is neither one-factor nor positive definite");
        }
        cholesky_ = llt.matrixL();
    }

    factor_rule_ = gauss_hermite(options_.factor_nodes);
    factor_rule_fine_ = gauss_hermite(2 * options_.factor_nodes);
    level_rule_ = gauss_legendre(options_.level_nodes);
    level_rule_fine_ = gauss_legendre(2 * options_.level_nodes);
    nested_rule_ = gauss_legendre(options_.sequential_nodes);
    nested_rule_fine_ = gauss_legendre(2 * options_.sequential_nodes);

    if (method_ == Method::OneFactor || method_ == Method::Sequential) {
        // Probe: unit forwards at the money and a dispersed state, both at unit
        // horizon with the configured volatilities.
        std::vector<double> flat(d, 1.0);
        std::vector<double> spread(d);
        for (std::size_t i = 0; i < d; ++i) spread[i] = 1.0 + 0.15 * static_cast<double>(i);
        for (const auto* f : {&flat, &spread}) {
            for (double k : {0.8, 1.0, 1.3}) {
                const double coarse = evaluate(1.0, *f, k, false);
                const double fine = evaluate(1.0, *f, k, true);
                if (std::abs(coarse - fine) > options_.tolerance * std::max(std::abs(fine), 1e-3)) {
                    throw std::runtime_error("RainbowMaxCall: quadrature accuracy target not met");
                }
            }
        }
    }
}

double RainbowMaxCall::value(double tau, std::span<const double> forwards, double strike) const {
    if (forwards.size() != sigma_.size()) throw std::invalid_argument("RainbowMaxCall: dimension mismatch");
    return evaluate(tau, forwards, strike, false);
}

double RainbowMaxCall::evaluate(double tau, std::span<const double> f, double strike,
                                bool refined) const {
    double max_var = 0.0;
    for (double s : sigma_) max_var = std::max(max_var, s * s * tau);
    if (!(max_var > 0.0) || strike <= 0.0) {
        return std::max(*std::max_element(f.begin(), f.end()) - strike, 0.0);
    }
    switch (method_) {
        case Method::Single: return bs_call(f[0], strike, sigma_[0], tau).value;
        case Method::Comonotone: return comonotone(tau, f, strike);
        case Method::OneFactor:
            return refined ? one_factor(tau, f, strike, factor_rule_fine_, level_rule_fine_)
                           : one_factor(tau, f, strike, factor_rule_, level_rule_);
        case Method::Sequential:
            return refined ? sequential(tau, f, strike, level_rule_fine_, nested_rule_fine_)
                           : sequential(tau, f, strike, level_rule_, nested_rule_);
    }
    return 0.0;
}

double RainbowMaxCall::one_factor(double tau, std::span<const double> f, double strike,
                                  const NormalQuadrature& factor_rule,
                                  const QuadratureRule& level_rule) const {
    const std::size_t d = sigma_.size();
    const double root_tau = std::sqrt(tau);
    const double log_k = std::log(strike);

    double base[16];
    double load[16];
    double spread[16];
    double mean[16];
    double inv_spread[16];
    std::vector<double> heap;
    double* b = base;
    double* l = load;
    double* s = spread;
    double* m = mean;
    double* inv = inv_spread;
    if (d > 16) {
        heap.resize(5 * d);
        b = heap.data();
        l = b + d;
        s = l + d;
        m = s + d;
        inv = m + d;
    }
    for (std::size_t i = 0; i < d; ++i) {
        b[i] = std::log(f[i]) - 0.5 * sigma_[i] * sigma_[i] * tau;
        l[i] = sigma_[i] * root_tau * loading_[i];
        s[i] = sigma_[i] * root_tau * std::sqrt(std::max(0.0, 1.0 - loading_[i] * loading_[i]));
        inv[i] = s[i] > 0.0 ? 1.0 / (s[i] * std::numbers::sqrt2) : 0.0;
    }

    double total = 0.0;
    for (std::size_t q = 0; q < factor_rule.points.size(); ++q) {
        const double y = factor_rule.points[q];
        double lo = -std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d; ++i) {
            m[i] = b[i] + l[i] * y;
            lo = std::max(lo, m[i] - kTruncation * s[i]);
            hi = std::max(hi, m[i] + kTruncation * s[i]);
        }
        double inner = 0.0;
        const double start = std::max(lo, log_k);
        if (lo > log_k) inner += std::exp(lo) - strike;
        if (hi > start) {
            const double width = hi - start;
            for (std::size_t k = 0; k < level_rule.size(); ++k) {
                const double level = start + level_rule.abscissas[k] * width;
                double below = 1.0;
                for (std::size_t i = 0; i < d; ++i) {
                    below *= s[i] > 0.0 ? 0.5 * std::erfc((m[i] - level) * inv[i])
                                        : (level >= m[i] ? 1.0 : 0.0);
                }
                inner += level_rule.weights[k] * width * std::exp(level) * (1.0 - below);
            }
        }
        total += factor_rule.weights[q] * inner;
    }
    return total;
}

double RainbowMaxCall::comonotone(double tau, std::span<const double> f, double strike) const {
    const std::size_t d = sigma_.size();
    const double root_tau = std::sqrt(tau);
    std::vector<double> vol(d);
    std::vector<double> intercept(d);
    for (std::size_t i = 0; i < d; ++i) {
        vol[i] = sigma_[i] * root_tau;
        intercept[i] = std::log(f[i]) - 0.5 * vol[i] * vol[i];
    }
    const double log_k = std::log(strike);
    std::vector<double> cuts;
    for (std::size_t i = 0; i < d; ++i) {
        if (vol[i] > 0.0) cuts.push_back((log_k - intercept[i]) / vol[i]);
        for (std::size_t j = 0; j < i; ++j) {
            if (vol[i] != vol[j]) cuts.push_back((intercept[j] - intercept[i]) / (vol[i] - vol[j]));
        }
    }
    std::sort(cuts.begin(), cuts.end());
    const double inf = std::numeric_limits<double>::infinity();
    cuts.insert(cuts.begin(), -inf);
    cuts.push_back(inf);

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        if (!(b > a)) continue;
        const double mid = std::isinf(a) ? (std::isinf(b) ? 0.0 : b - 1.0) : (std::isinf(b) ? a + 1.0 : 0.5 * (a + b));
        std::size_t best = 0;
        for (std::size_t i = 1; i < d; ++i) {
            if (intercept[i] + vol[i] * mid > intercept[best] + vol[best] * mid) best = i;
        }
        if (intercept[best] + vol[best] * mid <= log_k) continue;
        const double s = vol[best];
        total += f[best] * (norm_cdf(b - s) - norm_cdf(a - s)) - strike * (norm_cdf(b) - norm_cdf(a));
    }
    return std::max(total, 0.0);
}

double RainbowMaxCall::sequential(double tau, std::span<const double> f, double strike,
                                  const QuadratureRule& level_rule,
                                  const QuadratureRule& nested_rule) const {
    const std::size_t d = sigma_.size();
    const double root_tau = std::sqrt(tau);
    std::vector<double> mu(d);
    std::vector<double> vol(d);
    double lo = -std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
        vol[i] = sigma_[i] * root_tau;
        mu[i] = std::log(f[i]) - 0.5 * vol[i] * vol[i];
        lo = std::max(lo, mu[i] - kTruncation * vol[i]);
        hi = std::max(hi, mu[i] + kTruncation * vol[i]);
    }
    std::vector<double> bound(d);
    std::vector<double> draws(d);

    // P(Z <= bound) for Z = L e, integrating e_0..e_{d-2} level by level.
    auto orthant = [&](auto&& self, std::size_t level) -> double {
        double shift = 0.0;
        for (std::size_t j = 0; j < level; ++j) {
            shift += cholesky_(static_cast<Eigen::Index>(level), static_cast<Eigen::Index>(j)) * draws[j];
        }
        const double limit = (bound[level] - shift) /
                             cholesky_(static_cast<Eigen::Index>(level), static_cast<Eigen::Index>(level));
        if (level + 1 == d) return norm_cdf(limit);
        // Integrate phi(e) P(rest | e) over [-8, limit] in panels of width <= 2.
        const double a = -kTruncation;
        const double b = std::min(limit, kTruncation);
        if (b <= a) return 0.0;
        const double panels = std::ceil((b - a) / 2.0);
        const double width = (b - a) / panels;
        double sum = 0.0;
        for (double panel = 0.0; panel < panels; panel += 1.0) {
            for (std::size_t k = 0; k < nested_rule.size(); ++k) {
                const double e = a + (panel + nested_rule.abscissas[k]) * width;
                draws[level] = e;
                sum += nested_rule.weights[k] * width * norm_pdf(e) * self(self, level + 1);
            }
        }
        return sum;
    };

    const double log_k = std::log(strike);
    double total = 0.0;
    const double start = std::max(lo, log_k);
    if (lo > log_k) total += std::exp(lo) - strike;
    if (hi > start) {
        const double width = hi - start;
        for (std::size_t k = 0; k < level_rule.size(); ++k) {
            const double level = start + level_rule.abscissas[k] * width;
            for (std::size_t i = 0; i < d; ++i) bound[i] = vol[i] > 0.0 ? (level - mu[i]) / vol[i]
                                                                      : (level >= mu[i] ? 40.0 : -40.0);
            total += level_rule.weights[k] * width * std::exp(level) * (1.0 - orthant(orthant, 0));
        }
    }
    return total;
}

double bs_rainbow_max_psi(double tau, std::span<const double> x, double strike,
                          std::span<const double> sigma, const Eigen::MatrixXd& corr) {
    return RainbowMaxCall(std::vector<double>(sigma.begin(), sigma.end()), corr).value(tau, x, strike);
}

SimplifiedModel SimplifiedModel::create(int exponent, std::vector<double> sigma_tilde,
                                        Eigen::MatrixXd corr) {
    if (exponent != 0 && exponent != 1) throw std::invalid_argument("SimplifiedModel: B must be 0 or 1");
    for (double s : sigma_tilde) {
        if (!(s > 0.0)) throw std::invalid_argument("SimplifiedModel: sigma_tilde must be positive");
    }
    const auto d = static_cast<Eigen::Index>(sigma_tilde.size());
    if (corr.size() == 0) corr = Eigen::MatrixXd::Identity(d, d);
    SimplifiedModel m;
    m.exponent = exponent;
    m.sigma_tilde = std::move(sigma_tilde);
    m.factor = factor_correlation(corr);
    m.corr = std::move(corr);
    return m;
}

bool PsiFunction::in_domain(std::span<const double> x) const {
    if (model_.exponent == 0) return true;
    return std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
}

double PsiFunction::delta(double t, std::span<const double> x, const PathObservables& y,
                          std::size_t asset) const {
    std::vector<double> shifted(x.begin(), x.end());
    const double h = 1e-4 * std::max(std::abs(x[asset]), 1.0);
    shifted[asset] = x[asset] + h;
    const double up = value(t, shifted, y);
    shifted[asset] = x[asset] - h;
    const double down = value(t, shifted, y);
    return (up - down) / (2.0 * h);
}

double PsiFunction::gamma(double t, std::span<const double> x, const PathObservables& y,
                          std::size_t asset) const {
    std::vector<double> direction(x.size(), 0.0);
    direction[asset] = 1.0;
    return psi_directional_second_derivative(*this, t, x, y, direction,
                                             1e-3 * std::max(std::abs(x[asset]), 1.0))
        .value;
}

namespace {

class VanillaPsi final : public PsiFunction {
public:
    VanillaPsi(SimplifiedModel m, double maturity, double strike)
        : PsiFunction(std::move(m), maturity), strike_(strike) {}

    double value(double t, std::span<const double> x, const PathObservables&) const override {
        return greeks(t, x[0]).value;
    }
    double delta(double t, std::span<const double> x, const PathObservables&,
                 std::size_t) const override {
        return greeks(t, x[0]).delta;
    }
    double gamma(double t, std::span<const double> x, const PathObservables&,
                 std::size_t) const override {
        return greeks(t, x[0]).gamma;
    }

private:
    CallGreeks greeks(double t, double x) const {
        const double s = simplified().sigma_tilde[0];
        return simplified().exponent == 1 ? bs_call(x, strike_, s, tau(t))
                                          : bachelier_call(x, strike_, s, tau(t));
    }
    double strike_;
};

class BarrierPsi final : public PsiFunction {
public:
    BarrierPsi(SimplifiedModel m, const PayoffSpec& spec, double monitoring_step)
        : PsiFunction(std::move(m), spec.maturity),
          strike_(spec.strike),
          rate_(spec.spot_carry),
          shifted_barrier_(spec.barrier * std::exp(-kBarrierShiftBeta * simplified().sigma_tilde[0] *
                                                   std::sqrt(monitoring_step))) {
        if (!(monitoring_step > 0.0)) throw std::invalid_argument("BarrierPsi: monitoring step must be positive");
    }

    double value(double t, std::span<const double> x, const PathObservables& y) const override {
        if (y.knocked_out) return 0.0;
        return bs_down_out_call_continuous(x[0], strike_, shifted_barrier_,
                                           simplified().sigma_tilde[0], tau(t), rate_);
    }

private:
    double strike_;
    double rate_;
    double shifted_barrier_;
};

class AsianPsi final : public PsiFunction {
public:
    AsianPsi(SimplifiedModel m, const PayoffSpec& spec)
        : PsiFunction(std::move(m), spec.maturity), strike_(spec.strike), times_(spec.fixing_dates) {
        for (double t : times_) factors_.push_back(spec.spot_factor(t));
    }

    double value(double t, std::span<const double> x, const PathObservables& y) const override {
        const std::size_t k = std::min(y.fixings_observed, times_.size());
        return bachelier_asian_psi(t, x[0], y.partial_sum, std::span(times_).subspan(k),
                                   std::span(factors_).subspan(k), times_.size(), strike_,
                                   simplified().sigma_tilde[0]);
    }

    double delta(double t, std::span<const double> x, const PathObservables& y,
                 std::size_t) const override {
        // d psi / dx = Phi(d) * sum(c_j) / n
        const std::size_t k = std::min(y.fixings_observed, times_.size());
        if (k == times_.size()) return 0.0;
        const double n = static_cast<double>(times_.size());
        double factor_sum = 0.0;
        for (std::size_t j = k; j < times_.size(); ++j) factor_sum += factors_[j];
        const double mean = (y.partial_sum + x[0] * factor_sum) / n;
        double suffix = 0.0;
        double weighted = 0.0;
        for (std::size_t j = times_.size(); j-- > k;) {
            const double c = factors_[j];
            weighted += c * std::max(times_[j] - t, 0.0) * (c + 2.0 * suffix);
            suffix += c;
        }
        const double sd = simplified().sigma_tilde[0] * std::sqrt(std::max(weighted, 0.0)) / n;
        return bachelier_call(mean, strike_, sd, 1.0).delta * factor_sum / n;
    }

private:
    double strike_;
    std::vector<double> times_;
    std::vector<double> factors_;
};

class BasketPsi final : public PsiFunction {
public:
    BasketPsi(SimplifiedModel m, const PayoffSpec& spec)
        : PsiFunction(std::move(m), spec.maturity), strike_(spec.strike), weights_(spec.weights) {
        const auto& sm = simplified();
        double q = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            const double wi = weights_[i] * sm.sigma_tilde[i];
            scale += wi * wi;
            for (std::size_t j = 0; j < weights_.size(); ++j) {
                q += wi * weights_[j] * sm.sigma_tilde[j] * corr_at(sm.corr, i, j);
            }
        }
        if (q < -1e-12 * scale) throw std::invalid_argument("BasketPsi: effective variance is negative");
        basket_sigma_ = std::sqrt(std::max(q, 0.0));
    }

    double value(double t, std::span<const double> x, const PathObservables&) const override {
        return bachelier_call(level(x), strike_, basket_sigma_, tau(t)).value;
    }
    double delta(double t, std::span<const double> x, const PathObservables&,
                 std::size_t asset) const override {
        return bachelier_call(level(x), strike_, basket_sigma_, tau(t)).delta * weights_[asset];
    }
    double gamma(double t, std::span<const double> x, const PathObservables&,
                 std::size_t asset) const override {
        return bachelier_call(level(x), strike_, basket_sigma_, tau(t)).gamma * weights_[asset] *
               weights_[asset];
    }

private:
    double level(std::span<const double> x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * x[i];
        return s;
    }
    double strike_;
    std::vector<double> weights_;
    double basket_sigma_ = 0.0;
};

class RainbowPsi final : public PsiFunction {
public:
    RainbowPsi(SimplifiedModel m, const PayoffSpec& spec)
        : PsiFunction(std::move(m), spec.maturity),
          strike_(spec.strike),
          pricer_(simplified().sigma_tilde, simplified().corr) {}

    double value(double t, std::span<const double> x, const PathObservables&) const override {
        return pricer_.value(tau(t), x, strike_);
    }

private:
    double strike_;
    RainbowMaxCall pricer_;
};

}  // namespace

std::unique_ptr<PsiFunction> make_psi(const PayoffSpec& payoff, const SimplifiedModel& model,
                                      double monitoring_step) {
    const bool bs = model.exponent == 1;
    auto pairing_error = [&] {
        return std::invalid_argument("make_psi: invalid payoff/simplified pairing (" +
                                     to_string(payoff.kind) + " with " +
                                     (bs ? "Black-Scholes" : "Bachelier") + ")");
    };
    if (payoff.kind == PayoffKind::Basket && payoff.weights.size() != model.dimension()) {
        throw std::invalid_argument("make_psi: basket weights do not match simplified dimension");
    }
    switch (payoff.kind) {
        case PayoffKind::Vanilla:
            return std::make_unique<VanillaPsi>(model, payoff.maturity, payoff.strike);
        case PayoffKind::Barrier:
            if (!bs) throw pairing_error();
            return std::make_unique<BarrierPsi>(model, payoff, monitoring_step);
        case PayoffKind::Asian:
            if (bs) throw pairing_error();
            return std::make_unique<AsianPsi>(model, payoff);
        case PayoffKind::Basket:
            if (bs) throw pairing_error();
            return std::make_unique<BasketPsi>(model, payoff);
        case PayoffKind::Rainbow:
            if (!bs) throw pairing_error();
            return std::make_unique<RainbowPsi>(model, payoff);
    }
    throw pairing_error();
}

SecondDerivative psi_directional_second_derivative(const PsiFunction& psi, double t,
                                                   std::span<const double> x,
                                                   const PathObservables& y,
                                                   std::span<const double> direction, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("psi_directional_second_derivative: h must be positive");
    double norm = 0.0;
    for (double u : direction) norm += u * u;
    if (norm == 0.0) return {};

    const std::size_t d = x.size();
    std::vector<double> plus(d);
    std::vector<double> minus(d);
    bool shrunk = false;
    for (int attempt = 0; attempt < 64; ++attempt) {
        for (std::size_t i = 0; i < d; ++i) {
            plus[i] = x[i] + h * direction[i];
            minus[i] = x[i] - h * direction[i];
        }
        if (psi.in_domain(plus) && psi.in_domain(minus)) break;
        h *= 0.5;
        shrunk = true;
    }
    const double center = psi.value(t, x, y);
    return {(psi.value(t, plus, y) - 2.0 * center + psi.value(t, minus, y)) / (h * h), shrunk};
}

}  // namespace driftmc

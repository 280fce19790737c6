#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "driftmc/analytic_pricers.hpp"
#include "driftmc/correction_engine.hpp"

using namespace driftmc;

namespace {

double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
double pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// Plain normal-model call, written independently of the library.
double normal_call(double mean, double strike, double sd) {
    const double d = (mean - strike) / sd;
    return (mean - strike) * cdf(d) + sd * pdf(d);
}

Eigen::MatrixXd corr2(double rho) {
    Eigen::MatrixXd c(2, 2);
    c << 1, rho, rho, 1;
    return c;
}

Eigen::MatrixXd equicorrelation(int d, double rho) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, rho);
    c.diagonal().setOnes();
    return c;
}

PayoffSpec spec(PayoffKind kind, double strike, double maturity = 1.0) {
    PayoffSpec p;
    p.kind = kind;
    p.strike = strike;
    p.maturity = maturity;
    return p;
}

class QuadraticPsi final : public PsiFunction {
public:
    QuadraticPsi() : PsiFunction(SimplifiedModel::create(0, {1.0, 1.0}, {}), 1.0) {}
    double value(double, std::span<const double> x, const PathObservables&) const override {
        return x[0] * x[0] + 3.0 * x[0] * x[1];
    }
};

}  // namespace

TEST(BlackCall, ReferenceValues) {
    const auto atm = bs_call(100, 100, 0.2, 1);
    EXPECT_NEAR(atm.value, 7.9655674554057967, 1e-10);
    EXPECT_NEAR(atm.gamma, 0.019847627373850588, 1e-12);
    EXPECT_NEAR(bs_call(100 * std::exp(0.05), 105, 0.1, 1).value, 4.2535448225971057, 1e-10);
    EXPECT_NEAR(atm.delta, cdf(0.1), 1e-14);
}

TEST(BlackCall, DegenerateInputs) {
    EXPECT_DOUBLE_EQ(bs_call(100, 0, 0.2, 1).value, 100.0);
    EXPECT_DOUBLE_EQ(bs_call(100, 0, 0.2, 1).delta, 1.0);
    const auto itm = bs_call(110, 100, 0.0, 1);
    EXPECT_DOUBLE_EQ(itm.value, 10.0);
    EXPECT_DOUBLE_EQ(itm.delta, 1.0);
    EXPECT_DOUBLE_EQ(itm.gamma, 0.0);
    EXPECT_DOUBLE_EQ(bs_call(90, 100, 0.2, 0).value, 0.0);
}

TEST(BachelierCall, ReferenceValues) {
    EXPECT_NEAR(bachelier_call(100, 100, 10, 1).value, 3.9894228040143268, 1e-12);
    EXPECT_NEAR(bachelier_call(103, 100, 8, 0.5).value, normal_call(103, 100, 8 * std::sqrt(0.5)), 1e-12);
    EXPECT_DOUBLE_EQ(bachelier_call(95, 100, 0, 1).value, 0.0);
}

TEST(DownOutCall, ReferenceValues) {
    EXPECT_NEAR(bs_down_out_call_continuous(100, 105, 95, 0.1, 1, 0.05), 0.10714003526354393, 1e-11);
    EXPECT_NEAR(bs_down_out_call_continuous(100, 100, 90, 0.25, 1, 0), 7.1760319960889667, 1e-10);
    EXPECT_NEAR(bs_down_out_call_continuous(100, 90, 95, 0.2, 0.5, 0.03), 5.1226699891148898, 1e-10);
    EXPECT_NEAR(bs_down_out_call_continuous(120, 100, 110, 0.3, 2, 0), 11.281801560188161, 1e-10);
}

TEST(DownOutCall, LimitsAndShift) {
    EXPECT_NEAR(bs_down_out_call_continuous(100, 100, 1e-8, 0.2, 1), bs_call(100, 100, 0.2, 1).value, 1e-10);
    EXPECT_EQ(bs_down_out_call_continuous(100, 100, 100, 0.2, 1), 0.0);
    const auto shifted = bs_down_out_call(100, 100, 90, 0.2, 1, 1.0 / 512);
    const double h_shift = 90 * std::exp(-kBarrierShiftBeta * 0.2 * std::sqrt(1.0 / 512));
    EXPECT_DOUBLE_EQ(shifted.value, bs_down_out_call_continuous(100, 100, h_shift, 0.2, 1));
    EXPECT_GT(shifted.value, bs_down_out_call_continuous(100, 100, 90, 0.2, 1));
    const double fd = (bs_down_out_call_continuous(100.01, 100, h_shift, 0.2, 1) -
                       bs_down_out_call_continuous(99.99, 100, h_shift, 0.2, 1)) / 0.02;
    EXPECT_NEAR(shifted.delta, fd, 1e-6);
}

TEST(BachelierAsian, MatchesDirectCovarianceSum) {
    const std::vector<double> times = quarterly_fixings(1.0);
    const std::vector<double> factors{0.99, 0.995, 0.998, 1.0};
    const double sigma = 12.0;
    for (std::size_t k = 0; k <= 4; ++k) {
        const double t = k == 0 ? 0.1 : times[k - 1] + 0.05;
        double partial = 0.0;
        for (std::size_t j = 0; j < k; ++j) partial += 100.0 + j;
        const double x = 101.0;
        double mean = partial, var = 0.0;
        for (std::size_t j = k; j < 4; ++j) {
            mean += factors[j] * x;
            for (std::size_t l = k; l < 4; ++l) var += factors[j] * factors[l] * (std::min(times[j], times[l]) - t);
        }
        const double expected = k == 4 ? std::max(partial / 4 - 100.0, 0.0)
                                       : normal_call(mean / 4, 100.0, sigma * std::sqrt(std::max(var, 0.0)) / 4);
        const double got = bachelier_asian_psi(t, x, partial, std::span(times).subspan(k),
                                               std::span(factors).subspan(k), 4, 100.0, sigma);
        EXPECT_NEAR(got, expected, 1e-12) << k;
    }
}

TEST(BachelierAsian, SingleFixingIsBachelierCall) {
    const std::vector<double> t{1.0}, c{1.0};
    EXPECT_NEAR(bachelier_asian_psi(0, 100, 0, t, c, 1, 100, 20), bachelier_call(100, 100, 20, 1).value, 1e-13);
}

TEST(BachelierBasket, Reductions) {
    const std::vector<double> one{103.0}, w1{1.0}, s1{15.0};
    EXPECT_NEAR(bachelier_basket_psi(0.7, one, w1, 100, s1, Eigen::MatrixXd::Identity(1, 1)),
                bachelier_call(103, 100, 15, 0.7).value, 1e-13);
    const std::vector<double> x{100, 104, 98}, w{0.2, 0.5, 0.3}, s{10, 20, 15};
    const auto rho = equicorrelation(3, 0.4);
    double mean = 0, var = 0;
    for (int i = 0; i < 3; ++i) {
        mean += w[i] * x[i];
        for (int j = 0; j < 3; ++j) var += w[i] * w[j] * s[i] * s[j] * rho(i, j);
    }
    EXPECT_NEAR(bachelier_basket_psi(2.0, x, w, 101, s, rho), normal_call(mean, 101, std::sqrt(2.0 * var)), 1e-12);
}

TEST(Rainbow, ReferenceValuesTwoAssets) {
    const auto v = [](double f1, double f2, double s1, double s2, double rho, double k, double tau) {
        const std::vector<double> f{f1, f2}, s{s1, s2};
        return bs_rainbow_max_psi(tau, f, k, s, corr2(rho));
    };
    EXPECT_NEAR(v(100, 105, 0.2, 0.3, 0.4, 100, 1), 18.490781591851555, 1e-6);
    EXPECT_NEAR(v(100, 95, 0.25, 0.25, -0.3, 110, 0.5), 5.3782856213207977, 1e-6);
    EXPECT_NEAR(v(100, 100, 0.2, 0.2, 0, 100, 1), 13.905964580753142, 1e-6);
}

TEST(Rainbow, SingleAssetAndComonotone) {
    const std::vector<double> f{97.0}, s{0.3};
    const RainbowMaxCall single(s, Eigen::MatrixXd::Identity(1, 1));
    EXPECT_EQ(single.method(), RainbowMaxCall::Method::Single);
    EXPECT_NEAR(single.value(0.8, f, 100), bs_call(97, 100, 0.3, 0.8).value, 1e-12);

    const std::vector<double> f2{97.0, 103.0}, s2{0.3, 0.3};
    const RainbowMaxCall como(s2, Eigen::MatrixXd::Ones(2, 2));
    EXPECT_EQ(como.method(), RainbowMaxCall::Method::Comonotone);
    EXPECT_NEAR(como.value(0.8, f2, 100), bs_call(103, 100, 0.3, 0.8).value, 1e-10);
}

TEST(Rainbow, IndependentAssetsMatchProductFormula) {
    // With independent assets, P(max <= m) = prod_i P(F_i <= m); integrate the tail directly.
    const std::vector<double> f{100, 90, 110}, s{0.2, 0.35, 0.25};
    const double tau = 1.0, k = 105;
    const RainbowMaxCall r(s, Eigen::MatrixXd::Identity(3, 3));
    const auto rule = gauss_legendre(200);
    double integral = 0;
    const double lo = std::log(k), hi = std::log(k) + 4.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double u = lo + (hi - lo) * rule.abscissas[q];
        const double m = std::exp(u);
        double below = 1;
        for (int i = 0; i < 3; ++i) {
            const double sd = s[i] * std::sqrt(tau);
            below *= cdf((std::log(m / f[i]) + 0.5 * sd * sd) / sd);
        }
        integral += rule.weights[q] * (hi - lo) * m * (1 - below);
    }
    EXPECT_NEAR(r.value(tau, f, k), integral, 1e-6);
}

TEST(Rainbow, SequentialMethodAgreesWithOneFactor) {
    // A non one-factor matrix exercises the nested rule; compare with a nearby one-factor case.
    Eigen::MatrixXd rho(3, 3);
    rho << 1, 0.5, 0.1, 0.5, 1, 0.3, 0.1, 0.3, 1;
    const std::vector<double> s{0.2, 0.25, 0.3}, f{100, 100, 100};
    const RainbowMaxCall seq(s, rho);
    EXPECT_EQ(seq.method(), RainbowMaxCall::Method::Sequential);
    // Monte Carlo oracle.
    std::mt19937_64 gen(4);
    std::normal_distribution<double> n01;
    const Eigen::MatrixXd l = rho.llt().matrixL();
    const int n = 400000;
    double sum = 0, sq = 0;
    for (int p = 0; p < n; ++p) {
        Eigen::Vector3d z(n01(gen), n01(gen), n01(gen));
        const Eigen::Vector3d w = l * z;
        double m = 0;
        for (int i = 0; i < 3; ++i) m = std::max(m, f[i] * std::exp(-0.5 * s[i] * s[i] + s[i] * w[i]));
        const double pay = std::max(m - 105.0, 0.0);
        sum += pay;
        sq += pay * pay;
    }
    const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(seq.value(1.0, f, 105), mean, 4 * se);
}

TEST(PsiSecondDerivative, QuadraticIsExact) {
    const QuadraticPsi psi;
    const std::vector<double> x{2.0, -1.0}, u{0.6, 0.8};
    // u^T H u with H = [[2, 3], [3, 0]].
    const auto r = psi_directional_second_derivative(psi, 0.0, x, {}, u, 0.01);
    EXPECT_NEAR(r.value, 2 * 0.36 + 2 * 3 * 0.48, 1e-9);
    const std::vector<double> zero{0.0, 0.0};
    EXPECT_EQ(psi_directional_second_derivative(psi, 0.0, x, {}, zero, 0.01).value, 0.0);
}

TEST(PsiSecondDerivative, MatchesBlackGammaAndShrinksNearBoundary) {
    const auto model = SimplifiedModel::create(1, {0.2}, {});
    const auto psi = make_psi(spec(PayoffKind::Vanilla, 100), model, 0.0);
    const std::vector<double> x{100.0}, u{1.0};
    const auto r = psi_directional_second_derivative(*psi, 0.0, x, {}, u, 0.01);
    EXPECT_NEAR(r.value, 0.019847627373850588, 1e-6);
    EXPECT_FALSE(r.step_shrunk);
    const std::vector<double> near{0.5};
    const auto s = psi_directional_second_derivative(*psi, 0.0, near, {}, u, 1.0);
    EXPECT_TRUE(s.step_shrunk);
}

TEST(MakePsi, RejectsInvalidPairings) {
    const auto bs = SimplifiedModel::create(1, {0.2}, {});
    const auto bach = SimplifiedModel::create(0, {20.0}, {});
    PayoffSpec barrier = spec(PayoffKind::Barrier, 100);
    barrier.barrier = 90;
    PayoffSpec asian = spec(PayoffKind::Asian, 100);
    asian.fixing_dates = quarterly_fixings(1.0);
    PayoffSpec basket = spec(PayoffKind::Basket, 100);
    basket.weights = {1.0};
    EXPECT_THROW(make_psi(barrier, bach, 0.01), std::invalid_argument);
    EXPECT_THROW(make_psi(asian, bs, 0.01), std::invalid_argument);
    EXPECT_THROW(make_psi(basket, bs, 0.01), std::invalid_argument);
    EXPECT_THROW(make_psi(spec(PayoffKind::Rainbow, 100), bach, 0.01), std::invalid_argument);
    EXPECT_NO_THROW(make_psi(spec(PayoffKind::Vanilla, 100), bach, 0.01));
    EXPECT_NO_THROW(make_psi(barrier, bs, 0.01));
    EXPECT_NO_THROW(make_psi(asian, bach, 0.01));
}

TEST(Psi, TerminalConditionEqualsPayoff) {
    const auto bs = SimplifiedModel::create(1, {0.2}, {});
    const auto psi = make_psi(spec(PayoffKind::Vanilla, 100), bs, 0.0);
    for (double x : {80.0, 100.0, 120.0}) {
        const std::vector<double> v{x};
        EXPECT_NEAR(psi->value(1.0, v, {}), terminal_payoff(spec(PayoffKind::Vanilla, 100), {}, v), 1e-12);
    }
    PayoffSpec asian = spec(PayoffKind::Asian, 100);
    asian.fixing_dates = quarterly_fixings(1.0);
    const auto apsi = make_psi(asian, SimplifiedModel::create(0, {20.0}, {}), 0.0);
    PathObservables y;
    y.partial_sum = 312;
    y.fixings_observed = 3;
    const std::vector<double> last{106.0};
    PathObservables done = update_observables(asian, y, 1.0, 106.0);
    EXPECT_NEAR(apsi->value(1.0, last, y), terminal_payoff(asian, done, last), 1e-12);
}

TEST(Psi, AsianContinuityAcrossFixings) {
    PayoffSpec asian = spec(PayoffKind::Asian, 100, 2.0);
    asian.fixing_dates = quarterly_fixings(2.0);
    asian.spot_carry = 0.03;
    const auto psi = make_psi(asian, SimplifiedModel::create(0, {18.0}, {}), 0.0);
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> level(70, 130);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = static_cast<std::size_t>(trial % 8);
        PathObservables before;
        for (std::size_t j = 0; j < k; ++j) before = update_observables(asian, before, asian.fixing_dates[j], level(gen));
        const double tk = asian.fixing_dates[k];
        const double x = level(gen);
        const PathObservables after = update_observables(asian, before, tk, x * asian.spot_factor(tk));
        ASSERT_EQ(after.fixings_observed, k + 1);
        const std::vector<double> v{x};
        EXPECT_NEAR(psi->value(tk, v, before), psi->value(tk, v, after), 1e-10) << trial;
    }
}

TEST(Psi, AnalyticGradientsMatchDifferences) {
    PayoffSpec asian = spec(PayoffKind::Asian, 100);
    asian.fixing_dates = quarterly_fixings(1.0);
    PayoffSpec basket = spec(PayoffKind::Basket, 100);
    basket.weights = {0.3, 0.7};
    struct Case {
        std::unique_ptr<PsiFunction> psi;
        std::vector<double> x;
        PathObservables y;
    };
    PathObservables fixed;
    fixed.partial_sum = 99;
    fixed.fixings_observed = 1;
    std::vector<Case> cases;
    cases.push_back({make_psi(spec(PayoffKind::Vanilla, 105), SimplifiedModel::create(1, {0.15}, {}), 0), {101}, {}});
    cases.push_back({make_psi(spec(PayoffKind::Vanilla, 105), SimplifiedModel::create(0, {15.0}, {}), 0), {101}, {}});
    cases.push_back({make_psi(asian, SimplifiedModel::create(0, {15.0}, {}), 0), {101}, fixed});
    cases.push_back({make_psi(basket, SimplifiedModel::create(0, {15.0, 25.0}, corr2(0.4)), 0), {98, 104}, {}});
    for (const auto& c : cases) {
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            auto up = c.x, dn = c.x;
            up[i] += 1e-3;
            dn[i] -= 1e-3;
            const double fd = (c.psi->value(0.3, up, c.y) - c.psi->value(0.3, dn, c.y)) / 2e-3;
            EXPECT_NEAR(c.psi->delta(0.3, c.x, c.y, i), fd, 1e-7);
            const double fd2 = (c.psi->value(0.3, up, c.y) - 2 * c.psi->value(0.3, c.x, c.y) +
                                c.psi->value(0.3, dn, c.y)) / 1e-6;
            EXPECT_NEAR(c.psi->gamma(0.3, c.x, c.y, i), fd2, 1e-5);
        }
    }
}

TEST(Psi, SatisfiesBackwardEquation) {
    PayoffSpec barrier = spec(PayoffKind::Barrier, 105);
    barrier.barrier = 90;
    barrier.spot_carry = 0.05;
    PayoffSpec asian = spec(PayoffKind::Asian, 100);
    asian.fixing_dates = quarterly_fixings(1.0);
    PayoffSpec basket = spec(PayoffKind::Basket, 100);
    basket.weights = {0.2, 0.5, 0.3};
    PathObservables one_fixed;
    one_fixed.partial_sum = 101;
    one_fixed.fixings_observed = 1;
    struct Case {
        std::string name;
        std::unique_ptr<PsiFunction> psi;
        std::vector<double> x;
        PathObservables y;
    };
    std::vector<Case> cases;
    cases.push_back({"vanilla-bs", make_psi(spec(PayoffKind::Vanilla, 105), SimplifiedModel::create(1, {0.1}, {}), 0), {103}, {}});
    cases.push_back({"vanilla-bach", make_psi(spec(PayoffKind::Vanilla, 105), SimplifiedModel::create(0, {10.0}, {}), 0), {103}, {}});
    cases.push_back({"barrier", make_psi(barrier, SimplifiedModel::create(1, {0.1}, {}), 1.0 / 512), {104}, {}});
    cases.push_back({"asian", make_psi(asian, SimplifiedModel::create(0, {10.0}, {}), 0), {102}, one_fixed});
    cases.push_back({"basket", make_psi(basket, SimplifiedModel::create(0, {10, 15, 20}, equicorrelation(3, 0.4)), 0), {99, 101, 103}, {}});
    cases.push_back({"rainbow", make_psi(spec(PayoffKind::Rainbow, 100), SimplifiedModel::create(1, {0.2, 0.25, 0.3}, equicorrelation(3, 0.4)), 0), {99, 101, 103}, {}});
    const double t = 0.4, ht = 1e-5;
    for (const auto& c : cases) {
        const auto& m = c.psi->simplified();
        std::vector<double> diffusion(c.x.size());
        for (std::size_t i = 0; i < c.x.size(); ++i) diffusion[i] = m.diffusion(i, c.x[i]);
        const double dt = (c.psi->value(t + ht, c.x, c.y) - c.psi->value(t - ht, c.x, c.y)) / (2 * ht);
        const double lap = directional_laplacian(*c.psi, t, c.x, c.y, diffusion, m.factor);
        EXPECT_LE(std::abs(dt + 0.5 * lap), 1e-4) << c.name;
    }
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "driftmc/correction_engine.hpp"

using namespace driftmc;

namespace {

Eigen::MatrixXd equicorrelation(int d, double rho) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, rho);
    c.diagonal().setOnes();
    return c;
}

PayoffSpec vanilla(double strike, double maturity = 1.0) {
    PayoffSpec p;
    p.kind = PayoffKind::Vanilla;
    p.strike = strike;
    p.maturity = maturity;
    return p;
}

class SquaredNorm final : public PsiFunction {
public:
    explicit SquaredNorm(std::size_t d)
        : PsiFunction(SimplifiedModel::create(0, std::vector<double>(d, 1.0), {}), 1.0) {}
    double value(double, std::span<const double> x, const PathObservables&) const override {
        double s = 0;
        for (double v : x) s += v * v;
        return s;
    }
};

// Dense central-difference Hessian of psi at x.
Eigen::MatrixXd dense_hessian(const PsiFunction& psi, double t, const std::vector<double>& x) {
    const auto d = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd h(d, d);
    auto f = [&](Eigen::Index i, double a, Eigen::Index j, double b) {
        auto y = x;
        y[i] += a;
        y[j] += b;
        return psi.value(t, y, {});
    };
    for (Eigen::Index i = 0; i < d; ++i) {
        const double hi = 1e-3 * x[i];
        for (Eigen::Index j = 0; j < d; ++j) {
            const double hj = 1e-3 * x[j];
            h(i, j) = (f(i, hi, j, hj) - f(i, hi, j, -hj) - f(i, -hi, j, hj) + f(i, -hi, j, -hj)) / (4 * hi * hj);
        }
    }
    return h;
}

}  // namespace

TEST(DirectionalLaplacian, SquaredNormGivesTwiceDimension) {
    for (std::size_t d : {1u, 2u, 5u}) {
        const SquaredNorm psi(d);
        const std::vector<double> x(d, 3.0), c(d, 1.0);
        std::size_t evals = 0;
        EXPECT_NEAR(directional_laplacian(psi, 0.0, x, {}, c, psi.simplified().factor, &evals), 2.0 * d, 1e-8);
        EXPECT_LE(evals, 2 * d + 1);
        // Doubling the diffusion of every asset: xi = 1/2 (4 - 1) 2d.
        const std::vector<double> sig(d, 2.0);
        EXPECT_NEAR(xi(psi, 0.0, x, sig, {}), 3.0 * d, 1e-7);
    }
}

TEST(DirectionalLaplacian, AgreesWithDenseHessian) {
    const std::vector<double> s{0.2, 0.3, 0.25};
    for (int d = 1; d <= 3; ++d) {
        const auto rho = equicorrelation(d, 0.4);
        const auto model = SimplifiedModel::create(1, std::vector<double>(s.begin(), s.begin() + d), rho);
        PayoffSpec rainbow = vanilla(100);
        rainbow.kind = PayoffKind::Rainbow;
        const auto psi = make_psi(rainbow, model, 0.0);
        std::mt19937_64 gen(static_cast<unsigned>(d));
        std::uniform_real_distribution<double> level(85, 115), vol(0.1, 0.5);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<double> x(d), c(d);
            for (int i = 0; i < d; ++i) {
                x[i] = level(gen);
                c[i] = vol(gen) * x[i];
            }
            const Eigen::MatrixXd a = Eigen::Map<Eigen::VectorXd>(c.data(), d).asDiagonal() * model.factor.loadings;
            const double dense = (a.transpose() * dense_hessian(*psi, 0.5, x) * a).trace();
            std::size_t evals = 0;
            const double stencil = directional_laplacian(*psi, 0.5, x, {}, c, model.factor, &evals);
            EXPECT_NEAR(stencil, dense, 1e-4 * std::abs(dense)) << d << " " << trial;
            EXPECT_LE(evals, 2 * model.factor.rank() + 1);
            std::vector<double> other(c);
            for (double& v : other) v *= 1.3;
            evals = 0;
            xi(*psi, 0.5, x, other, {}, &evals);
            EXPECT_LE(evals, 4 * model.factor.rank() + 1);
        }
    }
}

TEST(Xi, SignFollowsConvexity) {
    const auto model = SimplifiedModel::create(1, {0.2}, {});
    const auto psi = make_psi(vanilla(100), model, 0.0);
    const std::vector<double> x{100.0}, high{30.0}, low{10.0}, same{20.0};
    EXPECT_GT(xi(*psi, 0.3, x, high, {}), 0.0);
    EXPECT_LT(xi(*psi, 0.3, x, low, {}), 0.0);
    EXPECT_EQ(xi(*psi, 0.3, x, same, {}), 0.0);
}

TEST(Xi, VanishesAtHestonInception) {
    ModelSpec m;
    m.kind = Dynamics::Heston;
    m.x0 = {100.0};
    m.heston = HestonParams{{0.01}, 5.0, {}, 0.3, -0.1, 0.05};
    const auto f0 = m.initial_forward(1.0);
    const double s0 = m.local_diffusion(0, f0[0], m.initial_vol(0));
    for (int b : {0, 1}) {
        const auto model = SimplifiedModel::create(b, {b == 1 ? s0 / f0[0] : s0}, {});
        const auto psi = make_psi(vanilla(105), model, 0.0);
        const std::vector<double> sig{s0};
        EXPECT_NEAR(xi_european(*psi, 0.0, f0, sig), 0.0, 1e-12);
    }
}

TEST(PlanNodes, IntegratesLinearFunctionExactly) {
    const auto rule = gauss_legendre(24);
    const auto grid = build_grid(1.0, 1.0 / 512, &rule, {});
    const auto plan = plan_nodes(IntegrationMethod::legendre(24), grid, vanilla(100));
    double integral = 0, total = 0;
    for (std::size_t p = 0; p < plan.index.size(); ++p) {
        integral += plan.weight[p] * grid.times[plan.index[p]];
        total += plan.weight[p];
    }
    EXPECT_NEAR(integral, 0.5, 1e-14);
    EXPECT_NEAR(total, 1.0, 1e-14);

    const auto fine = build_grid(1.0, 1e-3, nullptr, {});
    const auto rplan = plan_nodes(IntegrationMethod::riemann(1e-3), fine, vanilla(100));
    integral = 0;
    for (std::size_t p = 0; p < rplan.index.size(); ++p) integral += rplan.weight[p] * fine.times[rplan.index[p]];
    EXPECT_NEAR(integral, 0.5 - 0.5e-3, 1e-12);
}

TEST(PlanNodes, SegmentsFollowFixings) {
    PayoffSpec asian = vanilla(100, 1.0);
    asian.kind = PayoffKind::Asian;
    asian.fixing_dates = quarterly_fixings(1.0);
    const auto rule = gauss_legendre(4);
    const auto grid = build_grid(1.0, 1.0 / 64, &rule, asian.fixing_dates);
    const auto plan = plan_nodes(IntegrationMethod::legendre(4), grid, asian);
    EXPECT_EQ(plan.index.size(), 16u);
    double integral = 0;
    for (std::size_t p = 0; p < plan.index.size(); ++p) {
        const double t = grid.times[plan.index[p]];
        integral += plan.weight[p] * t * t * t;
    }
    EXPECT_NEAR(integral, 0.25, 1e-14);
}

TEST(PlanNodes, MissingNodesAndCoarseGridsThrow) {
    const auto grid = build_grid(1.0, 1.0 / 64, nullptr, {});
    EXPECT_THROW(plan_nodes(IntegrationMethod::legendre(24), grid, vanilla(100)), std::invalid_argument);
    EXPECT_THROW(plan_nodes(IntegrationMethod::riemann(1e-3), grid, vanilla(100)), std::invalid_argument);
}

TEST(IntegrateCorrection, ExactCancellationForMatchingDynamics) {
    ModelSpec gbm;
    gbm.kind = Dynamics::Gbm;
    gbm.x0 = {100.0};
    gbm.sigma = {0.2};
    ModelSpec abm = gbm;
    abm.kind = Dynamics::Abm;
    abm.sigma = {20.0};
    const auto rule = gauss_legendre(24);
    const auto grid = build_grid(1.0, 1.0 / 128, &rule, {});
    for (const auto& [model, b, s] : {std::tuple{gbm, 1, 0.2}, std::tuple{abm, 0, 20.0}}) {
        const auto sm = SimplifiedModel::create(b, {s}, {});
        const auto psi = make_psi(vanilla(105), sm, 0.0);
        const PathSimulator sim(model, grid, 200, 5);
        const auto sample = integrate_correction(sim, vanilla(105), *psi, IntegrationMethod::legendre(24));
        for (double j : sample.J) ASSERT_EQ(j, 0.0);
        for (double m : sample.node_mean) ASSERT_EQ(m, 0.0);
        const double psi0 = initial_psi(*psi, vanilla(105), model.initial_forward(1.0));
        const auto est = estimate_price(psi0, sample);
        EXPECT_EQ(est.estimate, psi0);
        EXPECT_EQ(est.std_error, 0.0);
        EXPECT_EQ(est.n, 200u);
    }
}

TEST(IntegrateCorrection, MultipleMethodsShareOnePass) {
    ModelSpec m;
    m.kind = Dynamics::Heston;
    m.x0 = {100.0};
    m.heston = HestonParams{{0.01}, 5.0, {}, 0.3, -0.1, 0.05};
    const auto rule = gauss_legendre(8);
    const auto grid = build_grid(1.0, 1.0 / 256, &rule, {});
    const auto sm = SimplifiedModel::create(1, {0.1}, {});
    const auto psi = make_psi(vanilla(105), sm, 0.0);
    const PathSimulator sim(m, grid, 300, 9);
    const std::vector<IntegrationMethod> methods{IntegrationMethod::legendre(8), IntegrationMethod::riemann(1.0 / 256)};
    const auto both = integrate_correction(sim, vanilla(105), *psi, methods);
    ASSERT_EQ(both.size(), 2u);
    const auto alone = integrate_correction(sim, vanilla(105), *psi, methods[0]);
    EXPECT_EQ(both[0].J, alone.J);
    EXPECT_EQ(both[0].Z, alone.Z);
    EXPECT_EQ(both[0].node_mean, alone.node_mean);
    for (std::size_t n = 0; n < 300; ++n) EXPECT_EQ(both[0].Z[n], payoff(vanilla(105), sim, n));
}

TEST(EstimatePrice, TrivialAndDegenerateSamples) {
    CorrectionSample s;
    s.J = {0.0, 0.0, 0.0, 0.0};
    const auto e = estimate_price(4.5, s);
    EXPECT_EQ(e.estimate, 4.5);
    EXPECT_EQ(e.std_error, 0.0);
    s.J = {1.0, 3.0};
    const auto two = estimate_price(0.0, s);
    EXPECT_DOUBLE_EQ(two.estimate, 2.0);
    EXPECT_DOUBLE_EQ(two.std_error, 1.0);
    s.J = {1.0};
    EXPECT_THROW(estimate_price(0.0, s), std::invalid_argument);
    const std::vector<double> z{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(crude_estimate(z).estimate, 2.5);
    EXPECT_NEAR(crude_estimate(z).std_error, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

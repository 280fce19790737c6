#include <gtest/gtest.h>

#include <cmath>

#include "driftmc/greeks.hpp"

using namespace driftmc;

namespace {

PayoffSpec vanilla(double strike) {
    PayoffSpec p;
    p.kind = PayoffKind::Vanilla;
    p.strike = strike;
    p.maturity = 1.0;
    return p;
}

ModelSpec gbm(double sigma) {
    ModelSpec m;
    m.kind = Dynamics::Gbm;
    m.x0 = {100.0};
    m.sigma = {sigma};
    return m;
}

ModelSpec heston() {
    ModelSpec m;
    m.kind = Dynamics::Heston;
    m.x0 = {100.0};
    m.heston = HestonParams{{0.01}, 5.0, {}, 0.3, -0.1, 0.05};
    return m;
}

const QuadratureRule& rule24() {
    static const QuadratureRule r = gauss_legendre(24);
    return r;
}

}  // namespace

TEST(DriftCorrectionGreeks, MatchingDynamicsGiveAnalyticGreeks) {
    const auto grid = build_grid(1.0, 1.0 / 64, &rule24(), {});
    const PathSimulator sim(gbm(0.2), grid, 100, 3);
    const auto psi = make_psi(vanilla(100), SimplifiedModel::create(1, {0.2}, {}), 0.0);
    const auto g = drift_correction_greeks(gbm(0.2), sim, vanilla(100), *psi, IntegrationMethod::legendre(24), 0, true);
    const auto exact = bs_call(100, 100, 0.2, 1);
    EXPECT_NEAR(g.delta, exact.delta, 1e-12);
    EXPECT_EQ(g.stderr_delta, 0.0);
    ASSERT_TRUE(g.gamma.has_value());
    EXPECT_NEAR(*g.gamma, exact.gamma, 1e-12);
    EXPECT_FALSE(g.approximate);
}

TEST(DriftCorrectionGreeks, NearlyLinearPayoffHasUnitDelta) {
    const auto grid = build_grid(1.0, 1.0 / 64, &rule24(), {});
    const PathSimulator sim(gbm(0.3), grid, 200, 4);
    const auto psi = make_psi(vanilla(1e-6), SimplifiedModel::create(1, {0.2}, {}), 0.0);
    const auto g = delta_drift_correction(gbm(0.3), sim, vanilla(1e-6), *psi, IntegrationMethod::legendre(24));
    EXPECT_NEAR(g.delta, 1.0, 1e-8);
}

TEST(DriftCorrectionGreeks, DeepOutOfTheMoneyDeltaVanishes) {
    const auto grid = build_grid(1.0, 1.0 / 64, &rule24(), {});
    const PathSimulator sim(gbm(0.2), grid, 200, 4);
    const auto psi = make_psi(vanilla(1000), SimplifiedModel::create(1, {0.25}, {}), 0.0);
    const auto g = delta_drift_correction(gbm(0.2), sim, vanilla(1000), *psi, IntegrationMethod::legendre(24));
    EXPECT_NEAR(g.delta, 0.0, 1e-10);
}

TEST(DriftCorrectionGreeks, AgreesWithBumpRevalueUnderHeston) {
    const auto grid = build_grid(1.0, 1.0 / 256, &rule24(), {});
    const auto m = heston();
    const PathSimulator sim(m, grid, 3000, 17);
    const auto f0 = m.initial_forward(1.0);
    const double s0 = m.local_diffusion(0, f0[0], m.initial_vol(0));
    const auto psi = make_psi(vanilla(105), SimplifiedModel::create(1, {s0 / f0[0]}, {}), 0.0);
    const auto dc = drift_correction_greeks(m, sim, vanilla(105), *psi, IntegrationMethod::legendre(24), 0, true);
    const auto br = bump_revalue_greeks(m, grid, vanilla(105), 20000, 99, 0.01, 0, true);
    EXPECT_NEAR(dc.delta, br.delta, 4 * std::hypot(dc.stderr_delta, br.stderr_delta));
    EXPECT_NEAR(*dc.gamma, *br.gamma, 4 * std::hypot(*dc.stderr_gamma, *br.stderr_gamma));
    EXPECT_LT(dc.stderr_delta, br.stderr_delta * std::sqrt(20000.0 / 3000.0));
}

TEST(BumpRevalue, GbmDeltaMatchesBlack) {
    const auto grid = build_grid(1.0, 1.0, nullptr, {});
    const auto g = delta_bump_revalue(gbm(0.2), grid, vanilla(100), 100000, 8);
    EXPECT_NEAR(g.delta, bs_call(100, 100, 0.2, 1).delta, 4 * g.stderr_delta + 1e-4);
    EXPECT_EQ(g.method, GreekMethod::BumpRevalue);
}

TEST(Greeks, RejectsUnsupportedCases) {
    ModelSpec abm = gbm(20.0);
    abm.kind = Dynamics::Abm;
    EXPECT_THROW(require_multiplicative(abm, vanilla(100)), std::invalid_argument);
    PayoffSpec barrier = vanilla(100);
    barrier.kind = PayoffKind::Barrier;
    barrier.barrier = 90;
    EXPECT_THROW(require_multiplicative(heston(), barrier), std::invalid_argument);
    EXPECT_FALSE(require_multiplicative(heston(), vanilla(100)));

    ModelSpec sabr;
    sabr.kind = Dynamics::Sabr;
    sabr.x0 = {100.0};
    sabr.sabr = SabrParams{{2.5}, 0.4, 0.5, 0.0};
    EXPECT_TRUE(require_multiplicative(sabr, vanilla(100)));
    sabr.sabr->beta = 1.0;
    sabr.sabr->v0 = {0.25};
    EXPECT_FALSE(require_multiplicative(sabr, vanilla(100)));
}

TEST(Greeks, HighestVolAsset) {
    ModelSpec m;
    m.kind = Dynamics::Gbm;
    m.x0 = {100, 100, 100};
    m.sigma = {0.2, 0.3, 0.3};
    EXPECT_EQ(highest_vol_asset(m), 1u);
}

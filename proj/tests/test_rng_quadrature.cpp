#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "driftmc/normal.hpp"
#include "driftmc/quadrature.hpp"
#include "driftmc/rng.hpp"

using namespace driftmc;

TEST(Philox, KnownAnswers) {
    EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}),
              (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                   {0xffffffffu, 0xffffffffu}),
              (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                   {0xa4093822u, 0x299f31d0u}),
              (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Normal, InverseRoundTrip) {
    for (double p : {1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1 - 1e-9}) {
        EXPECT_NEAR(norm_cdf(norm_inv(p)), p, 1e-14 + 1e-12 * p);
    }
    EXPECT_NEAR(norm_inv(0.975), 1.959963984540054, 1e-13);
    EXPECT_DOUBLE_EQ(norm_inv(0.5), 0.0);
}

TEST(NormalStream, ReproducibleAndIndependentStreams) {
    NormalStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 20; ++i) {
        const double x = a.next();
        EXPECT_EQ(x, b.next());
        differs_c |= x != c.next();
        differs_d |= x != d.next();
    }
    EXPECT_TRUE(differs_c);
    EXPECT_TRUE(differs_d);
}

TEST(NormalStream, Moments) {
    NormalStream s(1, 0);
    const int n = 400000;
    double m1 = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next();
        m1 += z;
        m2 += z * z;
        m4 += z * z * z * z;
    }
    EXPECT_NEAR(m1 / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(GaussLegendre, SmallRules) {
    const auto one = gauss_legendre(1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_DOUBLE_EQ(one.abscissas[0], 0.5);
    EXPECT_DOUBLE_EQ(one.weights[0], 1.0);

    const auto two = gauss_legendre(2);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_NEAR(two.abscissas[0], (3.0 - std::sqrt(3.0)) / 6.0, 1e-15);
    EXPECT_NEAR(two.abscissas[1], (3.0 + std::sqrt(3.0)) / 6.0, 1e-15);
    EXPECT_NEAR(two.weights[0], 0.5, 1e-15);
    EXPECT_NEAR(two.weights[1], 0.5, 1e-15);
    double cube = 0.0;
    for (std::size_t k = 0; k < 2; ++k) cube += two.weights[k] * std::pow(two.abscissas[k], 3);
    EXPECT_NEAR(cube, 0.25, 1e-16);
}

TEST(GaussLegendre, PolynomialExactnessAndWeights) {
    for (std::size_t L : {3u, 8u, 24u, 64u}) {
        const auto q = gauss_legendre(L);
        EXPECT_NEAR(std::accumulate(q.weights.begin(), q.weights.end(), 0.0), 1.0, 1e-14);
        EXPECT_TRUE(std::is_sorted(q.abscissas.begin(), q.abscissas.end()));
        EXPECT_GT(q.abscissas.front(), 0.0);
        EXPECT_LT(q.abscissas.back(), 1.0);
        for (std::size_t p = 0; p <= 2 * L - 1; ++p) {
            double s = 0.0;
            for (std::size_t k = 0; k < L; ++k) s += q.weights[k] * std::pow(q.abscissas[k], static_cast<double>(p));
            EXPECT_NEAR(s, 1.0 / static_cast<double>(p + 1), 1e-12 / static_cast<double>(p + 1)) << "L=" << L << " p=" << p;
        }
    }
}

TEST(GaussLegendre, ScaledSegmentExactness) {
    const auto q = gauss_legendre(24);
    const double a = 0.25, b = 0.5;
    for (int p : {0, 5, 20, 47}) {
        double s = 0.0;
        for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * (b - a) * std::pow(a + q.abscissas[k] * (b - a), p);
        const double exact = (std::pow(b, p + 1) - std::pow(a, p + 1)) / (p + 1);
        EXPECT_NEAR(s, exact, 1e-12 * exact);
    }
}

TEST(GaussHermite, NormalMoments) {
    const auto q = gauss_hermite(20);
    double m0 = 0, m2 = 0, m4 = 0, m6 = 0, odd = 0;
    for (std::size_t k = 0; k < q.points.size(); ++k) {
        const double y = q.points[k], w = q.weights[k];
        m0 += w;
        m2 += w * y * y;
        m4 += w * std::pow(y, 4);
        m6 += w * std::pow(y, 6);
        odd += w * std::pow(y, 5);
    }
    EXPECT_NEAR(m0, 1.0, 1e-13);
    EXPECT_NEAR(m2, 1.0, 1e-12);
    EXPECT_NEAR(m4, 3.0, 1e-11);
    EXPECT_NEAR(m6, 15.0, 1e-10);
    EXPECT_NEAR(odd, 0.0, 1e-10);
}

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <kmpc/errors.hpp>
#include <kmpc/pchip.hpp>

namespace {

using kmpc::Pchip;

TEST(Pchip, ReproducesLinearData) {
    const std::vector<double> t{0.0, 0.3, 1.1, 1.2, 2.0};
    std::vector<double> y;
    for (double v : t) y.push_back(2.0 * v + 1.0);
    const Pchip p(t, y);
    for (double q = -0.5; q <= 2.5; q += 0.01) EXPECT_NEAR(p(q), 2.0 * q + 1.0, 1e-12);
}

TEST(Pchip, KnotQueriesReturnDataExactly) {
    const std::vector<double> t{0.0, 0.013, 0.02, 0.041, 0.05};
    const std::vector<double> y{0.1, -2.0, 3.3, 3.3, 1e-3};
    const Pchip p(t, y);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(p(t[i]), y[i]);
}

TEST(Pchip, FlatSecantForcesZeroSlopeAndNoOvershoot) {
    const std::vector<double> t{0.0, 1.0, 2.0};
    const std::vector<double> y{0.0, 1.0, 1.0};
    const Pchip p(t, y);
    EXPECT_EQ(p.derivative_at_knot(1), 0.0);
    for (double q = 0.0; q <= 2.0; q += 1e-3) EXPECT_LE(p(q), 1.0);
}

// Reference values from an independent PCHIP implementation using the same
// harmonic-mean interior rule and three-point end rule.
TEST(Pchip, MatchesReferenceImplementation) {
    const std::vector<double> t{0.0, 0.7, 1.5, 2.1, 3.4};
    const std::vector<double> y{0.0, 1.0, 0.5, 2.0, 2.2};
    const Pchip p(t, y);
    const std::vector<double> q{0.1, 0.35, 0.9, 1.2, 1.8, 2.5, 3.3};
    const std::vector<double> expected{0.23075801749271138, 0.7088541666666667,
                                       0.9218749999999999,  0.658203125,
                                       1.2256132344552195,  2.1074902482018603,
                                       2.198940576801691};
    for (std::size_t i = 0; i < q.size(); ++i) EXPECT_NEAR(p(q[i]), expected[i], 1e-14);
    const std::vector<double> slopes{2.3869047619047623, 0.0, 0.0, 0.3251568739304052, 0.0};
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_NEAR(p.derivative_at_knot(i), slopes[i], 1e-14);
    }
}

TEST(Pchip, TwoKnotsIsLinear) {
    const std::vector<double> t{1.0, 3.0};
    const std::vector<double> y{2.0, -2.0};
    const Pchip p(t, y);
    EXPECT_DOUBLE_EQ(p(2.0), 0.0);
    EXPECT_DOUBLE_EQ(p(4.0), -4.0);
}

TEST(Pchip, IntervalCoefficientsMatchEvaluation) {
    const std::vector<double> t{0.0, 0.5, 1.25, 2.0};
    const std::vector<double> y{1.0, 0.2, 0.9, 3.0};
    const Pchip p(t, y);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        const auto c = p.interval(i);
        const double s = 0.37 * (t[i + 1] - t[i]);
        EXPECT_NEAR(c.c0 + c.c1 * s + c.c2 * s * s + c.c3 * s * s * s, p(t[i] + s), 1e-14);
        EXPECT_DOUBLE_EQ(c.c1, p.derivative_at_knot(i));
    }
}

TEST(Pchip, RejectsBadInput) {
    const std::vector<double> one{0.0};
    EXPECT_THROW(Pchip(one, one), kmpc::InputError);
    const std::vector<double> t{0.0, 1.0, 1.0};
    const std::vector<double> y{0.0, 1.0, 2.0};
    EXPECT_THROW(Pchip(t, y), kmpc::InputError);
    const std::vector<double> t2{0.0, 1.0};
    EXPECT_THROW(Pchip(t2, y), kmpc::InputError);
}

TEST(PchipProperty, MonotoneDataGivesMonotoneInterpolant) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> step(0.01, 1.0);
    std::uniform_real_distribution<double> rise(0.0, 2.0);
    std::bernoulli_distribution flat(0.2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + static_cast<std::size_t>(trial % 10);
        std::vector<double> t{0.0}, y{0.0};
        const double sgn = trial % 2 == 0 ? 1.0 : -1.0;
        for (std::size_t i = 1; i < n; ++i) {
            t.push_back(t.back() + step(rng));
            y.push_back(y.back() + (flat(rng) ? 0.0 : sgn * rise(rng)));
        }
        const Pchip p(t, y);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            double prev = p(t[i]);
            for (int k = 1; k <= 100; ++k) {
                const double v = p(t[i] + (t[i + 1] - t[i]) * k / 101.0);
                EXPECT_GE(sgn * (v - prev), -1e-12) << "trial " << trial << " interval " << i;
                prev = v;
            }
            const double lo = std::min(y[i], y[i + 1]), hi = std::max(y[i], y[i + 1]);
            EXPECT_GE(p(0.5 * (t[i] + t[i + 1])), lo - 1e-12);
            EXPECT_LE(p(0.5 * (t[i] + t[i + 1])), hi + 1e-12);
        }
    }
}

TEST(PchipProperty, KnotExactnessOnRandomData) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0.0, 5.0);
    std::uniform_real_distribution<double> step(1e-3, 0.2);
    std::vector<double> t{0.0}, y{n(rng)};
    for (int i = 0; i < 300; ++i) {
        t.push_back(t.back() + step(rng));
        y.push_back(n(rng));
    }
    const Pchip p(t, y);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(p(t[i]), y[i]);
}

}  // namespace

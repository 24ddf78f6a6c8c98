#include "stepahead/numerics.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include <gtest/gtest.h>

#include "stepahead/errors.hpp"
#include "stepahead/rng.hpp"

namespace stepahead {
namespace {

using numerics::elementwise_adam_direction;
using numerics::elementwise_combine;
using numerics::restore;
using numerics::snapshot;

TEST(ElementwiseCombine, IdentityScales) {
    EXPECT_EQ(elementwise_combine({1, 2}, {3, 4}, 1.0, 0.0),
              (ParamVector{1, 2}));
}

TEST(ElementwiseCombine, HandArithmetic) {
    // 0.9*1 + 0.1*3 = 1.2, 0.9*2 + 0.1*4 = 2.2
    const ParamVector out = elementwise_combine({1, 2}, {3, 4}, 0.9, 0.1);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_NEAR(out[0], 1.2, 1e-15);
    EXPECT_NEAR(out[1], 2.2, 1e-15);
}

TEST(ElementwiseCombine, ZeroInputs) {
    EXPECT_EQ(elementwise_combine({0, 0}, {0, 0}, 123.0, -7.5),
              (ParamVector{0, 0}));
}

TEST(ElementwiseCombine, LengthMismatchThrows) {
    EXPECT_THROW(elementwise_combine({1}, {1, 2}, 1.0, 1.0), DimensionError);
}

TEST(ElementwiseCombine, NonFiniteScaleThrows) {
    EXPECT_THROW(elementwise_combine({1}, {1},
                                     std::numeric_limits<double>::infinity(),
                                     0.0),
                 NumericError);
}

TEST(ElementwiseCombine, OverflowingResultThrows) {
    const double huge = std::numeric_limits<double>::max();
    EXPECT_THROW(elementwise_combine({huge}, {huge}, 1.0, 1.0), NumericError);
}

TEST(AdamDirection, HandArithmetic) {
    // 1 / (sqrt(1) + 1e-8)
    const ParamVector out = elementwise_adam_direction({1}, {1}, 1e-8);
    EXPECT_NEAR(out[0], 0.9999999900000001, 1e-15);
}

TEST(AdamDirection, ZeroNumerator) {
    EXPECT_EQ(elementwise_adam_direction({0, 0}, {5, 7}, 1e-8),
              (ParamVector{0, 0}));
}

TEST(AdamDirection, TwoOverTwo) {
    // 2 / (sqrt(4) + 1e-8) = 2 / 2.00000001
    const ParamVector out = elementwise_adam_direction({2}, {4}, 1e-8);
    EXPECT_NEAR(out[0], 2.0 / (2.0 + 1e-8), 1e-15);
}

TEST(AdamDirection, NegativeSecondMomentThrows) {
    EXPECT_THROW(elementwise_adam_direction({1}, {-1e-12}, 1e-8),
                 InvariantError);
}

TEST(AdamDirection, NonPositiveEpsThrows) {
    EXPECT_THROW(elementwise_adam_direction({1}, {1}, 0.0), PreconditionError);
}

TEST(AdamDirection, MagnitudeBoundedByEps) {
    // |out_i| <= max|m_hat| / eps for arbitrary non-negative v_hat
    SplitMix64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const double eps = rng.next_uniform(1e-10, 1e-2);
        ParamVector m(8), v(8);
        double max_m = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = rng.next_uniform(-10, 10);
            v[i] = rng.next_uniform(0, 5);
            max_m = std::max(max_m, std::abs(m[i]));
        }
        for (double d : elementwise_adam_direction(m, v, eps)) {
            EXPECT_LE(std::abs(d), max_m / eps * (1 + 1e-12));
        }
    }
}

TEST(Snapshot, IndependentCopy) {
    ParamVector p{1, 2, 3};
    ParamVector copy = snapshot(p);
    copy[0] = 99;
    EXPECT_EQ(p, (ParamVector{1, 2, 3}));
    p[1] = -5;
    EXPECT_EQ(copy[1], 2);
}

TEST(Snapshot, EmptyAndIdempotent) {
    EXPECT_EQ(snapshot(ParamVector{}), ParamVector{});
    const ParamVector p{0.1, -0.25, 7};
    EXPECT_EQ(snapshot(snapshot(p)), p);
}

TEST(Restore, Definition) {
    ParamVector target{9, 9};
    restore(target, {1, 2});
    EXPECT_EQ(target, (ParamVector{1, 2}));
}

TEST(Restore, RoundTripIsBitwise) {
    SplitMix64 rng(3);
    ParamVector p(16);
    for (double& x : p) x = rng.next_uniform(-1e6, 1e6);
    const ParamVector saved = snapshot(p);
    for (double& x : p) x += rng.next_uniform(-1, 1);
    restore(p, saved);
    EXPECT_EQ(numerics::max_abs_diff(p, saved), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(std::memcmp(&p[i], &saved[i], sizeof(double)), 0);
    }
}

TEST(Restore, LengthMismatchThrows) {
    ParamVector target{1};
    EXPECT_THROW(restore(target, {1, 2}), DimensionError);
}

TEST(Determinism, SameInputsSameBits) {
    SplitMix64 rng(11);
    ParamVector a(32), b(32);
    for (double& x : a) x = rng.next_uniform(-3, 3);
    for (double& x : b) x = rng.next_uniform(-3, 3);
    EXPECT_EQ(elementwise_combine(a, b, 0.125, -2.5),
              elementwise_combine(a, b, 0.125, -2.5));
    ParamVector v(32);
    for (double& x : v) x = rng.next_uniform(0, 4);
    EXPECT_EQ(elementwise_adam_direction(a, v, 1e-8),
              elementwise_adam_direction(a, v, 1e-8));
}

} // namespace
} // namespace stepahead

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dglab/degiorgi.hpp"

using namespace dglab;

TEST(LevelAt, Oracles) {
    EXPECT_DOUBLE_EQ(level_at(LevelSchedule(1.0), 0), 0.5);
    EXPECT_GT(level_at(LevelSchedule(2.0), 20), 2.0 - 1e-5);
    EXPECT_LT(level_at(LevelSchedule(2.0), 20), 2.0);
    EXPECT_DOUBLE_EQ(level_at(LevelSchedule(1.5), 2), 1.3125);
    EXPECT_THROW(LevelSchedule(0.5), InvalidArgument);
    EXPECT_THROW(level_at(LevelSchedule(1.0), -1), InvalidArgument);
}

TEST(RadiiAt, Oracles) {
    const auto r0 = radii_at(RadiusSchedule(0.999999), 0);
    EXPECT_NEAR(r0.rho, 0.999999, 1e-15);
    EXPECT_NEAR(r0.rho_bar, 0.875 * 0.999999, 1e-15);
    const auto r1 = radii_at(RadiusSchedule(0.5), 1);
    EXPECT_DOUBLE_EQ(r1.rho, 0.375);
    EXPECT_DOUBLE_EQ(r1.rho_bar, 0.34375);
    for (double R : {0.1, 0.5, 0.9}) {
        const auto far = radii_at(RadiusSchedule(R), 60);
        EXPECT_NEAR(far.rho, R / 2, 1e-15);
        EXPECT_NEAR(far.rho_bar, R / 2, 1e-15);
    }
    EXPECT_THROW(RadiusSchedule(1.0), InvalidArgument);
    EXPECT_THROW(RadiusSchedule(0.0), InvalidArgument);
}

TEST(Schedules, MonotoneAndInterleaved) {
    for (double d : {1.0, 1.5, 4.0, 1024.0}) {
        const LevelSchedule s(d);
        for (int h = 0; h < 40; ++h) EXPECT_LT(level_at(s, h), level_at(s, h + 1));
    }
    for (double R : {0.05, 0.3, 0.75}) {
        const RadiusSchedule s(R);
        for (int h = 0; h < 40; ++h) {
            const auto a = radii_at(s, h);
            const auto b = radii_at(s, h + 1);
            EXPECT_GT(a.rho, b.rho);
            EXPECT_GT(a.rho_bar, b.rho_bar);
            EXPECT_LT(b.rho, a.rho_bar);
            EXPECT_LT(a.rho_bar, a.rho);
            EXPECT_DOUBLE_EQ(a.rho_bar, 0.5 * (a.rho + b.rho));
        }
    }
}

TEST(CaccioppoliConstant, Oracles) {
    EXPECT_DOUBLE_EQ(caccioppoli_constant(1, 2, 2, 1), 4096.0);
    EXPECT_DOUBLE_EQ(caccioppoli_constant(27, 3, 2, 1), 15116544.0);
    EXPECT_EQ(caccioppoli_constant(0, 3, 2, 1), 0.0);
    EXPECT_THROW(caccioppoli_constant(1, 3, 2, 0), InvalidArgument);
    EXPECT_THROW(caccioppoli_constant(1, 3, 2, -1), InvalidArgument);
}

TEST(CaccioppoliConstant, Homogeneity) {
    const double base = caccioppoli_constant(1.7, 3, 2, 0.9);
    for (double t : {0.5, 2.0, 3.0, 10.0}) {
        EXPECT_NEAR(caccioppoli_constant(1.7 * t, 3, 2, 0.9) / base, t * t, 1e-12 * t * t);
        EXPECT_NEAR(caccioppoli_constant(1.7, 3, 2, 0.9 * t) / base, 1.0 / (t * t), 1e-12);
    }
}

TEST(RecursionThreshold, Oracles) {
    EXPECT_DOUBLE_EQ(recursion_threshold({1, 2, 1}), 0.5);
    EXPECT_DOUBLE_EQ(recursion_threshold({1, 4, 1}), 0.25);
    EXPECT_DOUBLE_EQ(recursion_threshold({2, 2, 0.5}), 1.0 / 64.0);
    EXPECT_THROW(recursion_threshold({0, 2, 1}), InvalidArgument);
    EXPECT_THROW(recursion_threshold({1, 1, 1}), InvalidArgument);
    EXPECT_THROW(recursion_threshold({1, 2, 0}), InvalidArgument);
}

TEST(SimulateRecursion, ClosedFormAtThreshold) {
    const auto tr = simulate_recursion({1, 2, 1}, 0.5, 40);
    ASSERT_EQ(tr.J.size(), 41u);
    EXPECT_FALSE(tr.diverged_at);
    for (int h = 0; h <= 40; ++h) {
        const double exact = std::ldexp(1.0, -(h + 1));
        EXPECT_LE(std::abs(tr.J[h] - exact), 1e-12 * exact) << h;
    }
}

TEST(SimulateRecursion, TwoStepBlowup) {
    const auto tr = simulate_recursion({1, 2, 1}, 2.0, 50);
    ASSERT_GE(tr.J.size(), 3u);
    EXPECT_DOUBLE_EQ(tr.J[1], 4.0);
    EXPECT_DOUBLE_EQ(tr.J[2], 32.0);
    ASSERT_TRUE(tr.diverged_at);
    EXPECT_LT(*tr.diverged_at, 50);
}

TEST(SimulateRecursion, ZeroStaysZero) {
    const auto tr = simulate_recursion({3, 5, 0.7}, 0.0, 30);
    for (double j : tr.J) EXPECT_EQ(j, 0.0);
    EXPECT_FALSE(tr.diverged_at);
}

TEST(SimulateRecursion, ThresholdSeparatesConvergenceFromDivergence) {
    const RecursionParams p{1, 2, 1};
    const double th = recursion_threshold(p);
    const auto at = simulate_recursion(p, th, 200);
    EXPECT_FALSE(at.diverged_at);
    EXPECT_LT(at.J.back(), 1e-50);
    const auto above = simulate_recursion(p, th * (1.0 + 1e-6), 200);
    ASSERT_TRUE(above.diverged_at);
    EXPECT_LE(*above.diverged_at, 200);
}

TEST(SimulateRecursion, BelowThresholdDecaysFast) {
    for (const RecursionParams& p : {RecursionParams{1, 2, 1}, RecursionParams{2, 3, 0.5}, RecursionParams{0.5, 1.5, 2}}) {
        const double th = recursion_threshold(p);
        for (double f : {0.1, 0.5, 0.999}) {
            const auto tr = simulate_recursion(p, f * th, 60);
            EXPECT_FALSE(tr.diverged_at);
            for (std::size_t h = 1; h < tr.J.size(); ++h) EXPECT_LE(tr.J[h], tr.J[h - 1]);
        }
    }
    for (int steps : {20, 30, 40}) {
        const double j0 = 0.5;
        const auto tr = simulate_recursion({1, 2, 1}, j0, steps);
        EXPECT_LT(tr.J.back(), j0 * std::pow(2.0, -steps / 2.0));
    }
}

TEST(SimulateRecursion, RejectsBadInput) {
    EXPECT_THROW(simulate_recursion({1, 2, 1}, -1.0, 5), InvalidArgument);
    EXPECT_THROW(simulate_recursion({1, 2, 1}, 0.1, 0), InvalidArgument);
}

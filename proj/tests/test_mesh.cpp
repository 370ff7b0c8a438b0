#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dglab/mesh.hpp"
#include "dglab/quadrature.hpp"

using namespace dglab;

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

// Integral of x^a y^b (z^c) over the reference simplex divided by its volume.
double monomial_mean(int n, int a, int b, int c) {
    if (n == 2) return 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
    return 6.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
}

DiscreteField random_field(const MeshPtr& m, int N, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-2.0, 3.0);
    std::vector<double> v(m->vertex_count() * N);
    for (auto& x : v) x = U(rng);
    return DiscreteField(m, N, v);
}

}  // namespace

TEST(Quadrature, WeightsArePositiveAndSumToOne) {
    for (int n : {2, 3}) {
        const auto q = simplex_quadrature(n);
        EXPECT_EQ(q.size(), n == 2 ? 9u : 36u);
        double total = 0.0;
        for (const auto& p : q) {
            EXPECT_GT(p.weight, 0.0);
            double bsum = 0.0;
            for (int k = 0; k <= n; ++k) {
                EXPECT_GE(p.bary[k], 0.0);
                bsum += p.bary[k];
            }
            EXPECT_NEAR(bsum, 1.0, 1e-15);
            total += p.weight;
        }
        EXPECT_NEAR(total, 1.0, 1e-14);
    }
}

TEST(Quadrature, ExactForMonomialsUpToDegreeFour) {
    for (int n : {2, 3}) {
        const auto q = simplex_quadrature(n);
        for (int a = 0; a <= 4; ++a)
            for (int b = 0; a + b <= 4; ++b)
                for (int c = 0; a + b + c <= 4; ++c) {
                    if (n == 2 && c > 0) continue;
                    double s = 0.0;
                    for (const auto& p : q)
                        s += p.weight * std::pow(p.bary[1], a) * std::pow(p.bary[2], b) *
                             (n == 3 ? std::pow(p.bary[3], c) : 1.0);
                    EXPECT_NEAR(s, monomial_mean(n, a, b, c), 1e-14) << n << ":" << a << b << c;
                }
    }
}

TEST(BuildBoxMesh, CountsAndVolumes) {
    const auto sq = build_unit_mesh(2, 1);
    EXPECT_EQ(sq->simplex_count(), 2u);
    const auto cube = build_unit_mesh(3, 1);
    EXPECT_EQ(cube->simplex_count(), 6u);
    const auto big = build_box_mesh(2, {0, 0}, {2, 2}, 4);
    EXPECT_EQ(big->simplex_count(), 32u);
    EXPECT_EQ(big->vertex_count(), 25u);

    for (const auto& m : {sq, cube, big, build_box_mesh(3, {-1, 0, 2}, {1, 0.5, 3}, 5)}) {
        double total = 0.0;
        for (std::size_t s = 0; s < m->simplex_count(); ++s) {
            EXPECT_GT(m->volume(s), 0.0);
            total += m->volume(s);
        }
        EXPECT_NEAR(total / m->box_volume(), 1.0, 1e-10);
        EXPECT_NEAR(integrate(*m, [](const QuadratureSite&) { return 1.0; }) / m->box_volume(), 1.0, 1e-10);
    }
    EXPECT_NEAR(integrate(*big, [](const QuadratureSite&) { return 1.0; }), 4.0, 1e-12);
}

TEST(BuildBoxMesh, BoundaryFlagsLieOnBoundary) {
    const auto m = build_box_mesh(3, {0, -1, 0}, {1, 1, 2}, 4);
    std::size_t flagged = 0;
    for (std::size_t v = 0; v < m->vertex_count(); ++v) {
        const auto x = m->vertex(v);
        bool on = false;
        for (int d = 0; d < 3; ++d) on = on || x[d] == m->lower()[d] || x[d] == m->upper()[d];
        EXPECT_EQ(on, m->on_boundary(v));
        flagged += m->on_boundary(v);
    }
    EXPECT_EQ(flagged, 125u - 27u);
}

TEST(BuildBoxMesh, RejectsDegenerateBox) {
    EXPECT_THROW(build_box_mesh(2, {0, 0}, {1, 0}, 3), InvalidArgument);
    EXPECT_THROW(build_box_mesh(4, {0, 0, 0, 0}, {1, 1, 1, 1}, 2), InvalidArgument);
}

TEST(Integrate, Oracles) {
    const auto m = build_unit_mesh(2, 16);
    EXPECT_NEAR(integrate(*m, [](const QuadratureSite& q) { return q.x[0]; }), 0.5, 1e-14);
    const double disc = integrate(*m, [](const QuadratureSite&) { return 1.0; }, Ball({0.5, 0.5}, 0.25));
    EXPECT_NEAR(disc / (std::numbers::pi / 16.0), 1.0, 0.02);
    const auto coarse = build_unit_mesh(2, 2);
    EXPECT_NEAR(integrate(*coarse, [](const QuadratureSite& q) { return q.x[0] * q.x[0] * q.x[1] * q.x[1]; }), 1.0 / 9.0,
                1e-14);
}

TEST(GradientOnSimplex, ExactForAffineFields) {
    for (int n : {2, 3}) {
        const auto m = build_box_mesh(n, std::vector<double>(n, -0.3), std::vector<double>(n, 1.7), 3);
        const auto u = DiscreteField::interpolate(m, 2, [&](std::span<const double> x, std::span<double> out) {
            out[0] = x[0];
            out[1] = 3.0 * x[0] + 2.0 * x[1] - 5.0 + (n == 3 ? -x[2] : 0.0);
        });
        for (std::size_t s = 0; s < m->simplex_count(); ++s) {
            const auto g0 = gradient_on_simplex(u, s, 0);
            const auto g1 = gradient_on_simplex(u, s, 1);
            EXPECT_NEAR(g0[0], 1.0, 1e-12);
            EXPECT_NEAR(g0[1], 0.0, 1e-12);
            EXPECT_NEAR(g1[0], 3.0, 1e-12);
            EXPECT_NEAR(g1[1], 2.0, 1e-12);
            if (n == 3) EXPECT_NEAR(g1[2], -1.0, 1e-12);
        }
    }
    const auto m = build_unit_mesh(2, 2);
    DiscreteField c(m, 1, std::vector<double>(m->vertex_count(), 4.25));
    for (std::size_t s = 0; s < m->simplex_count(); ++s)
        for (double g : gradient_on_simplex(c, s, 0)) EXPECT_EQ(g, 0.0);
}

TEST(SuperlevelMeasure, Oracles) {
    const auto m = build_unit_mesh(2, 8);
    DiscreteField zero(m, 1);
    EXPECT_EQ(superlevel_measure(zero, 0, 1.0, std::nullopt), 0.0);

    DiscreteField two(m, 1, std::vector<double>(m->vertex_count(), 2.0));
    const Ball b({0.5, 0.5}, 0.3);
    const double area = integrate(*m, [](const QuadratureSite&) { return 1.0; }, b);
    EXPECT_DOUBLE_EQ(superlevel_measure(two, 0, 1.0, b), area);

    const auto lin = DiscreteField::interpolate(m, 1, [](std::span<const double> x, std::span<double> o) { o[0] = x[0]; });
    EXPECT_NEAR(superlevel_measure(lin, 0, 0.5, std::nullopt), 0.5, 1e-12);
}

TEST(Excess, Oracles) {
    const auto m = build_unit_mesh(2, 8);
    const double k = 0.75;
    DiscreteField at_k(m, 2, std::vector<double>(m->vertex_count() * 2, k));
    EXPECT_EQ(excess(at_k, k, std::nullopt, 2.0), 0.0);

    DiscreteField above(m, 2, std::vector<double>(m->vertex_count() * 2, k + 1.0));
    const Ball b({0.4, 0.6}, 0.25);
    const double area = integrate(*m, [](const QuadratureSite&) { return 1.0; }, b);
    EXPECT_NEAR(excess(above, k, b, 2.0), 2.0 * area, 1e-14);

    const auto lin = DiscreteField::interpolate(m, 1, [](std::span<const double> x, std::span<double> o) { o[0] = x[0]; });
    EXPECT_NEAR(excess(lin, 0.0, std::nullopt, 2.0), 1.0 / 3.0, 1e-14);
}

TEST(SobolevSeminorm, Oracles) {
    const auto m = build_unit_mesh(2, 4);
    DiscreteField c(m, 2, std::vector<double>(m->vertex_count() * 2, -3.0));
    EXPECT_EQ(sobolev_seminorm(c, std::nullopt, 2.0), 0.0);
    const auto x1 = DiscreteField::interpolate(m, 1, [](std::span<const double> x, std::span<double> o) { o[0] = x[0]; });
    EXPECT_NEAR(sobolev_seminorm(x1, std::nullopt, 2.0), 1.0, 1e-13);
    const auto s = DiscreteField::interpolate(m, 2, [](std::span<const double> x, std::span<double> o) {
        o[0] = x[0] + x[1];
        o[1] = 0.0;
    });
    EXPECT_NEAR(sobolev_seminorm(s, std::nullopt, 2.0), std::sqrt(2.0), 1e-13);
}

TEST(SobolevConjugate, Rule) {
    EXPECT_DOUBLE_EQ(sobolev_conjugate(3, 2.0), 6.0);
    EXPECT_DOUBLE_EQ(sobolev_conjugate(2, 2.0), 4.0);
    EXPECT_DOUBLE_EQ(sobolev_conjugate(2, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(sobolev_conjugate(3, 4.0), 8.0);
}

TEST(ExcessProperties, NonIncreasingInLevel) {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = trial % 2 ? 3 : 2;
        const auto m = build_unit_mesh(n, n == 2 ? 6 : 3);
        const auto u = random_field(m, 2, rng);
        std::uniform_real_distribution<double> K(-2.5, 3.5);
        std::vector<double> ks(8);
        for (auto& k : ks) k = K(rng);
        std::sort(ks.begin(), ks.end());
        const Ball b(std::vector<double>(n, 0.5), 0.45);
        double prev = std::numeric_limits<double>::infinity();
        double prev_meas = std::numeric_limits<double>::infinity();
        for (double k : ks) {
            const double e = excess(u, k, b, 2.0);
            EXPECT_LE(e, prev);
            prev = e;
            const double meas = superlevel_measure(u, 0, k, b);
            EXPECT_LE(meas, prev_meas);
            prev_meas = meas;
        }
    }
}

TEST(ExcessProperties, ZeroExactlyWhenSuperlevelSetsEmpty) {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> K(-2.0, 3.5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = build_unit_mesh(2, 5);
        const auto u = random_field(m, 2, rng);
        const double k = trial < 10 ? std::max(u.max_component(0), u.max_component(1)) : K(rng);
        const Ball b({0.5, 0.5}, 0.4);
        const double e = excess(u, k, b, 2.0);
        const bool empty = superlevel_measure(u, 0, k, b) == 0.0 && superlevel_measure(u, 1, k, b) == 0.0;
        EXPECT_EQ(e <= 1e-12, empty) << "trial " << trial;
        if (trial < 10) EXPECT_EQ(e, 0.0);
    }
}

TEST(ExcessProperties, SuperlevelMeasureGrowsWithRadius) {
    std::mt19937_64 rng(303);
    const auto m = build_unit_mesh(3, 4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto u = random_field(m, 1, rng);
        double prev = 0.0;
        for (double r : {0.1, 0.2, 0.3, 0.4, 0.5}) {
            const double meas = superlevel_measure(u, 0, 0.5, Ball({0.5, 0.5, 0.5}, r));
            EXPECT_GE(meas, prev);
            prev = meas;
        }
    }
}

TEST(DiscreteFieldTest, RejectsBadValues) {
    const auto m = build_unit_mesh(2, 2);
    EXPECT_THROW(DiscreteField(m, 1, std::vector<double>(3, 0.0)), InvalidArgument);
    std::vector<double> v(m->vertex_count(), 0.0);
    v[2] = std::nan("");
    EXPECT_THROW(DiscreteField(m, 1, v), InvalidArgument);
}

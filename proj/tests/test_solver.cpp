#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dglab/solver.hpp"
#include "dglab/tensor_io.hpp"
#include "mms_problem.hpp"

using namespace dglab;

namespace {

double max_abs_diff(const DiscreteField& a, const DiscreteField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

double interior_sup(const DiscreteField& u) {
    double m = 0.0;
    for (std::size_t v = 0; v < u.mesh().vertex_count(); ++v)
        if (!u.mesh().on_boundary(v))
            for (int a = 0; a < u.N(); ++a) m = std::max(m, std::abs(u.at(v, a)));
    return m;
}

CoefficientTensor single_entry(int n, int i, int j) {
    std::vector<double> e(static_cast<std::size_t>(n) * n, 0.0);
    e[i * n + j] = 1.0;
    return constant_tensor(n, 1, e);
}

}  // namespace

TEST(Assemble, ScalarIdentityAnnihilatesConstants) {
    const auto m = build_unit_mesh(3, 4);
    DiscreteField frozen(m, 1);
    const auto k = assemble_stiffness(identity_tensor(3, 1), frozen);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k.cols());
    const Eigen::VectorXd rs = k * ones;
    for (std::size_t v = 0; v < m->vertex_count(); ++v)
        if (!m->on_boundary(v)) EXPECT_NEAR(rs[static_cast<Eigen::Index>(v)], 0.0, 1e-12);
    for (std::size_t v = 0; v < m->vertex_count(); ++v) EXPECT_NEAR(rs[static_cast<Eigen::Index>(v)], 0.0, 1e-12);
}

TEST(Assemble, BlockDiagonalTensorDecouples) {
    const auto m = build_unit_mesh(2, 4);
    DiscreteField frozen(m, 2);
    const auto k = assemble_stiffness(diagonal_tensor(2, {{2, 0.5, 0, 1}, {1, 0, 0, 4}}), frozen);
    for (Eigen::Index r = 0; r < k.outerSize(); ++r)
        for (SparseMatrix::InnerIterator it(k, r); it; ++it)
            if (it.row() % 2 != it.col() % 2) EXPECT_EQ(it.value(), 0.0);
}

TEST(Assemble, ExampleCouplingBlocksAtOrigin) {
    // At y = (0,0) the coupling blocks are 2 x (d1 d1 stiffness) and -10 x (d1 d2 stiffness).
    const auto m = build_unit_mesh(3, 3);
    DiscreteField frozen(m, 2);
    const auto k = assemble_stiffness(build_example_tensor(), frozen);
    DiscreteField scalar(m, 1);
    const Eigen::MatrixXd k11 = Eigen::MatrixXd(assemble_stiffness(single_entry(3, 0, 0), scalar));
    const Eigen::MatrixXd k12 = Eigen::MatrixXd(assemble_stiffness(single_entry(3, 0, 1), scalar));
    const Eigen::MatrixXd dense = Eigen::MatrixXd(k);
    const auto nv = static_cast<Eigen::Index>(m->vertex_count());
    double max_b = 0.0, max_w = 0.0;
    for (Eigen::Index v = 0; v < nv; ++v)
        for (Eigen::Index w = 0; w < nv; ++w) {
            EXPECT_NEAR(dense(2 * v, 2 * w + 1), 2.0 * k11(v, w), 1e-12);
            EXPECT_NEAR(dense(2 * v + 1, 2 * w), -10.0 * k12(v, w), 1e-12);
            max_b = std::max(max_b, std::abs(dense(2 * v, 2 * w + 1)));
            max_w = std::max(max_w, std::abs(dense(2 * v + 1, 2 * w)));
        }
    EXPECT_GT(max_b, 0.1);
    EXPECT_GT(max_w, 0.1);
    EXPECT_GT((dense - dense.transpose()).cwiseAbs().maxCoeff(), 0.1);
}

TEST(LinearSolve, Oracles) {
    SparseMatrix id(5, 5);
    id.setIdentity();
    Vector b(5);
    b << 1, -2, 3, 0.5, 7;
    EXPECT_LE((linear_solve(id, b).x - b).norm(), 1e-14);

    SparseMatrix a(2, 2);
    a.insert(0, 0) = 2;
    a.insert(0, 1) = 1;
    a.insert(1, 1) = 1;
    Vector r(2);
    r << 3, 1;
    const auto x = linear_solve(a, r).x;
    EXPECT_NEAR(x[0], 1.0, 1e-12);
    EXPECT_NEAR(x[1], 1.0, 1e-12);
}

TEST(LinearSolve, MatchesDenseFactorization) {
    const auto mesh = build_unit_mesh(3, 5);
    const auto g = boundary_preset("bounded_sine", 3, 2, 1.0);
    const auto lift = boundary_lift(mesh, g);
    const auto sys = assemble(build_example_tensor(), lift, {.source = mms::source});
    const auto sol = linear_solve(sys.op, sys.load);
    EXPECT_LE((sys.load - sys.op * sol.x).norm(), 1e-10 * sys.load.norm());
    const Eigen::MatrixXd dense = Eigen::MatrixXd(sys.op);
    const Eigen::VectorXd ref = dense.fullPivLu().solve(sys.load);
    EXPECT_LE((sol.x - ref).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(LinearSolve, ReportsFailureWithHistory) {
    SparseMatrix z(3, 3);
    z.insert(0, 0) = 1.0;
    Vector b = Vector::Ones(3);
    try {
        (void)linear_solve(z, b);
        FAIL() << "expected LinearSolveError";
    } catch (const LinearSolveError& e) {
        SUCCEED() << e.what();
    }
}

TEST(PicardSolve, ScalarIdentityReproducesAffineDataInOneStep) {
    const auto mesh = build_unit_mesh(3, 6);
    DirichletData g{1, [](std::span<const double> x, std::span<double> o) { o[0] = x[0]; }, "x1"};
    const auto r = picard_solve(identity_tensor(3, 1), mesh, g);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.outer_iters, 1);
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v) EXPECT_NEAR(r.field.at(v, 0), mesh->vertex(v)[0], 1e-10);
    EXPECT_LE(weak_residual(identity_tensor(3, 1), r.field), 1e-12);
}

TEST(PicardSolve, SolutionIndependentTensorNeedsTwoSteps) {
    const auto mesh = build_unit_mesh(3, 6);
    const auto r = picard_solve(tensor_from_name("diagonal"), mesh, boundary_preset("bounded_sine", 3, 2, 2.0));
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.outer_iters, 2);
    EXPECT_GT(r.update_history.front(), 1e-3);
}

TEST(PicardSolve, VectorIdentityReproducesAffineData) {
    const auto mesh = build_unit_mesh(3, 6);
    const auto g = boundary_preset("linear", 3, 2, 1.5);
    const auto r = picard_solve(identity_tensor(3, 2), mesh, g);
    ASSERT_TRUE(r.converged);
    std::vector<double> out(2);
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
        g.g(mesh->vertex(v), out);
        for (int a = 0; a < 2; ++a) EXPECT_NEAR(r.field.at(v, a), out[a], 1e-10);
    }
}

TEST(PicardSolve, BlockDiagonalMatchesScalarSolves) {
    const std::vector<std::vector<double>> blocks{{2, 0, 0, 0, 2, 0, 0, 0, 1}, {27, 0, 0, 0, 1, 0, 0, 0, 1}};
    const auto mesh = build_unit_mesh(3, 6);
    const auto g = boundary_preset("bounded_sine", 3, 2, 1.0);
    const auto coupled = picard_solve(diagonal_tensor(3, blocks), mesh, g);
    ASSERT_TRUE(coupled.converged);
    for (int a = 0; a < 2; ++a) {
        DirichletData ga{1, [&, a](std::span<const double> x, std::span<double> o) {
                             std::vector<double> full(2);
                             g.g(x, full);
                             o[0] = full[a];
                         }};
        const auto single = picard_solve(diagonal_tensor(3, {blocks[a]}), mesh, ga);
        ASSERT_TRUE(single.converged);
        for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
            EXPECT_NEAR(coupled.field.at(v, a), single.field.at(v, 0), 1e-10);
    }
}

TEST(PicardSolve, DiscreteMaximumPrinciple) {
    const auto mesh = build_unit_mesh(3, 7);
    DirichletData g{1, [](std::span<const double> x, std::span<double> o) {
                        o[0] = std::sin(5 * x[0]) * std::cos(3 * x[1]) + x[2] * x[2];
                    }};
    const auto r = picard_solve(identity_tensor(3, 1), mesh, g);
    ASSERT_TRUE(r.converged);
    double lo = 1e300, hi = -1e300;
    std::vector<double> o(1);
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
        if (mesh->on_boundary(v)) {
            g.g(mesh->vertex(v), o);
            lo = std::min(lo, o[0]);
            hi = std::max(hi, o[0]);
        }
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
        EXPECT_GE(r.field.at(v, 0), lo - 1e-10);
        EXPECT_LE(r.field.at(v, 0), hi + 1e-10);
    }
}

TEST(PicardSolve, ExampleTensorSupStableUnderRefinement) {
    const auto t = build_example_tensor();
    const auto g = boundary_preset("bounded_sine", 3, 2, 1.0);
    const auto coarse = picard_solve(t, build_unit_mesh(3, 8), g);
    const auto fine = picard_solve(t, build_unit_mesh(3, 16), g);
    ASSERT_TRUE(coarse.converged);
    ASSERT_TRUE(fine.converged);
    const double s8 = interior_sup(coarse.field);
    const double s16 = interior_sup(fine.field);
    EXPECT_LE(s8, 1.0 + 1e-12);
    EXPECT_LE(s16, 1.0 + 1e-12);
    EXPECT_LE(std::abs(s8 - s16) / s16, 0.05);
    EXPECT_LE(weak_residual(t, coarse.field), 10 * PicardConfig{}.linear_tol);
    EXPECT_LE(weak_residual(t, fine.field), 10 * PicardConfig{}.linear_tol);
}

TEST(PicardSolve, ConvergedFlagImpliesSmallUpdate) {
    PicardConfig cfg;
    cfg.max_outer_iters = 2;
    const auto r = picard_solve(build_example_tensor(), build_unit_mesh(3, 6), boundary_preset("bounded_sine", 3, 2, 3.0), cfg);
    if (r.converged) EXPECT_LE(r.final_update, cfg.outer_tol);
    EXPECT_LE(r.outer_iters, 2);
}

TEST(WeakResidual, DetectsPerturbation) {
    const auto t = build_example_tensor();
    const auto mesh = build_unit_mesh(3, 6);
    auto r = picard_solve(t, mesh, boundary_preset("bounded_sine", 3, 2, 1.0));
    ASSERT_TRUE(r.converged);
    EXPECT_LE(weak_residual(t, r.field), 1e-9);
    std::size_t centre = 0;
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
        if (!mesh->on_boundary(v)) {
            centre = v;
            break;
        }
    r.field.at(centre, 0) += 0.1;
    EXPECT_GE(weak_residual(t, r.field), 1e-3);
}

TEST(ManufacturedRhs, Oracles) {
    const auto mesh = build_unit_mesh(3, 5);
    const auto affine = DiscreteField::interpolate(mesh, 1, [](std::span<const double> x, std::span<double> o) {
        o[0] = 2 * x[0] - x[1] + 0.5 * x[2] + 1;
    });
    EXPECT_LE(manufactured_rhs(identity_tensor(3, 1), affine).lpNorm<Eigen::Infinity>(), 1e-12);

    DiscreteField zero(mesh, 2);
    EXPECT_EQ(manufactured_rhs(build_example_tensor(), zero).lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(ManufacturedRhs, DiscreteSolveRecoversInterpolant) {
    const auto t = build_example_tensor();
    const auto mesh = build_unit_mesh(3, 6);
    const auto ue = DiscreteField::interpolate(mesh, 2, [](std::span<const double> x, std::span<double> o) {
        o[0] = std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]) * x[2] + 0.2;
        o[1] = std::cos(2 * x[0]) * x[1] - x[2];
    });
    const Vector f = manufactured_rhs(t, ue);
    const auto sys = assemble(t, ue, {.fixed = f});
    const auto sol = linear_solve(sys.op, sys.load);
    const Vector ref = gather_free(ue, sys.dofs);
    EXPECT_LE((sol.x - ref).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE((sys.load - sys.op * ref).norm(), 1e-9 * sys.load.norm());
}

TEST(ManufacturedSolution, ConvergesAtFirstOrderElementRates) {
    const auto t = mms::tensor(2);
    DirichletData g{2, mms::exact, "mms"};
    std::vector<double> l2, h1;
    for (int cells : {8, 16, 32}) {
        const auto mesh = build_unit_mesh(2, cells);
        const auto r = picard_solve(t, mesh, g, {}, {.source = mms::source});
        ASSERT_TRUE(r.converged);
        EXPECT_EQ(r.outer_iters, 2);
        l2.push_back(l2_error(r.field, mms::exact));
        h1.push_back(h1_seminorm_error(r.field, mms::gradient));
    }
    for (int i = 0; i + 1 < 3; ++i) {
        EXPECT_GE(std::log2(l2[i] / l2[i + 1]), 1.8);
        EXPECT_GE(std::log2(h1[i] / h1[i + 1]), 0.8);
    }
}

#pragma once

// Galerkin discretization of the divergence-form system
//   -D_i( a^{alpha,beta}_{i,j}(x, u) D_j u^beta ) = f^alpha
// with piecewise-linear elements, Dirichlet data on the box boundary and
// frozen-coefficient (Picard) iteration for the nonlinearity.
//
// Degrees of freedom are vertex-major: dof = vertex * N + alpha. Boundary
// vertices carry the Dirichlet value; all other dofs are free.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "dglab/coefficients.hpp"
#include "dglab/errors.hpp"
#include "dglab/mesh.hpp"

namespace dglab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Vector function R^n -> R^N.
using VectorFunction = std::function<void(std::span<const double> x, std::span<double> out)>;

struct DirichletData {
    int N = 1;
    VectorFunction g;
    std::string name = "custom";
};

/// Named boundary presets:
///   linear:        g^a(x) = amplitude * (x1 + a * x2)
///   bounded_sine:  g^1 = amplitude * sin(pi * mean(x)),
///                  g^a = amplitude * sin(pi * (x_{a-1} - x_a)) for a >= 2 (axes cyclic)
///   constant:      g^a = amplitude
inline DirichletData boundary_preset(const std::string& name, int n, int N, double amplitude = 1.0) {
    DirichletData d;
    d.N = N;
    d.name = name;
    if (name == "linear") {
        d.g = [amplitude, N](std::span<const double> x, std::span<double> out) {
            for (int a = 0; a < N; ++a) out[a] = amplitude * (x[0] + a * x[1]);
        };
    } else if (name == "bounded_sine") {
        d.g = [amplitude, n, N](std::span<const double> x, std::span<double> out) {
            double mean = 0.0;
            for (int i = 0; i < n; ++i) mean += x[i];
            mean /= n;
            out[0] = amplitude * std::sin(std::numbers::pi * mean);
            for (int a = 1; a < N; ++a) {
                const int i = (a - 1) % n;
                const int j = a % n;
                out[a] = amplitude * std::sin(std::numbers::pi * (x[i] - x[j]));
            }
        };
    } else if (name == "constant") {
        d.g = [amplitude, N](std::span<const double>, std::span<double> out) {
            for (int a = 0; a < N; ++a) out[a] = amplitude;
        };
    } else {
        throw InvalidArgument("unknown boundary preset '" + name + "'");
    }
    return d;
}

enum class InitialGuess {
    harmonic,       ///< componentwise discrete harmonic extension of g
    boundary_mean,  ///< interior set to the boundary mean of each component
    zero_interior,
};

struct LinearSolveConfig {
    double tol = 1e-10;
    int max_iters = 5000;
    /// Direct factorization is attempted when Krylov fails and the system is at most this large.
    std::size_t direct_max_unknowns = 400000;
};

struct PicardConfig {
    int max_outer_iters = 50;
    double outer_tol = 1e-8;
    double linear_tol = 1e-12;
    int linear_max_iters = 5000;
    InitialGuess initial_guess = InitialGuess::harmonic;

    [[nodiscard]] LinearSolveConfig linear() const {
        LinearSolveConfig c;
        c.tol = linear_tol;
        c.max_iters = linear_max_iters;
        return c;
    }
    void validate() const {
        if (!(outer_tol > 0.0) || !(linear_tol > 0.0)) throw InvalidArgument("picard: tolerances must be positive");
        if (max_outer_iters < 1 || linear_max_iters < 1) throw InvalidArgument("picard: iteration caps must be positive");
    }
};

struct LinearDiagnostics {
    std::string method;  ///< "bicgstab", "direct" or "trivial"
    int iterations = 0;
    double relative_residual = 0.0;
    bool krylov_failed = false;
};

struct LinearSolution {
    Vector x;
    LinearDiagnostics diagnostics;
    std::vector<double> residual_history;
};

struct DofMap {
    std::vector<long> free_index;  ///< per dof, -1 on the boundary
    std::vector<std::size_t> free_dofs;

    [[nodiscard]] std::size_t free_count() const noexcept { return free_dofs.size(); }

    static DofMap build(const Mesh& m, int N) {
        DofMap d;
        d.free_index.assign(m.vertex_count() * N, -1);
        for (std::size_t v = 0; v < m.vertex_count(); ++v) {
            if (m.on_boundary(v)) continue;
            for (int a = 0; a < N; ++a) {
                d.free_index[v * N + a] = static_cast<long>(d.free_dofs.size());
                d.free_dofs.push_back(v * N + a);
            }
        }
        return d;
    }
};

/// Right-hand-side contributions beyond the boundary lift.
struct LoadTerms {
    /// Volume source f: integrated against each test basis function.
    VectorFunction source;
    /// Load added verbatim on free dofs.
    std::optional<Vector> fixed;
};

struct AssembledSystem {
    SparseMatrix full;  ///< all dofs x all dofs
    SparseMatrix op;    ///< free x free
    Vector load;        ///< free rows
    DofMap dofs;
};

/// Full stiffness matrix with coefficients frozen at `frozen`; row (test
/// vertex, alpha), column (trial vertex, beta).
inline SparseMatrix assemble_stiffness(const CoefficientTensor& t, const DiscreteField& frozen) {
    const Mesh& m = frozen.mesh();
    const int n = m.n();
    const int N = t.N();
    if (t.n() != n) throw InvalidArgument("assemble: tensor n does not match mesh");
    if (frozen.N() != N) throw InvalidArgument("assemble: field N does not match tensor");
    const std::size_t ndof = m.vertex_count() * N;
    const auto& quad = m.quadrature();
    const std::size_t ne = t.entry_count();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(m.simplex_count() * (n + 1) * (n + 1) * N * N);
    std::vector<double> entries(ne), avg(ne);
    std::array<double, 3> x{};
    std::vector<double> y(N);
    for (std::size_t s = 0; s < m.simplex_count(); ++s) {
        std::fill(avg.begin(), avg.end(), 0.0);
        for (const auto& q : quad) {
            m.map_point(s, q.bary, std::span<double>(x.data(), n));
            frozen.value_at(s, q.bary, y);
            t.eval_into(std::span<const double>(x.data(), n), y, entries);
            for (std::size_t e = 0; e < ne; ++e) avg[e] += q.weight * entries[e];
        }
        for (std::size_t e = 0; e < ne; ++e)
            if (!std::isfinite(avg[e]))
                throw EvaluationError({x.begin(), x.begin() + n}, y, "non-finite tensor entry during assembly");
        const double vol = m.volume(s);
        const auto vs = m.simplex(s);
        for (int k = 0; k <= n; ++k) {
            const auto gk = m.basis_gradient(s, k);
            for (int l = 0; l <= n; ++l) {
                const auto gl = m.basis_gradient(s, l);
                for (int al = 0; al < N; ++al)
                    for (int be = 0; be < N; ++be) {
                        double v = 0.0;
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j) v += avg[t.index(al, be, i, j)] * gk[i] * gl[j];
                        if (v != 0.0)
                            trips.emplace_back(static_cast<int>(vs[k] * N + al), static_cast<int>(vs[l] * N + be),
                                               vol * v);
                    }
            }
        }
    }
    SparseMatrix k(static_cast<Eigen::Index>(ndof), static_cast<Eigen::Index>(ndof));
    k.setFromTriplets(trips.begin(), trips.end());
    return k;
}

/// Load vector (all dofs) of a volume source.
inline Vector source_load(const Mesh& m, int N, const VectorFunction& f) {
    const int n = m.n();
    Vector load = Vector::Zero(static_cast<Eigen::Index>(m.vertex_count() * N));
    std::array<double, 3> x{};
    std::vector<double> fv(N);
    for (std::size_t s = 0; s < m.simplex_count(); ++s) {
        const auto vs = m.simplex(s);
        const double vol = m.volume(s);
        for (const auto& q : m.quadrature()) {
            m.map_point(s, q.bary, std::span<double>(x.data(), n));
            f(std::span<const double>(x.data(), n), fv);
            for (int k = 0; k <= n; ++k)
                for (int a = 0; a < N; ++a) load[static_cast<Eigen::Index>(vs[k] * N + a)] += vol * q.weight * fv[a] * q.bary[k];
        }
    }
    return load;
}

namespace detail {

inline Vector field_vector(const DiscreteField& u) {
    const auto v = u.values();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline SparseMatrix restrict_rows(const SparseMatrix& full, const DofMap& dofs, bool free_cols) {
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t r = 0; r < dofs.free_count(); ++r) {
        const auto row = static_cast<Eigen::Index>(dofs.free_dofs[r]);
        for (SparseMatrix::InnerIterator it(full, row); it; ++it) {
            const long c = dofs.free_index[static_cast<std::size_t>(it.col())];
            if (free_cols && c >= 0) trips.emplace_back(static_cast<int>(r), static_cast<int>(c), it.value());
            if (!free_cols && c < 0) trips.emplace_back(static_cast<int>(r), static_cast<int>(it.col()), it.value());
        }
    }
    SparseMatrix out(static_cast<Eigen::Index>(dofs.free_count()),
                     free_cols ? static_cast<Eigen::Index>(dofs.free_count()) : full.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
}

}  // namespace detail

/// Free-dof operator and load for coefficients frozen at `frozen`. The
/// boundary values of `frozen` are the Dirichlet lift.
inline AssembledSystem assemble(const CoefficientTensor& t, const DiscreteField& frozen, const LoadTerms& loads = {}) {
    AssembledSystem sys;
    sys.dofs = DofMap::build(frozen.mesh(), frozen.N());
    sys.full = assemble_stiffness(t, frozen);
    sys.op = detail::restrict_rows(sys.full, sys.dofs, true);

    Vector lift = detail::field_vector(frozen);
    for (std::size_t r = 0; r < sys.dofs.free_count(); ++r) lift[static_cast<Eigen::Index>(sys.dofs.free_dofs[r])] = 0.0;
    const Vector lifted = sys.full * lift;
    Vector src;
    if (loads.source) src = source_load(frozen.mesh(), frozen.N(), loads.source);

    sys.load.resize(static_cast<Eigen::Index>(sys.dofs.free_count()));
    for (std::size_t r = 0; r < sys.dofs.free_count(); ++r) {
        const auto d = static_cast<Eigen::Index>(sys.dofs.free_dofs[r]);
        double v = -lifted[d];
        if (loads.source) v += src[d];
        sys.load[static_cast<Eigen::Index>(r)] = v;
    }
    if (loads.fixed) {
        if (loads.fixed->size() != sys.load.size()) throw InvalidArgument("assemble: fixed load has wrong size");
        sys.load += *loads.fixed;
    }
    return sys;
}

namespace detail {

inline LinearSolution bicgstab(const SparseMatrix& a, const Vector& b, const LinearSolveConfig& cfg) {
    LinearSolution out;
    out.diagnostics.method = "bicgstab";
    const double bnorm = b.norm();
    Vector diag = a.diagonal();
    Vector inv_diag(diag.size());
    for (Eigen::Index i = 0; i < diag.size(); ++i) inv_diag[i] = diag[i] != 0.0 ? 1.0 / diag[i] : 1.0;

    Vector x = Vector::Zero(b.size());
    Vector r = b;
    const Vector r_hat = r;
    Vector p = Vector::Zero(b.size());
    Vector v = Vector::Zero(b.size());
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    const double target = cfg.tol * bnorm;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const double rho_new = r_hat.dot(r);
        if (rho_new == 0.0 || !std::isfinite(rho_new)) break;
        const double beta = (rho_new / rho) * (alpha / omega);
        p = r + beta * (p - omega * v);
        const Vector y = inv_diag.cwiseProduct(p);
        v = a * y;
        const double denom = r_hat.dot(v);
        if (denom == 0.0 || !std::isfinite(denom)) break;
        alpha = rho_new / denom;
        const Vector s = r - alpha * v;
        if (s.norm() <= target) {
            x += alpha * y;
            out.residual_history.push_back(s.norm() / bnorm);
            out.diagnostics.iterations = it;
            break;
        }
        const Vector z = inv_diag.cwiseProduct(s);
        const Vector tv = a * z;
        const double tt = tv.squaredNorm();
        if (tt == 0.0) break;
        omega = tv.dot(s) / tt;
        x += alpha * y + omega * z;
        r = s - omega * tv;
        rho = rho_new;
        out.residual_history.push_back(r.norm() / bnorm);
        out.diagnostics.iterations = it;
        if (r.norm() <= target || omega == 0.0) break;
    }
    out.x = std::move(x);
    out.diagnostics.relative_residual = (b - a * out.x).norm() / bnorm;
    return out;
}

}  // namespace detail

/// Solves a x = b for a general (nonsymmetric) sparse operator: Jacobi-
/// preconditioned BiCGStab, then sparse LU when the Krylov residual misses
/// the target. Throws LinearSolveError with the Krylov residual history when
/// neither reaches ||b - a x|| <= tol ||b||.
inline LinearSolution linear_solve(const SparseMatrix& a, const Vector& b, const LinearSolveConfig& cfg = {}) {
    if (a.rows() != a.cols()) throw InvalidArgument("linear_solve: operator must be square");
    if (a.rows() != b.size()) throw InvalidArgument("linear_solve: rhs size mismatch");
    const double bnorm = b.norm();
    if (bnorm == 0.0 || a.rows() == 0) {
        LinearSolution z;
        z.x = Vector::Zero(b.size());
        z.diagnostics.method = "trivial";
        return z;
    }
    LinearSolution k = detail::bicgstab(a, b, cfg);
    if (k.diagnostics.relative_residual <= cfg.tol) return k;

    if (static_cast<std::size_t>(a.rows()) <= cfg.direct_max_unknowns) {
        Eigen::SparseMatrix<double> col = a;
        col.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.analyzePattern(col);
        lu.factorize(col);
        if (lu.info() == Eigen::Success) {
            LinearSolution d;
            d.x = lu.solve(b);
            d.residual_history = std::move(k.residual_history);
            d.diagnostics.method = "direct";
            d.diagnostics.iterations = k.diagnostics.iterations;
            d.diagnostics.krylov_failed = true;
            d.diagnostics.relative_residual = (b - a * d.x).norm() / bnorm;
            if (d.diagnostics.relative_residual <= cfg.tol) return d;
        }
    }
    throw LinearSolveError("linear_solve: residual " + std::to_string(k.diagnostics.relative_residual) +
                               " above tolerance after " + std::to_string(k.diagnostics.iterations) + " iterations",
                           std::move(k.residual_history));
}

/// Field equal to g on boundary vertices and zero inside.
inline DiscreteField boundary_lift(const MeshPtr& mesh, const DirichletData& g) {
    DiscreteField u(mesh, g.N);
    std::vector<double> out(g.N);
    for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
        if (!mesh->on_boundary(v)) continue;
        g.g(mesh->vertex(v), out);
        for (int a = 0; a < g.N; ++a) {
            if (!std::isfinite(out[a])) throw InvalidArgument("boundary data must be finite");
            u.at(v, a) = out[a];
        }
    }
    return u;
}

/// Copies free-dof values into a field whose boundary values are already set.
inline void scatter_free(DiscreteField& u, const DofMap& dofs, const Vector& x) {
    auto vals = u.values();
    for (std::size_t r = 0; r < dofs.free_count(); ++r) vals[dofs.free_dofs[r]] = x[static_cast<Eigen::Index>(r)];
}

inline Vector gather_free(const DiscreteField& u, const DofMap& dofs) {
    Vector x(static_cast<Eigen::Index>(dofs.free_count()));
    const auto vals = u.values();
    for (std::size_t r = 0; r < dofs.free_count(); ++r) x[static_cast<Eigen::Index>(r)] = vals[dofs.free_dofs[r]];
    return x;
}

inline DiscreteField initial_guess(const MeshPtr& mesh, const DirichletData& g, const PicardConfig& cfg) {
    DiscreteField u = boundary_lift(mesh, g);
    switch (cfg.initial_guess) {
        case InitialGuess::zero_interior:
            break;
        case InitialGuess::boundary_mean: {
            std::vector<double> sum(g.N, 0.0);
            std::size_t count = 0;
            for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
                if (mesh->on_boundary(v)) {
                    ++count;
                    for (int a = 0; a < g.N; ++a) sum[a] += u.at(v, a);
                }
            for (std::size_t v = 0; v < mesh->vertex_count(); ++v)
                if (!mesh->on_boundary(v))
                    for (int a = 0; a < g.N; ++a) u.at(v, a) = sum[a] / static_cast<double>(count);
            break;
        }
        case InitialGuess::harmonic: {
            const auto sys = assemble(identity_tensor(mesh->n(), g.N), u);
            const auto sol = linear_solve(sys.op, sys.load, cfg.linear());
            scatter_free(u, sys.dofs, sol.x);
            break;
        }
    }
    return u;
}

struct SolveResult {
    DiscreteField field;
    int outer_iters = 0;
    double final_update = std::numeric_limits<double>::infinity();
    std::vector<double> update_history;
    std::vector<LinearDiagnostics> linear;
    bool converged = false;
};

/// Frozen-coefficient iteration u_{m+1} = solve(a(., u_m)); stops when the
/// sup-norm of the update drops to outer_tol. Non-convergence is reported
/// through `converged`, never thrown.
inline SolveResult picard_solve(const CoefficientTensor& t, const MeshPtr& mesh, const DirichletData& g,
                                const PicardConfig& cfg = {}, const LoadTerms& loads = {}) {
    cfg.validate();
    if (t.n() != mesh->n()) throw InvalidArgument("picard: tensor n does not match mesh");
    if (t.N() != g.N) throw InvalidArgument("picard: boundary data N does not match tensor");

    SolveResult res{initial_guess(mesh, g, cfg)};
    for (int m = 1; m <= cfg.max_outer_iters; ++m) {
        const auto sys = assemble(t, res.field, loads);
        LinearSolution sol;
        try {
            sol = linear_solve(sys.op, sys.load, cfg.linear());
        } catch (const LinearSolveError& e) {
            LinearDiagnostics d;
            d.method = "failed";
            d.krylov_failed = true;
            d.relative_residual = e.residual_history().empty() ? std::numeric_limits<double>::infinity()
                                                               : e.residual_history().back();
            res.linear.push_back(d);
            res.outer_iters = m;
            return res;
        }
        const Vector prev = gather_free(res.field, sys.dofs);
        const double update = sys.dofs.free_count() ? (sol.x - prev).lpNorm<Eigen::Infinity>() : 0.0;
        scatter_free(res.field, sys.dofs, sol.x);
        res.linear.push_back(sol.diagnostics);
        res.update_history.push_back(update);
        res.final_update = update;
        res.outer_iters = m;
        if (!std::isfinite(update)) return res;
        if (update <= cfg.outer_tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

/// max over free test functions of |sum integral a(x,u) Du . D phi - f phi|,
/// normalized by ||Du||_{L2} + 1.
inline double weak_residual(const CoefficientTensor& t, const DiscreteField& u, const LoadTerms& loads = {}) {
    const auto sys = assemble(t, u, loads);
    const Vector r = sys.op * gather_free(u, sys.dofs) - sys.load;
    const double rmax = r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0;
    return rmax / (sobolev_seminorm(u, std::nullopt, 2.0) + 1.0);
}

/// Free-dof load making the interpolant of u_exact the discrete solution of
/// the problem frozen at u_exact: (K(u_exact) u_exact) on free rows.
inline Vector manufactured_rhs(const CoefficientTensor& t, const DiscreteField& u_exact) {
    const auto dofs = DofMap::build(u_exact.mesh(), u_exact.N());
    const SparseMatrix k = assemble_stiffness(t, u_exact);
    const Vector ku = k * detail::field_vector(u_exact);
    Vector out(static_cast<Eigen::Index>(dofs.free_count()));
    for (std::size_t r = 0; r < dofs.free_count(); ++r)
        out[static_cast<Eigen::Index>(r)] = ku[static_cast<Eigen::Index>(dofs.free_dofs[r])];
    return out;
}

}  // namespace dglab

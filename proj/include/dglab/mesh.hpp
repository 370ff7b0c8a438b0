#pragma once

// Structured simplicial meshes of axis-aligned boxes, piecewise-linear nodal
// vector fields, and the ball-restricted integrals built on them
// (superlevel measures, excess, Sobolev seminorms).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dglab/errors.hpp"
#include "dglab/quadrature.hpp"

namespace dglab {

/// Open ball B(center, radius).
struct Ball {
    std::vector<double> center;
    double radius = 0.0;

    Ball(std::vector<double> c, double r) : center(std::move(c)), radius(r) {
        if (!(r > 0.0)) throw InvalidArgument("ball radius must be positive");
    }

    [[nodiscard]] bool contains(std::span<const double> x) const noexcept {
        double d2 = 0.0;
        for (std::size_t i = 0; i < center.size(); ++i) d2 += (x[i] - center[i]) * (x[i] - center[i]);
        return d2 < radius * radius;
    }
};

/// Lebesgue measure of an n-ball.
inline double ball_volume(int n, double radius) {
    const double half = 0.5 * n;
    return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0) * std::pow(radius, n);
}

/// Fixed Sobolev exponent: np/(n-p) for p < n, otherwise 2p.
inline double sobolev_conjugate(int n, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("sobolev_conjugate: p must be >= 1");
    return p < n ? n * p / (n - p) : 2.0 * p;
}

class Mesh {
public:
    /// Uniform grid of cells_per_axis^n boxes, each split into n! simplices
    /// (Kuhn subdivision; 2 triangles per square, 6 tetrahedra per cube).
    Mesh(int n, std::vector<double> lower, std::vector<double> upper, int cells_per_axis)
        : n_(n), lower_(std::move(lower)), upper_(std::move(upper)), cells_(cells_per_axis) {
        if (n_ != 2 && n_ != 3) throw InvalidArgument("mesh: n must be 2 or 3");
        if (lower_.size() != static_cast<std::size_t>(n_) || upper_.size() != static_cast<std::size_t>(n_))
            throw InvalidArgument("mesh: box corners must have n coordinates");
        for (int d = 0; d < n_; ++d)
            if (!(upper_[d] > lower_[d]) || !std::isfinite(lower_[d]) || !std::isfinite(upper_[d]))
                throw InvalidArgument("mesh: degenerate box");
        if (cells_ < 1) throw InvalidArgument("mesh: cells_per_axis must be positive");
        build();
    }

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] int cells_per_axis() const noexcept { return cells_; }
    [[nodiscard]] const std::vector<double>& lower() const noexcept { return lower_; }
    [[nodiscard]] const std::vector<double>& upper() const noexcept { return upper_; }
    [[nodiscard]] std::size_t vertex_count() const noexcept { return boundary_.size(); }
    [[nodiscard]] std::size_t simplex_count() const noexcept { return volume_.size(); }

    [[nodiscard]] std::span<const double> vertex(std::size_t v) const noexcept {
        return {coords_.data() + v * n_, static_cast<std::size_t>(n_)};
    }
    [[nodiscard]] std::span<const std::size_t> simplex(std::size_t s) const noexcept {
        return {simplices_.data() + s * (n_ + 1), static_cast<std::size_t>(n_ + 1)};
    }
    [[nodiscard]] bool on_boundary(std::size_t v) const noexcept { return boundary_[v]; }
    [[nodiscard]] double volume(std::size_t s) const noexcept { return volume_[s]; }

    /// Gradient of the barycentric basis function of local vertex k on simplex s.
    [[nodiscard]] std::span<const double> basis_gradient(std::size_t s, int k) const noexcept {
        return {grads_.data() + (s * (n_ + 1) + k) * n_, static_cast<std::size_t>(n_)};
    }

    [[nodiscard]] double cell_size(int axis) const noexcept { return (upper_[axis] - lower_[axis]) / cells_; }
    [[nodiscard]] double min_cell_size() const noexcept {
        double h = cell_size(0);
        for (int d = 1; d < n_; ++d) h = std::min(h, cell_size(d));
        return h;
    }
    [[nodiscard]] double box_volume() const noexcept {
        double v = 1.0;
        for (int d = 0; d < n_; ++d) v *= upper_[d] - lower_[d];
        return v;
    }

    /// True when the closed ball lies inside the closed box.
    [[nodiscard]] bool contains_ball(const Ball& b) const noexcept {
        for (int d = 0; d < n_; ++d)
            if (b.center[d] - b.radius < lower_[d] || b.center[d] + b.radius > upper_[d]) return false;
        return true;
    }
    [[nodiscard]] bool contains_point(std::span<const double> x) const noexcept {
        for (int d = 0; d < n_; ++d)
            if (x[d] < lower_[d] || x[d] > upper_[d]) return false;
        return true;
    }

    [[nodiscard]] const std::vector<QuadraturePoint>& quadrature() const noexcept { return quad_; }

    /// Physical coordinates of a barycentric point on simplex s.
    void map_point(std::size_t s, const std::array<double, 4>& bary, std::span<double> x) const noexcept {
        const auto vs = simplex(s);
        for (int d = 0; d < n_; ++d) x[d] = 0.0;
        for (int k = 0; k <= n_; ++k) {
            const auto p = vertex(vs[k]);
            for (int d = 0; d < n_; ++d) x[d] += bary[k] * p[d];
        }
    }

    /// Index of the grid vertex with integer coordinates idx.
    [[nodiscard]] std::size_t vertex_index(std::span<const int> idx) const noexcept {
        std::size_t v = 0;
        for (int d = n_ - 1; d >= 0; --d) v = v * (cells_ + 1) + static_cast<std::size_t>(idx[d]);
        return v;
    }

private:
    void build() {
        const int per = cells_ + 1;
        std::size_t nv = 1;
        for (int d = 0; d < n_; ++d) nv *= static_cast<std::size_t>(per);
        coords_.resize(nv * n_);
        boundary_.assign(nv, false);
        std::vector<int> idx(n_, 0);
        for (std::size_t v = 0; v < nv; ++v) {
            std::size_t rem = v;
            bool bnd = false;
            for (int d = 0; d < n_; ++d) {
                idx[d] = static_cast<int>(rem % per);
                rem /= per;
                // Exact endpoints on the boundary faces.
                coords_[v * n_ + d] = idx[d] == cells_ ? upper_[d]
                                                       : lower_[d] + (upper_[d] - lower_[d]) * idx[d] / cells_;
                bnd = bnd || idx[d] == 0 || idx[d] == cells_;
            }
            boundary_[v] = bnd;
        }

        // Kuhn subdivision: one simplex per permutation of the axes; vertices
        // walk from the cell's lower corner adding one unit vector at a time.
        std::vector<int> perm(n_);
        std::vector<std::vector<int>> perms;
        for (int d = 0; d < n_; ++d) perm[d] = d;
        do perms.push_back(perm);
        while (std::next_permutation(perm.begin(), perm.end()));

        std::size_t nc = 1;
        for (int d = 0; d < n_; ++d) nc *= static_cast<std::size_t>(cells_);
        simplices_.reserve(nc * perms.size() * (n_ + 1));
        std::vector<int> cell(n_), walk(n_);
        for (std::size_t c = 0; c < nc; ++c) {
            std::size_t rem = c;
            for (int d = 0; d < n_; ++d) {
                cell[d] = static_cast<int>(rem % cells_);
                rem /= cells_;
            }
            for (const auto& p : perms) {
                walk = cell;
                simplices_.push_back(vertex_index(walk));
                for (int step = 0; step < n_; ++step) {
                    ++walk[p[step]];
                    simplices_.push_back(vertex_index(walk));
                }
            }
        }

        const std::size_t ns = simplices_.size() / (n_ + 1);
        volume_.resize(ns);
        grads_.resize(ns * (n_ + 1) * n_);
        for (std::size_t s = 0; s < ns; ++s) compute_geometry(s);
        quad_ = simplex_quadrature(n_);
    }

    void compute_geometry(std::size_t s) {
        // Jacobian J with columns v_k - v_0; grad(lambda_k) = row k-1 of J^{-1}.
        const auto vs = simplex(s);
        const auto p0 = vertex(vs[0]);
        double J[3][3] = {};
        for (int k = 1; k <= n_; ++k) {
            const auto pk = vertex(vs[k]);
            for (int d = 0; d < n_; ++d) J[d][k - 1] = pk[d] - p0[d];
        }
        double inv[3][3] = {};
        double det = 0.0;
        if (n_ == 2) {
            det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
            inv[0][0] = J[1][1] / det;
            inv[0][1] = -J[0][1] / det;
            inv[1][0] = -J[1][0] / det;
            inv[1][1] = J[0][0] / det;
        } else {
            det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) - J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                  J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
            inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det;
            inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det;
            inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det;
            inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det;
            inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det;
            inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det;
            inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det;
            inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det;
            inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det;
        }
        volume_[s] = std::abs(det) / (n_ == 2 ? 2.0 : 6.0);
        double* g = grads_.data() + s * (n_ + 1) * n_;
        for (int d = 0; d < n_; ++d) g[d] = 0.0;
        for (int k = 1; k <= n_; ++k)
            for (int d = 0; d < n_; ++d) {
                g[k * n_ + d] = inv[k - 1][d];
                g[d] -= inv[k - 1][d];
            }
    }

    int n_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    int cells_;
    std::vector<double> coords_;
    std::vector<std::size_t> simplices_;
    std::vector<bool> boundary_;
    std::vector<double> volume_;
    std::vector<double> grads_;
    std::vector<QuadraturePoint> quad_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

inline MeshPtr build_box_mesh(int n, std::vector<double> lower, std::vector<double> upper, int cells_per_axis) {
    return std::make_shared<const Mesh>(n, std::move(lower), std::move(upper), cells_per_axis);
}

/// Unit box [0,1]^n.
inline MeshPtr build_unit_mesh(int n, int cells_per_axis) {
    return build_box_mesh(n, std::vector<double>(n, 0.0), std::vector<double>(n, 1.0), cells_per_axis);
}

/// Piecewise-linear field with N components per vertex; values are vertex-major.
class DiscreteField {
public:
    DiscreteField(MeshPtr mesh, int N) : mesh_(std::move(mesh)), N_(N) {
        if (!mesh_) throw InvalidArgument("field: null mesh");
        if (N_ < 1) throw InvalidArgument("field: N must be positive");
        values_.assign(mesh_->vertex_count() * N_, 0.0);
    }

    DiscreteField(MeshPtr mesh, int N, std::vector<double> values) : DiscreteField(std::move(mesh), N) {
        if (values.size() != values_.size()) throw InvalidArgument("field: value count must be vertices * N");
        if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); }))
            throw InvalidArgument("field: values must be finite");
        values_ = std::move(values);
    }

    /// Samples f: R^n -> R^N at every vertex.
    template <class F>
    static DiscreteField interpolate(MeshPtr mesh, int N, F&& f) {
        DiscreteField u(mesh, N);
        std::vector<double> out(N);
        for (std::size_t v = 0; v < mesh->vertex_count(); ++v) {
            f(mesh->vertex(v), std::span<double>(out));
            for (int a = 0; a < N; ++a) u.at(v, a) = out[a];
        }
        return u;
    }

    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const MeshPtr& mesh_ptr() const noexcept { return mesh_; }
    [[nodiscard]] int N() const noexcept { return N_; }
    [[nodiscard]] double& at(std::size_t v, int a) noexcept { return values_[v * N_ + a]; }
    [[nodiscard]] double at(std::size_t v, int a) const noexcept { return values_[v * N_ + a]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

    /// Interpolated component values at a barycentric point of simplex s.
    void value_at(std::size_t s, const std::array<double, 4>& bary, std::span<double> out) const noexcept {
        const auto vs = mesh_->simplex(s);
        for (int a = 0; a < N_; ++a) out[a] = 0.0;
        for (int k = 0; k <= mesh_->n(); ++k)
            for (int a = 0; a < N_; ++a) out[a] += bary[k] * values_[vs[k] * N_ + a];
    }

    [[nodiscard]] double max_component(int a) const noexcept {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < mesh_->vertex_count(); ++v) m = std::max(m, at(v, a));
        return m;
    }

    [[nodiscard]] DiscreteField negated() const {
        DiscreteField r = *this;
        for (auto& v : r.values_) v = -v;
        return r;
    }

private:
    MeshPtr mesh_;
    int N_;
    std::vector<double> values_;
};

namespace detail {

/// Pairwise summation; fixed order independent of any partitioning.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

}  // namespace detail

/// Integrand context at one quadrature point.
struct QuadratureSite {
    std::size_t simplex;
    std::span<const double> x;
    const std::array<double, 4>& bary;
};

/// Sum over simplices of quadrature values of f(site). With a ball region the
/// ball indicator multiplies the integrand pointwise, so each simplex is
/// weighted by the quadrature fraction of its points inside the ball.
template <class F>
double integrate(const Mesh& mesh, F&& f, const std::optional<Ball>& region = std::nullopt) {
    const int n = mesh.n();
    const auto& quad = mesh.quadrature();
    std::vector<double> per_simplex(mesh.simplex_count(), 0.0);
    std::array<double, 3> x{};
    for (std::size_t s = 0; s < mesh.simplex_count(); ++s) {
        double acc = 0.0;
        for (const auto& q : quad) {
            mesh.map_point(s, q.bary, std::span<double>(x.data(), n));
            std::span<const double> xs(x.data(), n);
            if (region && !region->contains(xs)) continue;
            acc += q.weight * f(QuadratureSite{s, xs, q.bary});
        }
        per_simplex[s] = acc * mesh.volume(s);
    }
    return detail::pairwise_sum(per_simplex);
}

/// Constant gradient of component a on simplex s.
inline std::vector<double> gradient_on_simplex(const DiscreteField& u, std::size_t s, int a) {
    const Mesh& m = u.mesh();
    std::vector<double> g(m.n(), 0.0);
    const auto vs = m.simplex(s);
    for (int k = 0; k <= m.n(); ++k) {
        const auto gk = m.basis_gradient(s, k);
        const double val = u.at(vs[k], a);
        for (int d = 0; d < m.n(); ++d) g[d] += val * gk[d];
    }
    return g;
}

namespace detail {

inline double gradient_norm_sq(const DiscreteField& u, std::size_t s, int a) {
    const Mesh& m = u.mesh();
    const auto vs = m.simplex(s);
    double g[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k <= m.n(); ++k) {
        const auto gk = m.basis_gradient(s, k);
        const double val = u.at(vs[k], a);
        for (int d = 0; d < m.n(); ++d) g[d] += val * gk[d];
    }
    return g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
}

inline double component_at(const DiscreteField& u, std::size_t s, const std::array<double, 4>& bary, int a) {
    const auto vs = u.mesh().simplex(s);
    double v = 0.0;
    for (int k = 0; k <= u.mesh().n(); ++k) v += bary[k] * u.at(vs[k], a);
    return v;
}

}  // namespace detail

/// |{u^a > k} intersect ball| by indicator quadrature (strict inequality).
inline double superlevel_measure(const DiscreteField& u, int a, double k, const std::optional<Ball>& ball) {
    if (a < 0 || a >= u.N()) throw InvalidArgument("superlevel_measure: component out of range");
    return integrate(
        u.mesh(), [&](const QuadratureSite& q) { return detail::component_at(u, q.simplex, q.bary, a) > k ? 1.0 : 0.0; },
        ball);
}

/// sum_a integral over {u^a > k} intersect ball of (u^a - k)^q.
inline double excess(const DiscreteField& u, double k, const std::optional<Ball>& ball, double q) {
    if (!(q >= 1.0)) throw InvalidArgument("excess: exponent must be >= 1");
    return integrate(
        u.mesh(),
        [&](const QuadratureSite& site) {
            double sum = 0.0;
            for (int a = 0; a < u.N(); ++a) {
                const double v = detail::component_at(u, site.simplex, site.bary, a);
                if (v > k) sum += std::pow(v - k, q);
            }
            return sum;
        },
        ball);
}

/// (sum_a integral over ball of |Du^a|^p)^(1/p).
inline double sobolev_seminorm(const DiscreteField& u, const std::optional<Ball>& ball, double p) {
    if (!(p >= 1.0)) throw InvalidArgument("sobolev_seminorm: p must be >= 1");
    const double total = integrate(
        u.mesh(),
        [&](const QuadratureSite& site) {
            double sum = 0.0;
            for (int a = 0; a < u.N(); ++a) sum += std::pow(detail::gradient_norm_sq(u, site.simplex, a), 0.5 * p);
            return sum;
        },
        ball);
    return std::pow(total, 1.0 / p);
}

/// L2 distance between the interpolant and f: R^n -> R^N.
template <class F>
double l2_error(const DiscreteField& u, F&& exact) {
    std::vector<double> ex(u.N());
    const double total = integrate(u.mesh(), [&](const QuadratureSite& site) {
        exact(site.x, std::span<double>(ex));
        double sum = 0.0;
        for (int a = 0; a < u.N(); ++a) {
            const double d = detail::component_at(u, site.simplex, site.bary, a) - ex[a];
            sum += d * d;
        }
        return sum;
    });
    return std::sqrt(total);
}

/// H1 seminorm distance; grad(x, out) fills the N x n row-major Jacobian.
template <class G>
double h1_seminorm_error(const DiscreteField& u, G&& grad) {
    const int n = u.mesh().n();
    std::vector<double> ex(static_cast<std::size_t>(u.N()) * n);
    const double total = integrate(u.mesh(), [&](const QuadratureSite& site) {
        grad(site.x, std::span<double>(ex));
        double sum = 0.0;
        for (int a = 0; a < u.N(); ++a) {
            const auto g = gradient_on_simplex(u, site.simplex, a);
            for (int d = 0; d < n; ++d) {
                const double diff = g[d] - ex[a * n + d];
                sum += diff * diff;
            }
        }
        return sum;
    });
    return std::sqrt(total);
}

}  // namespace dglab

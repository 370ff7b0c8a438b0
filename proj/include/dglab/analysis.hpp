#pragma once

// Estimates of the local-boundedness argument evaluated on discrete fields:
// admissible radius, both sides of the superlevel Caccioppoli inequality,
// excess traces along the De Giorgi schedule and the resulting level search;
// plus the structure condition that the example tensor violates, and the
// classical unbounded radial field x / |x|^gamma.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "dglab/coefficients.hpp"
#include "dglab/degiorgi.hpp"
#include "dglab/errors.hpp"
#include "dglab/mesh.hpp"

namespace dglab {

// ---------------------------------------------------------------------------
// Admissible radius

struct AdmissibleRadiusOptions {
    /// Bisection steps after the halving search has bracketed the radius.
    int refinement_steps = 40;
};

/// Largest tested R0 < 1 with |B_R0| < 1 and sum_a integral_{B_R0} |u^a|^p* < 1.
/// Halving from 1 brackets the radius, bisection refines it. The ball measure
/// is analytic; the integral covers the part of the ball inside the mesh.
/// Throws GeometryError when the result would fall below half a cell.
inline double admissible_radius(const DiscreteField& u, std::span<const double> x0, double p_star,
                                const AdmissibleRadiusOptions& opt = {}) {
    const Mesh& m = u.mesh();
    if (x0.size() != static_cast<std::size_t>(m.n())) throw InvalidArgument("admissible_radius: x0 has wrong size");
    if (!m.contains_point(x0)) throw GeometryError("admissible_radius: x0 outside the domain");
    if (!(p_star >= 1.0)) throw InvalidArgument("admissible_radius: p* must be >= 1");
    const std::vector<double> c(x0.begin(), x0.end());
    auto admissible = [&](double R) {
        if (!(ball_volume(m.n(), R) < 1.0)) return false;
        const double mass = integrate(
            m,
            [&](const QuadratureSite& q) {
                double s = 0.0;
                for (int a = 0; a < u.N(); ++a) s += std::pow(std::abs(detail::component_at(u, q.simplex, q.bary, a)), p_star);
                return s;
            },
            Ball(c, R));
        return mass < 1.0;
    };
    const double floor_radius = 0.5 * m.min_cell_size();
    double hi = 1.0;
    double lo = 0.5;
    while (!admissible(lo)) {
        hi = lo;
        lo *= 0.5;
        if (lo < floor_radius) throw GeometryError("admissible_radius: no admissible radius above mesh resolution");
    }
    for (int k = 0; k < opt.refinement_steps; ++k) {
        const double mid = 0.5 * (lo + hi);
        (admissible(mid) ? lo : hi) = mid;
    }
    return lo;
}

// ---------------------------------------------------------------------------
// Caccioppoli inequality on superlevel sets

/// Ball pair B(center, s) inside B(center, t) at level L, with the
/// piecewise-linear radial cutoff equal to 1 on B_s and 0 outside B_t.
struct CaccioppoliCheckSpec {
    std::vector<double> center;
    double s = 0.0;
    double t = 0.0;
    double L = 0.0;

    void validate() const {
        if (!(s > 0.0 && s < t)) throw InvalidArgument("caccioppoli: need 0 < s < t");
    }

    [[nodiscard]] double cutoff(std::span<const double> x) const {
        double r2 = 0.0;
        for (std::size_t i = 0; i < center.size(); ++i) r2 += (x[i] - center[i]) * (x[i] - center[i]);
        const double r = std::sqrt(r2);
        if (r <= s) return 1.0;
        if (r >= t) return 0.0;
        return (t - r) / (t - s);
    }

    /// Sup of |D cutoff|; at most 2 / (t - s).
    [[nodiscard]] double cutoff_slope() const { return 1.0 / (t - s); }
};

struct StructureConstants {
    double c = 0.0;
    int n = 2;
    int N = 1;
    double nu = 1.0;
    double L0 = 0.0;

    static StructureConstants from_report(const StructureReport& r, int n, int N) {
        return {r.c, n, N, r.nu, r.L0.value_or(0.0)};
    }
};

struct CaccioppoliSides {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    double constant = 0.0;
};

inline double safe_ratio(double num, double den) {
    if (den == 0.0) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return num / den;
}

/// lhs = sum_a integral_{u^a > L, B_s} |Du^a|^2;
/// rhs = constant * sum_a integral_{u^a > L, B_t} ((u^a - L)/(t - s))^2.
inline CaccioppoliSides caccioppoli_sides(const CoefficientTensor& t, const DiscreteField& u,
                                          const CaccioppoliCheckSpec& spec, const StructureConstants& k) {
    spec.validate();
    const Mesh& m = u.mesh();
    if (t.n() != m.n() || t.N() != u.N()) throw InvalidArgument("caccioppoli: tensor does not match field");
    if (spec.center.size() != static_cast<std::size_t>(m.n())) throw InvalidArgument("caccioppoli: center has wrong size");
    if (spec.L < k.L0) throw InvalidArgument("caccioppoli: level below L0");
    if (!m.contains_ball(Ball(spec.center, spec.t))) throw GeometryError("caccioppoli: outer ball leaves the domain");

    CaccioppoliSides out;
    out.constant = caccioppoli_constant(k.c, k.n, k.N, k.nu);
    const double L = spec.L;
    out.lhs = integrate(
        m,
        [&](const QuadratureSite& q) {
            double sum = 0.0;
            for (int a = 0; a < u.N(); ++a)
                if (detail::component_at(u, q.simplex, q.bary, a) > L) sum += detail::gradient_norm_sq(u, q.simplex, a);
            return sum;
        },
        Ball(spec.center, spec.s));
    const double width = spec.t - spec.s;
    const double zero_order = integrate(
        m,
        [&](const QuadratureSite& q) {
            double sum = 0.0;
            for (int a = 0; a < u.N(); ++a) {
                const double v = detail::component_at(u, q.simplex, q.bary, a);
                if (v > L) sum += ((v - L) / width) * ((v - L) / width);
            }
            return sum;
        },
        Ball(spec.center, spec.t));
    out.rhs = out.constant * zero_order;
    out.ratio = safe_ratio(out.lhs, out.rhs);
    return out;
}

// ---------------------------------------------------------------------------
// Excess along the De Giorgi schedule

struct ExcessEntry {
    int h = 0;
    double k = 0.0;
    double rho = 0.0;
    double J = 0.0;
};

struct ExcessTrace {
    double d = 1.0;
    double R = 0.5;
    int H = 2;
    double p = 2.0;
    double p_star = 4.0;
    double theta = 1.0;
    std::vector<double> center;
    std::vector<ExcessEntry> entries;

    [[nodiscard]] bool non_increasing() const {
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].J > entries[i - 1].J) return false;
        return true;
    }
};

struct ExcessTraceOptions {
    double p = 2.0;
    std::optional<double> p_star;  ///< defaults to sobolev_conjugate(n, p)
    double theta = 1.0;
};

/// J_h = excess(u, k_h, B(x0, rho_h), p*) for h = 0..H. R is expected to be
/// admissible for (u, x0); the center must lie in the closed domain.
inline ExcessTrace excess_trace(const DiscreteField& u, std::span<const double> x0, double R, double d, int H,
                                const ExcessTraceOptions& opt = {}) {
    const Mesh& m = u.mesh();
    if (x0.size() != static_cast<std::size_t>(m.n())) throw InvalidArgument("excess_trace: x0 has wrong size");
    if (!m.contains_point(x0)) throw GeometryError("excess_trace: center outside the domain");
    if (H < 2) throw InvalidArgument("excess_trace: H must be >= 2");
    const LevelSchedule levels(d);
    const RadiusSchedule radii(R);
    ExcessTrace tr;
    tr.d = d;
    tr.R = R;
    tr.H = H;
    tr.p = opt.p;
    tr.p_star = opt.p_star.value_or(sobolev_conjugate(m.n(), opt.p));
    tr.theta = opt.theta;
    tr.center.assign(x0.begin(), x0.end());
    for (int h = 0; h <= H; ++h) {
        ExcessEntry e;
        e.h = h;
        e.k = level_at(levels, h);
        e.rho = radii_at(radii, h).rho;
        e.J = excess(u, e.k, Ball(tr.center, e.rho), tr.p_star);
        tr.entries.push_back(e);
    }
    return tr;
}

struct DecayFit {
    bool applicable = false;
    bool ok = false;
    double C_fit = 0.0;
    int argmax_h = -1;
};

/// C_fit = max_h J_{h+1} / ((2^{p*^2/p})^h J_h^{theta p*/p}) over h with J_h > 0,
/// an empirical stand-in for the decay constant. Requires three leading
/// positive entries. Evaluated in log space.
inline DecayFit fit_decay(const ExcessTrace& tr) {
    DecayFit f;
    std::size_t positive = 0;
    while (positive < tr.entries.size() && tr.entries[positive].J > 0.0) ++positive;
    if (positive < 3) return f;
    f.applicable = true;
    const double growth = tr.p_star * tr.p_star / tr.p * std::numbers::ln2;
    const double power = tr.theta * tr.p_star / tr.p;
    double best_log = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h + 1 < tr.entries.size(); ++h) {
        const double jh = tr.entries[h].J;
        const double jn = tr.entries[h + 1].J;
        if (!(jh > 0.0)) break;
        if (!(jn > 0.0)) continue;
        const double l = std::log(jn) - static_cast<double>(h) * growth - power * std::log(jh);
        if (l > best_log) {
            best_log = l;
            f.argmax_h = static_cast<int>(h);
        }
    }
    f.C_fit = f.argmax_h >= 0 ? std::exp(best_log) : 0.0;
    f.ok = std::isfinite(f.C_fit);
    return f;
}

struct BoundednessOptions {
    int H = 20;
    double p = 2.0;
    std::optional<double> p_star;
    /// Smallest candidate level; 2 L0 when the tensor certifies L0.
    double min_level = 1.0;
    double d_max = 1099511627776.0;  // 2^40
    /// Reject R above the admissible radius.
    bool check_admissible = true;
};

struct LevelSearch {
    bool bounded = false;
    double d = 0.0;
    std::vector<double> tried;
    std::optional<ExcessTrace> trace;  ///< trace at the accepted level
};

struct BoundednessResult {
    LevelSearch upper;  ///< u^a <= d on B_{R/2}
    LevelSearch lower;  ///< -u^a <= d on B_{R/2}, i.e. the reflected problem
    double R = 0.0;

    [[nodiscard]] double d() const noexcept { return upper.d; }
};

namespace detail {

inline LevelSearch search_level(const DiscreteField& u, std::span<const double> x0, double R, double tol,
                                const BoundednessOptions& opt) {
    LevelSearch s;
    ExcessTraceOptions eo{opt.p, opt.p_star, 1.0};
    for (double d = 1.0; d <= opt.d_max; d *= 2.0) {
        if (d < opt.min_level) continue;
        s.tried.push_back(d);
        auto tr = excess_trace(u, x0, R, d, opt.H, eo);
        if (tr.entries.back().J <= tol) {
            s.bounded = true;
            s.d = d;
            s.trace = std::move(tr);
            return s;
        }
    }
    return s;
}

}  // namespace detail

/// Smallest d in {1, 2, 4, ...} (at least min_level) whose excess trace
/// reaches J_H <= tol, certifying u^a <= d on B(x0, R/2) at mesh scale. The
/// same search on -u, which solves the system with the reflected tensor,
/// gives the lower bound. An exhausted search is reported, not thrown.
inline BoundednessResult boundedness_level(const DiscreteField& u, std::span<const double> x0, double R, double tol = 0.0,
                                           const BoundednessOptions& opt = {}) {
    if (!(tol >= 0.0)) throw InvalidArgument("boundedness_level: tol must be >= 0");
    if (opt.check_admissible) {
        const double ps = opt.p_star.value_or(sobolev_conjugate(u.mesh().n(), opt.p));
        const double r0 = admissible_radius(u, x0, ps);
        if (R > r0) throw InvalidArgument("boundedness_level: R exceeds the admissible radius");
    }
    BoundednessResult r;
    r.R = R;
    r.upper = detail::search_level(u, x0, R, tol, opt);
    r.lower = detail::search_level(u.negated(), x0, R, tol, opt);
    return r;
}

// ---------------------------------------------------------------------------
// The growth-type structure condition and its failure on the example tensor

/// sum_{a,g} (y^a y^g / |y|^2) sum_i p^g_i sum_{b,j} a^{a,b}_{i,j}(x,y) p^b_j;
/// p is N x n row-major.
inline double condition19_lhs(const CoefficientTensor& t, std::span<const double> x, std::span<const double> y,
                              std::span<const double> p) {
    const int n = t.n();
    const int N = t.N();
    if (p.size() != static_cast<std::size_t>(N * n)) throw InvalidArgument("condition19_lhs: p must be N x n");
    double y2 = 0.0;
    for (double v : y) y2 += v * v;
    if (!(y2 > 0.0)) throw InvalidArgument("condition19_lhs: y must be nonzero");
    const auto a = t.evaluate(x, y);
    double total = 0.0;
    for (int al = 0; al < N; ++al)
        for (int ga = 0; ga < N; ++ga) {
            double inner = 0.0;
            for (int i = 0; i < n; ++i) {
                double flux = 0.0;
                for (int be = 0; be < N; ++be)
                    for (int j = 0; j < n; ++j) flux += a[t.index(al, be, i, j)] * p[be * n + j];
                inner += p[ga * n + i] * flux;
            }
            total += y[al] * y[ga] / y2 * inner;
        }
    return total;
}

struct Condition19Input {
    std::vector<double> y;
    std::vector<double> p;
    double delta = 0.5;
    double lambda = 1.0;
    double d_x = 0.0;
    double g_x = 0.0;
    double L = 1.0;

    void validate() const {
        if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("condition19: delta must lie in (0,1)");
        if (!(lambda >= 0.0) || !(d_x >= 0.0) || !(g_x >= 0.0)) throw InvalidArgument("condition19: negative parameter");
        if (!(L > 0.0)) throw InvalidArgument("condition19: L must be positive");
    }
};

/// -(delta |p|^2 + (1/delta)^lambda (d(x) |y|^2 + g(x))).
inline double condition19_rhs(const Condition19Input& in) {
    in.validate();
    double p2 = 0.0;
    for (double v : in.p) p2 += v * v;
    double y2 = 0.0;
    for (double v : in.y) y2 += v * v;
    return -(in.delta * p2 + std::pow(1.0 / in.delta, in.lambda) * (in.d_x * y2 + in.g_x));
}

/// Coefficient of |t|^2 in condition19_lhs for the example tensor at
/// y = (k+1, k), p^1_1 = p^1_2 = t: (-6k^2 - 2k + 4) / (2k^2 + 2k + 1).
inline double condition19_example_ratio(std::int64_t k) {
    if (k < 2) throw InvalidArgument("condition19_example_ratio: k must be >= 2");
    const double kk = static_cast<double>(k);
    return (-6.0 * kk * kk - 2.0 * kk + 4.0) / (2.0 * kk * kk + 2.0 * kk + 1.0);
}

/// Threshold -12/5 below which the example violates the condition.
inline constexpr double kCondition19Threshold = -12.0 / 5.0;

/// The example test data y = (k+1, k), p^1_1 = p^1_2 = t (others 0) for n = 3, N = 2.
struct Condition19ExampleData {
    std::vector<double> y;
    std::vector<double> p;
};

inline Condition19ExampleData condition19_example_data(std::int64_t k, double t) {
    if (k < 2) throw InvalidArgument("condition19 example: k must be >= 2");
    Condition19ExampleData d;
    d.y = {static_cast<double>(k + 1), static_cast<double>(k)};
    d.p.assign(6, 0.0);
    d.p[0] = t;
    d.p[1] = t;
    return d;
}

struct Condition19Violation {
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    [[nodiscard]] bool violated() const noexcept { return lhs < rhs; }
};

/// Evaluates both sides at the example data with
/// |t|^2 = 5 / (2 delta^{1+lambda}) ((d(x) + 1) |y|^2 + g(x)), the choice that
/// bounds the right side below by -12/5 |t|^2.
inline Condition19Violation condition19_example_violation(const CoefficientTensor& example, std::int64_t k,
                                                          double delta, double lambda, double d_x, double g_x) {
    const double y2 = static_cast<double>((k + 1) * (k + 1) + k * k);
    const double t2 = 5.0 / (2.0 * std::pow(delta, 1.0 + lambda)) * ((d_x + 1.0) * y2 + g_x);
    Condition19Violation v;
    v.t = std::sqrt(t2);
    const auto data = condition19_example_data(k, v.t);
    const std::vector<double> x(3, 0.0);
    v.lhs = condition19_lhs(example, x, data.y, data.p);
    Condition19Input in{data.y, data.p, delta, lambda, d_x, g_x, 1.0};
    v.rhs = condition19_rhs(in);
    return v;
}

/// Default delta scan {2^-1, ..., 2^-20}.
inline std::vector<double> default_delta_scan() {
    std::vector<double> d;
    for (int e = 1; e <= 20; ++e) d.push_back(std::ldexp(1.0, -e));
    return d;
}

struct Condition19ScanRow {
    std::int64_t k = 0;
    double ratio = 0.0;
    bool below_threshold = false;
};

inline std::vector<Condition19ScanRow> condition19_scan(std::int64_t first, std::int64_t last) {
    if (first < 2 || last < first) throw InvalidArgument("condition19_scan: need 2 <= first <= last");
    std::vector<Condition19ScanRow> rows;
    for (std::int64_t k = first; k <= last; ++k) {
        const double r = condition19_example_ratio(k);
        rows.push_back({k, r, r < kCondition19Threshold});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Radial field x / |x|^gamma

struct RadialField {
    double gamma = 1.2;
    int n = 3;

    void validate() const {
        if (!(gamma >= 1.0)) throw InvalidArgument("radial field: gamma must be >= 1");
        if (n < 2) throw InvalidArgument("radial field: n must be >= 2");
    }
};

inline std::vector<double> radial_eval(const RadialField& f, std::span<const double> x) {
    f.validate();
    if (x.size() != static_cast<std::size_t>(f.n)) throw InvalidArgument("radial_eval: x has wrong size");
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    if (!(r2 > 0.0)) throw InvalidArgument("radial_eval: x must be nonzero");
    const double scale = std::pow(std::sqrt(r2), -f.gamma);
    std::vector<double> u(x.begin(), x.end());
    for (auto& v : u) v *= scale;
    return u;
}

/// Du_{ij} = |x|^{-gamma} (delta_ij - gamma x_i x_j / |x|^2), row-major n x n.
inline std::vector<double> radial_gradient(const RadialField& f, std::span<const double> x) {
    f.validate();
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    if (!(r2 > 0.0)) throw InvalidArgument("radial_gradient: x must be nonzero");
    const double scale = std::pow(std::sqrt(r2), -f.gamma);
    std::vector<double> g(static_cast<std::size_t>(f.n) * f.n);
    for (int i = 0; i < f.n; ++i)
        for (int j = 0; j < f.n; ++j) g[i * f.n + j] = scale * ((i == j ? 1.0 : 0.0) - f.gamma * x[i] * x[j] / r2);
    return g;
}

struct RadialDiagnostics {
    double sup = 0.0;       ///< sup of |u| on the annulus r < |x| < R
    double seminorm = 0.0;  ///< (integral over the annulus of |Du|^2)^{1/2}
};

/// Surface measure of the unit sphere in R^n.
inline double unit_sphere_area(int n) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

inline RadialDiagnostics radial_diagnostics(const RadialField& f, double r, double R, int panels_per_unit_log = 16) {
    f.validate();
    if (!(r > 0.0) || !(r < R) || R > 1.0) throw InvalidArgument("radial_diagnostics: need 0 < r < R <= 1");
    RadialDiagnostics d;
    d.sup = std::pow(r, 1.0 - f.gamma);

    // |Du|^2 depends on |x| only: integrate omega_{n-1} rho^{n-1} |Du(rho e1)|^2
    // over rho in (r, R) with composite Gauss-Legendre in s = log rho.
    const auto gl = detail::gauss_legendre_01(4);
    const double a = std::log(r);
    const double b = std::log(R);
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) * panels_per_unit_log)));
    const double width = (b - a) / panels;
    std::vector<double> x(f.n, 0.0);
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double s = a + width * (k + gl.nodes[q]);
            const double rho = std::exp(s);
            x[0] = rho;
            const auto g = radial_gradient(f, x);
            double frob = 0.0;
            for (double v : g) frob += v * v;
            total += width * gl.weights[q] * frob * std::pow(rho, f.n);  // rho^{n-1} d rho = rho^n ds
        }
    }
    d.seminorm = std::sqrt(unit_sphere_area(f.n) * total);
    return d;
}

/// Interpolates x / |x|^gamma on the box [r, r+1] x [-1/2, 1/2]^{n-1}, whose
/// nearest point to the singularity is the vertex (r, 0, ..., 0).
/// cells_per_axis must be even so that vertex exists.
inline DiscreteField radial_field_on_mesh(const RadialField& f, double r, int cells_per_axis) {
    f.validate();
    if (!(r > 0.0)) throw InvalidArgument("radial_field_on_mesh: cutoff must be positive");
    if (cells_per_axis % 2 != 0) throw InvalidArgument("radial_field_on_mesh: cells_per_axis must be even");
    std::vector<double> lo(f.n, -0.5), hi(f.n, 0.5);
    lo[0] = r;
    hi[0] = r + 1.0;
    auto mesh = build_box_mesh(f.n, lo, hi, cells_per_axis);
    return DiscreteField::interpolate(mesh, f.n, [&](std::span<const double> x, std::span<double> out) {
        const auto v = radial_eval(f, x);
        std::copy(v.begin(), v.end(), out.begin());
    });
}

}  // namespace dglab

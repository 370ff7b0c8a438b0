#pragma once

// Coefficient tensors a^{alpha,beta}_{i,j}(x, y) of a divergence-form system
// and sample-based certification of their structure conditions.
//
// Index convention: components alpha, beta in [0, N) and directions i, j in
// [0, n), all 0-based. Entries are stored flat in (alpha, beta, i, j) order,
//   flat = ((alpha * N + beta) * n + i) * n + j.
// The flattened (N n) x (N n) matrix used for ellipticity has row (alpha, i)
// at alpha * n + i and column (beta, j) at beta * n + j.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dglab/errors.hpp"

namespace dglab {

class CoefficientTensor {
public:
    using Evaluator =
        std::function<void(std::span<const double> x, std::span<const double> y, std::span<double> out)>;

    CoefficientTensor(int n, int N, Evaluator eval, std::string kind, bool solution_dependent,
                      std::vector<std::vector<double>> anchors = {})
        : n_(n), N_(N), eval_(std::move(eval)), kind_(std::move(kind)),
          solution_dependent_(solution_dependent), anchors_(std::move(anchors)) {
        if (n < 1 || N < 1) throw InvalidArgument("tensor dimensions must be positive");
        if (!eval_) throw InvalidArgument("tensor evaluator is empty");
    }

    [[nodiscard]] int n() const noexcept { return n_; }
    [[nodiscard]] int N() const noexcept { return N_; }
    [[nodiscard]] std::size_t entry_count() const noexcept {
        return static_cast<std::size_t>(N_) * N_ * n_ * n_;
    }
    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

    /// False when the entries never depend on y; the frozen-coefficient map is then constant.
    [[nodiscard]] bool depends_on_solution() const noexcept { return solution_dependent_; }

    /// y-points where the entries attain extremes; injected into certification samples.
    [[nodiscard]] const std::vector<std::vector<double>>& anchors() const noexcept { return anchors_; }

    [[nodiscard]] std::size_t index(int alpha, int beta, int i, int j) const noexcept {
        return ((static_cast<std::size_t>(alpha) * N_ + beta) * n_ + i) * n_ + j;
    }

    /// Unchecked evaluation into a caller-owned buffer of entry_count() values.
    void eval_into(std::span<const double> x, std::span<const double> y, std::span<double> out) const {
        eval_(x, y, out);
    }

    /// Checked evaluation: throws EvaluationError on non-finite input or output.
    [[nodiscard]] std::vector<double> evaluate(std::span<const double> x, std::span<const double> y) const {
        if (x.size() != static_cast<std::size_t>(n_) || y.size() != static_cast<std::size_t>(N_))
            throw InvalidArgument("evaluate: point dimensions do not match tensor");
        auto finite = [](std::span<const double> v) {
            return std::all_of(v.begin(), v.end(), [](double s) { return std::isfinite(s); });
        };
        if (!finite(x) || !finite(y))
            throw EvaluationError({x.begin(), x.end()}, {y.begin(), y.end()}, "non-finite argument");
        std::vector<double> out(entry_count(), 0.0);
        eval_(x, y, out);
        if (!finite(out))
            throw EvaluationError({x.begin(), x.end()}, {y.begin(), y.end()}, "non-finite tensor entry");
        return out;
    }

private:
    int n_;
    int N_;
    Evaluator eval_;
    std::string kind_;
    bool solution_dependent_;
    std::vector<std::vector<double>> anchors_;
};

// ---------------------------------------------------------------------------
// Constructors

/// Tensor with constant entries (flat (alpha, beta, i, j) order).
inline CoefficientTensor constant_tensor(int n, int N, std::vector<double> entries,
                                         std::string kind = "constant_blocks") {
    const std::size_t expected = static_cast<std::size_t>(N) * N * n * n;
    if (entries.size() != expected) throw InvalidArgument("constant_tensor: expected N*N*n*n entries");
    auto shared = std::make_shared<const std::vector<double>>(std::move(entries));
    return CoefficientTensor(
        n, N,
        [shared](std::span<const double>, std::span<const double>, std::span<double> out) {
            std::copy(shared->begin(), shared->end(), out.begin());
        },
        std::move(kind), false);
}

/// delta_{alpha beta} delta_{ij}.
inline CoefficientTensor identity_tensor(int n, int N) {
    std::vector<double> e(static_cast<std::size_t>(N) * N * n * n, 0.0);
    for (int a = 0; a < N; ++a)
        for (int i = 0; i < n; ++i) e[((static_cast<std::size_t>(a) * N + a) * n + i) * n + i] = 1.0;
    return constant_tensor(n, N, std::move(e), "identity");
}

inline CoefficientTensor zero_tensor(int n, int N) {
    return constant_tensor(n, N, std::vector<double>(static_cast<std::size_t>(N) * N * n * n, 0.0), "zero");
}

/// Block-diagonal constant tensor; blocks[alpha] is the row-major n x n matrix a^{alpha,alpha}.
inline CoefficientTensor diagonal_tensor(int n, const std::vector<std::vector<double>>& blocks) {
    const int N = static_cast<int>(blocks.size());
    std::vector<double> e(static_cast<std::size_t>(N) * N * n * n, 0.0);
    for (int a = 0; a < N; ++a) {
        if (blocks[a].size() != static_cast<std::size_t>(n * n))
            throw InvalidArgument("diagonal_tensor: each block needs n*n entries");
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                e[((static_cast<std::size_t>(a) * N + a) * n + i) * n + j] = blocks[a][i * n + j];
    }
    return constant_tensor(n, N, std::move(e), "diagonal");
}

// ---------------------------------------------------------------------------
// The n = 3, N = 2 example with bump-shaped off-diagonal couplings b and w.

struct ExampleTensorSpec {
    double bump_radius = 0.25;
    double b_peak = 2.0;
    double w_peak = -10.0;
};

namespace detail {

// Distance from y to {(0,0)} union the staircase anchors: (k, k+1) for the
// b set, (k+1, k) for the w set, k >= 2. Both families sit on lines where
// y1 + y2 = 2k + 1, so the nearest k is found by projection.
inline double staircase_anchor_distance(double y1, double y2, bool b_set) {
    double best = std::hypot(y1, y2);
    const double k0 = std::floor((y1 + y2 - 1.0) / 2.0);
    for (double k = k0 - 1.0; k <= k0 + 2.0; k += 1.0) {
        const double kk = std::max(k, 2.0);
        const double ax = b_set ? kk : kk + 1.0;
        const double ay = b_set ? kk + 1.0 : kk;
        best = std::min(best, std::hypot(y1 - ax, y2 - ay));
    }
    return best;
}

inline std::vector<std::vector<double>> example_anchors(double extent) {
    std::vector<std::vector<double>> pts{{0.0, 0.0}};
    for (int k = 2; k + 1 <= static_cast<int>(std::floor(extent)); ++k) {
        pts.push_back({static_cast<double>(k), static_cast<double>(k + 1)});
        pts.push_back({static_cast<double>(k + 1), static_cast<double>(k)});
    }
    return pts;
}

}  // namespace detail

/// b(y): peak at (0,0) and every (k, k+1), k >= 2; zero farther than bump_radius.
inline double example_b(const ExampleTensorSpec& s, double y1, double y2) {
    const double d = detail::staircase_anchor_distance(y1, y2, true);
    return s.b_peak * std::max(0.0, 1.0 - d / s.bump_radius);
}

/// w(y): peak at (0,0) and every (k+1, k), k >= 2; zero farther than bump_radius.
inline double example_w(const ExampleTensorSpec& s, double y1, double y2) {
    const double d = detail::staircase_anchor_distance(y1, y2, false);
    return s.w_peak * std::max(0.0, 1.0 - d / s.bump_radius);
}

inline CoefficientTensor build_example_tensor(const ExampleTensorSpec& spec = {}) {
    if (!(spec.bump_radius > 0.0) || spec.bump_radius >= 0.5)
        throw InvalidArgument("example tensor: bump_radius must lie in (0, 1/2)");
    constexpr int n = 3;
    constexpr int N = 2;
    return CoefficientTensor(
        n, N,
        [spec](std::span<const double>, std::span<const double> y, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            auto at = [&](int a, int b, int i, int j) -> double& {
                return out[((static_cast<std::size_t>(a) * N + b) * n + i) * n + j];
            };
            // a^{1,1} = diag(2,2,1), a^{2,2} = diag(27,1,1)
            at(0, 0, 0, 0) = 2.0;
            at(0, 0, 1, 1) = 2.0;
            at(0, 0, 2, 2) = 1.0;
            at(1, 1, 0, 0) = 27.0;
            at(1, 1, 1, 1) = 1.0;
            at(1, 1, 2, 2) = 1.0;
            at(0, 1, 0, 0) = example_b(spec, y[0], y[1]);
            at(1, 0, 0, 1) = example_w(spec, y[0], y[1]);
        },
        "example4", true, detail::example_anchors(1e3));
}

/// Tensor evaluated at (x, -y).
inline CoefficientTensor reflect_tensor(const CoefficientTensor& t) {
    std::vector<std::vector<double>> anchors = t.anchors();
    for (auto& a : anchors)
        for (auto& v : a) v = -v;
    return CoefficientTensor(
        t.n(), t.N(),
        [t](std::span<const double> x, std::span<const double> y, std::span<double> out) {
            std::vector<double> neg(y.begin(), y.end());
            for (auto& v : neg) v = -v;
            t.eval_into(x, neg, out);
        },
        t.kind() + "_reflected", t.depends_on_solution(), std::move(anchors));
}

// ---------------------------------------------------------------------------
// Pointwise algebra

inline std::vector<double> evaluate_tensor(const CoefficientTensor& t, std::span<const double> x,
                                           std::span<const double> y) {
    return t.evaluate(x, y);
}

/// sum a^{alpha,beta}_{i,j} xi^alpha_i xi^beta_j; xi is N x n in row-major (alpha, i) order.
inline double quadratic_form(const CoefficientTensor& t, std::span<const double> x, std::span<const double> y,
                             std::span<const double> xi) {
    const int n = t.n();
    const int N = t.N();
    if (xi.size() != static_cast<std::size_t>(N * n)) throw InvalidArgument("quadratic_form: xi must be N x n");
    const auto a = t.evaluate(x, y);
    double sum = 0.0;
    for (int al = 0; al < N; ++al)
        for (int be = 0; be < N; ++be)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) sum += a[t.index(al, be, i, j)] * xi[al * n + i] * xi[be * n + j];
    return sum;
}

inline Eigen::MatrixXd flattened_matrix(const CoefficientTensor& t, std::span<const double> entries) {
    const int n = t.n();
    const int N = t.N();
    Eigen::MatrixXd m(N * n, N * n);
    for (int al = 0; al < N; ++al)
        for (int be = 0; be < N; ++be)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(al * n + i, be * n + j) = entries[t.index(al, be, i, j)];
    return m;
}

inline Eigen::MatrixXd flattened_matrix(const CoefficientTensor& t, std::span<const double> x,
                                        std::span<const double> y) {
    return flattened_matrix(t, t.evaluate(x, y));
}

// ---------------------------------------------------------------------------
// Sample-based certification of the structure conditions

/// Deterministic (x, y) sample grid. Each axis of a box is split into
/// points_per_axis equally spaced values including both ends; one point
/// per axis means the box midpoint.
struct SampleSpec {
    std::vector<double> x_lower;
    std::vector<double> x_upper;
    int x_points_per_axis = 3;
    std::vector<double> y_lower;
    std::vector<double> y_upper;
    int y_points_per_axis = 101;
    bool inject_anchors = true;
    std::vector<std::vector<double>> extra_y;
    /// When set, only these y points are used (plus anchors if inject_anchors).
    bool explicit_y_only = false;

    /// x in [0,1]^n, y in [-extent, extent]^N.
    static SampleSpec box(int n, int N, double y_extent = 10.0, int y_points = 101, int x_points = 3) {
        SampleSpec s;
        s.x_lower.assign(n, 0.0);
        s.x_upper.assign(n, 1.0);
        s.x_points_per_axis = x_points;
        s.y_lower.assign(N, -y_extent);
        s.y_upper.assign(N, y_extent);
        s.y_points_per_axis = y_points;
        return s;
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        auto box_str = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
            os << "[";
            for (std::size_t i = 0; i < lo.size(); ++i) os << (i ? "x" : "") << "[" << lo[i] << "," << hi[i] << "]";
            os << "]";
        };
        os << "x:";
        box_str(x_lower, x_upper);
        os << " " << x_points_per_axis << "/axis; y:";
        if (explicit_y_only) {
            os << "explicit(" << extra_y.size() << ")";
        } else {
            box_str(y_lower, y_upper);
            os << " " << y_points_per_axis << "/axis";
            if (!extra_y.empty()) os << " +" << extra_y.size() << " extra";
        }
        if (inject_anchors) os << " +anchors";
        return os.str();
    }
};

namespace detail {

inline std::vector<std::vector<double>> grid_points(const std::vector<double>& lo, const std::vector<double>& hi,
                                                    int per_axis) {
    const std::size_t dim = lo.size();
    if (hi.size() != dim) throw InvalidArgument("sample box corners differ in dimension");
    if (per_axis < 1) return {};
    std::size_t total = 1;
    for (std::size_t d = 0; d < dim; ++d) total *= static_cast<std::size_t>(per_axis);
    std::vector<std::vector<double>> pts;
    pts.reserve(total);
    std::vector<int> idx(dim, 0);
    for (std::size_t p = 0; p < total; ++p) {
        std::vector<double> v(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            v[d] = per_axis == 1 ? 0.5 * (lo[d] + hi[d])
                                 : lo[d] + (hi[d] - lo[d]) * static_cast<double>(idx[d]) / (per_axis - 1);
        }
        pts.push_back(std::move(v));
        for (std::size_t d = 0; d < dim; ++d) {
            if (++idx[d] < per_axis) break;
            idx[d] = 0;
        }
    }
    return pts;
}

inline bool inside_box(const std::vector<double>& p, const std::vector<double>& lo, const std::vector<double>& hi) {
    for (std::size_t d = 0; d < p.size(); ++d)
        if (p[d] < lo[d] || p[d] > hi[d]) return false;
    return true;
}

}  // namespace detail

struct SampleSet {
    std::vector<std::vector<double>> xs;
    std::vector<std::vector<double>> ys;
    [[nodiscard]] std::size_t size() const noexcept { return xs.size() * ys.size(); }
};

inline SampleSet make_samples(const CoefficientTensor& t, const SampleSpec& spec) {
    SampleSet s;
    if (spec.x_lower.size() != static_cast<std::size_t>(t.n()))
        throw InvalidArgument("sample spec: x box dimension does not match tensor n");
    s.xs = detail::grid_points(spec.x_lower, spec.x_upper, spec.x_points_per_axis);
    if (!spec.explicit_y_only) {
        if (spec.y_lower.size() != static_cast<std::size_t>(t.N()))
            throw InvalidArgument("sample spec: y box dimension does not match tensor N");
        s.ys = detail::grid_points(spec.y_lower, spec.y_upper, spec.y_points_per_axis);
    }
    for (const auto& y : spec.extra_y) {
        if (y.size() != static_cast<std::size_t>(t.N())) throw InvalidArgument("sample spec: extra y has wrong size");
        s.ys.push_back(y);
    }
    if (spec.inject_anchors) {
        for (const auto& a : t.anchors()) {
            if (a.size() != static_cast<std::size_t>(t.N())) continue;
            if (spec.explicit_y_only || detail::inside_box(a, spec.y_lower, spec.y_upper)) s.ys.push_back(a);
        }
    }
    if (s.size() == 0) throw InvalidArgument("sample set is empty");
    return s;
}

struct BoundednessCheck {
    bool passed = false;
    double c = 0.0;
};

struct EllipticityCheck {
    bool passed = false;
    double nu = std::numeric_limits<double>::infinity();
    std::vector<double> argmin_x;
    std::vector<double> argmin_y;
};

struct StaircaseWitness {
    std::vector<double> x;
    std::vector<double> y;
    int alpha = 0;
    int beta = 0;
    double L = 0.0;
    /// true: y^alpha > L but y^beta <= L; false: y^alpha < -L but y^beta >= -L.
    bool upper = true;
};

struct StaircaseCheck {
    bool passed = false;
    std::optional<double> L0;
    /// First violation found at each violated threshold, in increasing L.
    std::vector<StaircaseWitness> witnesses;
    /// Grid thresholds the sample set cannot probe (no sample has a coordinate beyond them).
    std::vector<double> untestable_L;
};

inline BoundednessCheck check_boundedness(const CoefficientTensor& t, const SampleSpec& spec) {
    const auto samples = make_samples(t, spec);
    BoundednessCheck r;
    for (const auto& x : samples.xs)
        for (const auto& y : samples.ys) {
            const auto a = t.evaluate(x, y);
            for (double v : a) r.c = std::max(r.c, std::abs(v));
        }
    r.passed = std::isfinite(r.c);
    return r;
}

/// Smallest eigenvalue of the symmetric part of the flattened matrix at one sample.
inline double ellipticity_at(const CoefficientTensor& t, std::span<const double> x, std::span<const double> y) {
    const Eigen::MatrixXd m = flattened_matrix(t, x, y);
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw EvaluationError({x.begin(), x.end()}, {y.begin(), y.end()}, "eigenvalue computation failed");
    return es.eigenvalues().minCoeff();
}

inline EllipticityCheck check_ellipticity(const CoefficientTensor& t, const SampleSpec& spec) {
    const auto samples = make_samples(t, spec);
    EllipticityCheck r;
    for (const auto& x : samples.xs)
        for (const auto& y : samples.ys) {
            const double lam = ellipticity_at(t, x, y);
            if (lam < r.nu) {
                r.nu = lam;
                r.argmin_x = x;
                r.argmin_y = y;
            }
        }
    r.passed = r.nu > 0.0;
    return r;
}

inline std::vector<double> default_L_grid() {
    std::vector<double> g;
    for (int k = 2; k <= 20; ++k) g.push_back(0.5 * k);
    return g;
}

inline StaircaseCheck check_staircase_support(const CoefficientTensor& t, const SampleSpec& spec,
                                              std::vector<double> L_grid = default_L_grid()) {
    if (L_grid.empty()) throw InvalidArgument("staircase check: empty threshold grid");
    for (std::size_t i = 0; i < L_grid.size(); ++i) {
        if (!(L_grid[i] > 0.0)) throw InvalidArgument("staircase check: thresholds must be positive");
        if (i > 0 && !(L_grid[i] > L_grid[i - 1]))
            throw InvalidArgument("staircase check: thresholds must be increasing");
    }
    const auto samples = make_samples(t, spec);
    const int n = t.n();
    const int N = t.N();

    double reach = 0.0;
    for (const auto& y : samples.ys)
        for (double v : y) reach = std::max(reach, std::abs(v));

    std::vector<bool> testable(L_grid.size());
    for (std::size_t l = 0; l < L_grid.size(); ++l) testable[l] = L_grid[l] < reach;

    std::vector<std::optional<StaircaseWitness>> first(L_grid.size());
    for (const auto& x : samples.xs)
        for (const auto& y : samples.ys) {
            const auto a = t.evaluate(x, y);
            for (int al = 0; al < N; ++al)
                for (int be = 0; be < N; ++be) {
                    if (al == be) continue;
                    bool nonzero = false;
                    for (int i = 0; i < n && !nonzero; ++i)
                        for (int j = 0; j < n && !nonzero; ++j) nonzero = a[t.index(al, be, i, j)] != 0.0;
                    if (!nonzero) continue;
                    for (std::size_t l = 0; l < L_grid.size(); ++l) {
                        if (!testable[l] || first[l]) continue;
                        const double L = L_grid[l];
                        const bool up = y[al] > L && !(y[be] > L);
                        const bool down = y[al] < -L && !(y[be] < -L);
                        if (up || down) first[l] = StaircaseWitness{x, y, al, be, L, up};
                    }
                }
        }

    StaircaseCheck r;
    for (std::size_t l = 0; l < L_grid.size(); ++l) {
        if (!testable[l]) r.untestable_L.push_back(L_grid[l]);
        if (first[l]) r.witnesses.push_back(*first[l]);
    }
    // Smallest candidate from which every larger testable threshold is clean.
    std::optional<double> L0;
    for (std::size_t l = L_grid.size(); l-- > 0;) {
        if (first[l]) break;
        if (testable[l] || L0) L0 = L_grid[l];
    }
    bool any_testable = std::find(testable.begin(), testable.end(), true) != testable.end();
    if (!any_testable) L0 = L_grid.front();
    r.L0 = L0;
    r.passed = L0.has_value();
    return r;
}

struct StructureReport {
    double c = 0.0;
    double nu = 0.0;
    std::optional<double> L0;
    bool passed_A1 = false;
    bool passed_A2 = false;
    bool passed_A3 = false;
    std::string sample_spec;
    std::size_t sample_count = 0;
    std::vector<StaircaseWitness> witnesses;
    std::vector<double> untestable_L;
    std::vector<double> nu_argmin_y;

    [[nodiscard]] bool all_passed() const noexcept { return passed_A1 && passed_A2 && passed_A3; }
};

inline StructureReport check_structure(const CoefficientTensor& t, const SampleSpec& spec,
                                       std::vector<double> L_grid = default_L_grid()) {
    StructureReport r;
    const auto b = check_boundedness(t, spec);
    const auto e = check_ellipticity(t, spec);
    const auto s = check_staircase_support(t, spec, std::move(L_grid));
    r.c = b.c;
    r.passed_A1 = b.passed;
    r.nu = e.nu;
    r.passed_A2 = e.passed;
    r.nu_argmin_y = e.argmin_y;
    r.L0 = s.L0;
    r.passed_A3 = s.passed;
    r.witnesses = s.witnesses;
    r.untestable_L = s.untestable_L;
    r.sample_spec = spec.describe();
    r.sample_count = make_samples(t, spec).size();
    return r;
}

}  // namespace dglab

#pragma once

// Level and radius schedules of the De Giorgi iteration, the Caccioppoli
// constant, and the superlinear recursion J_{h+1} <= A lambda^h J_h^{1+gamma}.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "dglab/errors.hpp"

namespace dglab {

/// Levels k_h = d (1 - 2^{-(h+1)}) increasing to d.
struct LevelSchedule {
    double d = 1.0;

    explicit LevelSchedule(double target) : d(target) {
        if (!(target >= 1.0)) throw InvalidArgument("level schedule: d must be >= 1");
    }
};

/// Radii rho_h = (R/2)(1 + 2^{-h}) decreasing to R/2.
struct RadiusSchedule {
    double R = 0.5;

    explicit RadiusSchedule(double radius) : R(radius) {
        if (!(radius > 0.0 && radius < 1.0)) throw InvalidArgument("radius schedule: R must lie in (0, 1)");
    }
};

struct RadiusPair {
    double rho = 0.0;      ///< rho_h
    double rho_bar = 0.0;  ///< (rho_h + rho_{h+1}) / 2
};

inline double level_at(const LevelSchedule& s, int h) {
    if (h < 0) throw InvalidArgument("level_at: h must be >= 0");
    return s.d * (1.0 - std::ldexp(1.0, -(h + 1)));
}

inline RadiusPair radii_at(const RadiusSchedule& s, int h) {
    if (h < 0) throw InvalidArgument("radii_at: h must be >= 0");
    const double half = 0.5 * s.R;
    return {half * (1.0 + std::ldexp(1.0, -h)), half * (1.0 + 0.75 * std::ldexp(1.0, -h))};
}

/// 16 c^2 n^4 N^4 / nu^2.
inline double caccioppoli_constant(double c, int n, int N, double nu) {
    if (!(nu > 0.0)) throw InvalidArgument("caccioppoli_constant: nu must be positive");
    if (!(c >= 0.0)) throw InvalidArgument("caccioppoli_constant: c must be >= 0");
    if (n < 1 || N < 1) throw InvalidArgument("caccioppoli_constant: n and N must be >= 1");
    const double n2 = static_cast<double>(n) * n;
    const double N2 = static_cast<double>(N) * N;
    return 16.0 * c * c * n2 * n2 * N2 * N2 / (nu * nu);
}

struct RecursionParams {
    double A = 1.0;
    double lambda = 2.0;
    double gamma = 1.0;

    void validate() const {
        if (!(A > 0.0)) throw InvalidArgument("recursion: A must be positive");
        if (!(lambda > 1.0)) throw InvalidArgument("recursion: lambda must exceed 1");
        if (!(gamma > 0.0)) throw InvalidArgument("recursion: gamma must be positive");
    }
};

/// A^{-1/gamma} lambda^{-1/gamma^2}: initial values at or below it drive J_h to 0.
inline double recursion_threshold(const RecursionParams& p) {
    p.validate();
    return std::pow(p.A, -1.0 / p.gamma) * std::pow(p.lambda, -1.0 / (p.gamma * p.gamma));
}

inline constexpr double kDivergenceMagnitude = 1e300;

struct RecursionTrace {
    std::vector<double> J;            ///< J_0 .. J_last
    std::optional<int> diverged_at;   ///< first h with J_h beyond kDivergenceMagnitude
    double threshold = 0.0;
};

/// Extremal trajectory J_{h+1} = A lambda^h J_h^{1+gamma} for h < steps.
/// Stops at the first step whose magnitude exceeds 1e300 (or overflows).
inline RecursionTrace simulate_recursion(const RecursionParams& p, double J0, int steps) {
    p.validate();
    if (!(J0 >= 0.0) || !std::isfinite(J0)) throw InvalidArgument("recursion: J0 must be finite and >= 0");
    if (steps < 1) throw InvalidArgument("recursion: steps must be >= 1");
    RecursionTrace t;
    t.threshold = recursion_threshold(p);
    t.J.reserve(static_cast<std::size_t>(steps) + 1);
    t.J.push_back(J0);
    const double log_A = std::log(p.A);
    const double log_l = std::log(p.lambda);
    const double log_limit = std::log(kDivergenceMagnitude);
    for (int h = 0; h < steps; ++h) {
        const double j = t.J.back();
        double next = 0.0;
        if (j > 0.0) {
            // Direct products stay exact for dyadic data; the log form only
            // decides divergence and covers lambda^h overflowing on its own.
            const double log_next = log_A + h * log_l + (1.0 + p.gamma) * std::log(j);
            next = p.A * std::pow(p.lambda, h) * std::pow(j, 1.0 + p.gamma);
            if (!std::isfinite(next) && log_next < log_limit) next = std::exp(log_next);
            if (log_next > log_limit || !std::isfinite(next) || next > kDivergenceMagnitude) {
                t.J.push_back(std::isfinite(next) ? next : std::numeric_limits<double>::infinity());
                t.diverged_at = h + 1;
                return t;
            }
        }
        t.J.push_back(next);
    }
    return t;
}

}  // namespace dglab

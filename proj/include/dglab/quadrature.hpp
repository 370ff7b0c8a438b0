#pragma once

// Positive-weight quadrature on the reference simplex, obtained by collapsing
// a tensor Gauss-Legendre rule (Duffy transform). Points are stored in
// barycentric coordinates so they map onto any physical simplex directly.
// Weights are fractions of the simplex volume and sum to 1.
//
//   triangle: 3 x 3 points, exact for total degree 4
//   tetrahedron: 4 x 3 x 3 points, exact for total degree 4

#include <array>
#include <cmath>
#include <vector>

#include "dglab/errors.hpp"

namespace dglab {

struct QuadraturePoint {
    std::array<double, 4> bary{};  // n + 1 used
    double weight = 0.0;           // fraction of simplex volume
};

namespace detail {

struct GaussRule01 {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule01 gauss_legendre_01(int points) {
    GaussRule01 r;
    if (points == 3) {
        const double s = std::sqrt(0.6);
        r.nodes = {0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)};
        r.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    } else if (points == 4) {
        const double a = 0.3399810435848562648;
        const double b = 0.8611363115940525752;
        const double wa = 0.6521451548625461426;
        const double wb = 0.3478548451374538574;
        r.nodes = {0.5 * (1.0 - b), 0.5 * (1.0 - a), 0.5 * (1.0 + a), 0.5 * (1.0 + b)};
        r.weights = {0.5 * wb, 0.5 * wa, 0.5 * wa, 0.5 * wb};
    } else {
        throw InvalidArgument("gauss_legendre_01: only 3 and 4 points are tabulated");
    }
    return r;
}

}  // namespace detail

inline std::vector<QuadraturePoint> simplex_quadrature(int n) {
    std::vector<QuadraturePoint> q;
    if (n == 2) {
        const auto g = detail::gauss_legendre_01(3);
        for (std::size_t a = 0; a < g.nodes.size(); ++a)
            for (std::size_t b = 0; b < g.nodes.size(); ++b) {
                const double u = g.nodes[a];
                const double v = g.nodes[b];
                const double x1 = u;
                const double x2 = v * (1.0 - u);
                QuadraturePoint p;
                p.bary = {1.0 - x1 - x2, x1, x2, 0.0};
                p.weight = 2.0 * g.weights[a] * g.weights[b] * (1.0 - u);
                q.push_back(p);
            }
    } else if (n == 3) {
        const auto g4 = detail::gauss_legendre_01(4);
        const auto g3 = detail::gauss_legendre_01(3);
        for (std::size_t a = 0; a < g4.nodes.size(); ++a)
            for (std::size_t b = 0; b < g3.nodes.size(); ++b)
                for (std::size_t c = 0; c < g3.nodes.size(); ++c) {
                    const double u = g4.nodes[a];
                    const double v = g3.nodes[b];
                    const double w = g3.nodes[c];
                    const double x1 = u;
                    const double x2 = v * (1.0 - u);
                    const double x3 = w * (1.0 - u) * (1.0 - v);
                    QuadraturePoint p;
                    p.bary = {1.0 - x1 - x2 - x3, x1, x2, x3};
                    p.weight = 6.0 * g4.weights[a] * g3.weights[b] * g3.weights[c] * (1.0 - u) * (1.0 - u) * (1.0 - v);
                    q.push_back(p);
                }
    } else {
        throw InvalidArgument("simplex_quadrature: n must be 2 or 3");
    }
    return q;
}

}  // namespace dglab

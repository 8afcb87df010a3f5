#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "core.hpp"

namespace stfosls {

/// Largest polynomial degree any rule in this header is built for.
inline constexpr int max_quadrature_degree = 61;

struct Rule1D
{
    std::vector<Real> points; // on [0, 1]
    std::vector<Real> weights;
};

namespace detail {

// P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<Real, Real> legendre_and_derivative(int n, Real x)
{
    Real p0 = 1, p1 = x;
    if (n == 0)
        return {1, 0};
    for (int k = 2; k <= n; ++k) {
        const Real p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1)};
}

inline Rule1D compute_gauss_legendre(int n)
{
    Rule1D rule;
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        Real x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre_and_derivative(n, x);
            const Real dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const Real dp = legendre_and_derivative(n, x).second;
        rule.points[n - 1 - i] = 0.5 * (x + 1);
        rule.weights[n - 1 - i] = 1 / ((1 - x * x) * dp * dp);
    }
    return rule;
}

} // namespace detail

/// Gauss-Legendre rule with n points on [0, 1]; exact for degree 2n - 1.
inline const Rule1D& gauss_legendre(int n)
{
    static const std::vector<Rule1D> cache = [] {
        std::vector<Rule1D> rules(max_quadrature_degree / 2 + 2);
        for (std::size_t n = 1; n < rules.size(); ++n)
            rules[n] = detail::compute_gauss_legendre(static_cast<int>(n));
        return rules;
    }();
    if (n < 1 || n >= static_cast<int>(cache.size()))
        throw InvalidArgument("gauss_legendre: unsupported number of points " + std::to_string(n));
    return cache[n];
}

inline int gauss_points_for_degree(int degree)
{
    if (degree < 0 || degree > max_quadrature_degree)
        throw InvalidArgument("unsupported quadrature degree " + std::to_string(degree));
    return degree / 2 + 1;
}

/// Rule on the reference simplex {xi >= 0, sum xi <= 1} of volume 1/D!.
template <int D>
struct SimplexRule
{
    std::vector<SpacePoint<D>> points;
    std::vector<Real> weights;
};

/// Collapsed (Duffy) tensor Gauss rule, exact for total degree `degree`; all weights positive.
template <int D>
SimplexRule<D> reference_simplex_rule(int degree)
{
    static_assert(D == 1 || D == 2);
    SimplexRule<D> rule;
    if constexpr (D == 1) {
        const auto& g = gauss_legendre(gauss_points_for_degree(degree));
        for (std::size_t i = 0; i < g.points.size(); ++i) {
            rule.points.push_back({g.points[i]});
            rule.weights.push_back(g.weights[i]);
        }
    } else {
        // The Jacobian (1 - u) raises the degree in u by one.
        const auto& gu = gauss_legendre(gauss_points_for_degree(degree + 1));
        const auto& gv = gauss_legendre(gauss_points_for_degree(degree));
        for (std::size_t i = 0; i < gu.points.size(); ++i) {
            const Real u = gu.points[i];
            for (std::size_t j = 0; j < gv.points.size(); ++j) {
                const Real v = gv.points[j];
                rule.points.push_back({u, v * (1 - u)});
                rule.weights.push_back(gu.weights[i] * gv.weights[j] * (1 - u));
            }
        }
    }
    return rule;
}

/// Cached variant of reference_simplex_rule.
template <int D>
const SimplexRule<D>& cached_simplex_rule(int degree)
{
    static const std::vector<SimplexRule<D>> cache = [] {
        std::vector<SimplexRule<D>> rules;
        for (int p = 0; p <= max_quadrature_degree - 1; ++p)
            rules.push_back(reference_simplex_rule<D>(p));
        return rules;
    }();
    if (degree < 0 || degree >= static_cast<int>(cache.size()))
        throw InvalidArgument("unsupported simplex quadrature degree " + std::to_string(degree));
    return cache[degree];
}

/// Physical quadrature rule on a prism J x K.
template <int D>
struct QuadratureRule
{
    std::vector<SpaceTimePoint<D>> points;
    std::vector<Real> weights;
    int degree_t = 0;
    int degree_x = 0;

    std::size_t size() const { return points.size(); }
};

} // namespace stfosls

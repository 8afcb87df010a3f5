#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "core.hpp"
#include "quadrature.hpp"

namespace stfosls {

/// Closed time interval [a, b].
struct Interval
{
    Real a = 0;
    Real b = 1;

    Interval() = default;
    Interval(Real a_, Real b_) : a(a_), b(b_)
    {
        if (!(a < b))
            throw InvalidArgument("Interval requires a < b");
    }

    Real length() const { return b - a; }
    Real midpoint() const { return 0.5 * (a + b); }
    Real map(Real tau) const { return a + tau * (b - a); }
    bool contains(Real t) const { return a <= t && t <= b; }
};

/// Closed d-simplex, d in {1, 2}, given by its d + 1 vertices.
template <int D>
class Simplex
{
    static_assert(D == 1 || D == 2, "only d = 1 and d = 2 are supported");

public:
    using Jacobian = Eigen::Matrix<Real, D, D>;

    Simplex() = default;
    explicit Simplex(const std::array<SpacePoint<D>, D + 1>& vertices) : vertices_(vertices)
    {
        for (int i = 0; i < D; ++i)
            jacobian_.col(i) = to_vec<D>(vertices_[i + 1]) - to_vec<D>(vertices_[0]);
        det_ = jacobian_.determinant();
        if (!(std::abs(det_) > 0))
            throw InvalidArgument("degenerate simplex");
        inverse_ = jacobian_.inverse();
    }

    const std::array<SpacePoint<D>, D + 1>& vertices() const { return vertices_; }
    const SpacePoint<D>& vertex(int i) const { return vertices_[i]; }

    /// Columns are v_i - v_0.
    const Jacobian& jacobian() const { return jacobian_; }
    const Jacobian& inverse_jacobian() const { return inverse_; }
    Real det() const { return det_; }
    Real volume() const { return std::abs(det_) / (D == 1 ? 1 : 2); }

    SpacePoint<D> map(const SpacePoint<D>& xi) const
    {
        return to_point<D>(to_vec<D>(vertices_[0]) + jacobian_ * to_vec<D>(xi));
    }
    SpacePoint<D> pull_back(const SpacePoint<D>& x) const
    {
        return to_point<D>(inverse_ * (to_vec<D>(x) - to_vec<D>(vertices_[0])));
    }

    std::array<Real, D + 1> barycentric(const SpacePoint<D>& x) const
    {
        const SpacePoint<D> xi = pull_back(x);
        std::array<Real, D + 1> lambda{};
        lambda[0] = 1;
        for (int i = 0; i < D; ++i) {
            lambda[i + 1] = xi[i];
            lambda[0] -= xi[i];
        }
        return lambda;
    }

    SpacePoint<D> centroid() const
    {
        SpacePoint<D> c{};
        for (const auto& v : vertices_)
            for (int i = 0; i < D; ++i)
                c[i] += v[i] / (D + 1);
        return c;
    }

    Real diameter() const
    {
        Real h = 0;
        for (int i = 0; i <= D; ++i)
            for (int j = i + 1; j <= D; ++j)
                h = std::max(h, (to_vec<D>(vertices_[i]) - to_vec<D>(vertices_[j])).norm());
        return h;
    }

    Real inradius() const
    {
        if constexpr (D == 1)
            return 0.5 * volume();
        else {
            Real perimeter = 0;
            for (int j = 0; j <= D; ++j)
                perimeter += facet_measure(j);
            return 2 * volume() / perimeter;
        }
    }

    /// Facet j is the one opposite vertex j.
    std::array<int, D> facet_vertices(int j) const
    {
        std::array<int, D> f{};
        int n = 0;
        for (int i = 0; i <= D; ++i)
            if (i != j)
                f[n++] = i;
        return f;
    }

    Real facet_measure(int j) const
    {
        if constexpr (D == 1)
            return 1;
        else {
            const auto f = facet_vertices(j);
            return (to_vec<D>(vertices_[f[0]]) - to_vec<D>(vertices_[f[1]])).norm();
        }
    }

    /// Unit outward normal on facet j.
    Vec<D> outward_normal(int j) const
    {
        // Gradient of lambda_j points inward, orthogonal to facet j.
        Vec<D> g = grad_barycentric(j);
        return -g / g.norm();
    }

    /// Gradient of the barycentric coordinate lambda_j.
    Vec<D> grad_barycentric(int j) const
    {
        Vec<D> g;
        if (j == 0) {
            g = -inverse_.transpose() * Vec<D>::Ones();
        } else {
            g = inverse_.transpose().col(j - 1);
        }
        return g;
    }

private:
    std::array<SpacePoint<D>, D + 1> vertices_{};
    Jacobian jacobian_ = Jacobian::Identity();
    Jacobian inverse_ = Jacobian::Identity();
    Real det_ = 1;
};

/// Geometric prism J x K; the element domain.
template <int D>
struct PrismGeometry
{
    Interval time;
    Simplex<D> base;

    Real volume() const { return time.length() * base.volume(); }
    bool contains(const SpaceTimePoint<D>& p, Real tol = 1e-12) const
    {
        if (p.t < time.a - tol || p.t > time.b + tol)
            return false;
        const auto lambda = base.barycentric(p.x);
        return std::all_of(lambda.begin(), lambda.end(), [&](Real l) { return l >= -tol; });
    }
};

/// Gauss rule in time tensorized with a simplex rule, mapped to the prism.
template <int D>
QuadratureRule<D> make_quadrature(const PrismGeometry<D>& prism, int degree_t, int degree_x)
{
    if (degree_t < 0 || degree_x < 0 || degree_t > max_quadrature_degree ||
        degree_x >= max_quadrature_degree)
        throw InvalidArgument("make_quadrature: unsupported degree");
    const auto& gt = gauss_legendre(gauss_points_for_degree(degree_t));
    const auto& sx = cached_simplex_rule<D>(degree_x);
    const Real jac = prism.time.length() * std::abs(prism.base.det());
    QuadratureRule<D> rule;
    rule.degree_t = degree_t;
    rule.degree_x = degree_x;
    rule.points.reserve(gt.points.size() * sx.points.size());
    rule.weights.reserve(gt.points.size() * sx.points.size());
    for (std::size_t i = 0; i < gt.points.size(); ++i) {
        const Real t = prism.time.map(gt.points[i]);
        for (std::size_t j = 0; j < sx.points.size(); ++j) {
            rule.points.push_back({t, prism.base.map(sx.points[j])});
            rule.weights.push_back(gt.weights[i] * sx.weights[j] * jac);
        }
    }
    return rule;
}

/// Quadrature on the spatial simplex K, mapped; returns points and weights.
template <int D>
SimplexRule<D> make_simplex_quadrature(const Simplex<D>& k, int degree)
{
    const auto& ref = cached_simplex_rule<D>(degree);
    SimplexRule<D> rule;
    const Real jac = std::abs(k.det());
    for (std::size_t j = 0; j < ref.points.size(); ++j) {
        rule.points.push_back(k.map(ref.points[j]));
        rule.weights.push_back(ref.weights[j] * jac);
    }
    return rule;
}

/// Quadrature on facet j of K (a point for d = 1, a segment for d = 2).
template <int D>
SimplexRule<D> make_facet_quadrature(const Simplex<D>& k, int j, int degree)
{
    SimplexRule<D> rule;
    const auto f = k.facet_vertices(j);
    if constexpr (D == 1) {
        rule.points.push_back(k.vertex(f[0]));
        rule.weights.push_back(1);
    } else {
        const auto& g = gauss_legendre(gauss_points_for_degree(degree));
        const Vec<D> a = to_vec<D>(k.vertex(f[0]));
        const Vec<D> b = to_vec<D>(k.vertex(f[1]));
        const Real len = (b - a).norm();
        for (std::size_t i = 0; i < g.points.size(); ++i) {
            rule.points.push_back(to_point<D>(a + g.points[i] * (b - a)));
            rule.weights.push_back(g.weights[i] * len);
        }
    }
    return rule;
}

/// Quadrature on a facet of a prism: 0 bottom, 1 top, 2 + j lateral J x e_j.
template <int D>
QuadratureRule<D> make_prism_facet_quadrature(const PrismGeometry<D>& prism, int facet, int degree_t, int degree_x)
{
    QuadratureRule<D> rule;
    rule.degree_t = degree_t;
    rule.degree_x = degree_x;
    if (facet == 0 || facet == 1) {
        const Real t = facet == 0 ? prism.time.a : prism.time.b;
        const auto s = make_simplex_quadrature<D>(prism.base, degree_x);
        for (std::size_t q = 0; q < s.points.size(); ++q) {
            rule.points.push_back({t, s.points[q]});
            rule.weights.push_back(s.weights[q]);
        }
        return rule;
    }
    if (facet < 0 || facet > D + 2)
        throw InvalidArgument("make_prism_facet_quadrature: bad facet index");
    const auto& g = gauss_legendre(gauss_points_for_degree(degree_t));
    const auto s = make_facet_quadrature<D>(prism.base, facet - 2, degree_x);
    for (std::size_t i = 0; i < g.points.size(); ++i)
        for (std::size_t q = 0; q < s.points.size(); ++q) {
            rule.points.push_back({prism.time.map(g.points[i]), s.points[q]});
            rule.weights.push_back(g.weights[i] * prism.time.length() * s.weights[q]);
        }
    return rule;
}

} // namespace stfosls

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <stfosls/geometry.hpp>

using namespace stfosls;

namespace {

Real factorial(int n)
{
    Real f = 1;
    for (int i = 2; i <= n; ++i)
        f *= i;
    return f;
}

PrismGeometry<2> unit_triangle_prism()
{
    return {Interval(0, 1), Simplex<2>({{{0, 0}, {1, 0}, {0, 1}}})};
}

} // namespace

TEST(Quadrature, GaussLegendreWeightsPositiveAndSumToOne)
{
    for (int n = 1; n <= 20; ++n) {
        const auto& g = gauss_legendre(n);
        Real sum = 0;
        for (Real w : g.weights) {
            EXPECT_GT(w, 0);
            sum += w;
        }
        EXPECT_NEAR(sum, 1.0, 1e-14);
    }
}

TEST(Quadrature, GaussLegendreExactness)
{
    for (int n = 1; n <= 12; ++n) {
        const auto& g = gauss_legendre(n);
        for (int p = 0; p <= 2 * n - 1; ++p) {
            Real s = 0;
            for (std::size_t i = 0; i < g.points.size(); ++i)
                s += g.weights[i] * std::pow(g.points[i], p);
            EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n=" << n << " p=" << p;
        }
    }
}

TEST(Quadrature, TriangleRuleExactOnMonomials)
{
    // int_{ref triangle} xi^a eta^b = a! b! / (a + b + 2)!
    for (int deg = 0; deg <= 12; ++deg) {
        const auto& rule = cached_simplex_rule<2>(deg);
        for (Real w : rule.weights)
            EXPECT_GT(w, 0);
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b) {
                Real s = 0;
                for (std::size_t q = 0; q < rule.points.size(); ++q)
                    s += rule.weights[q] * std::pow(rule.points[q][0], a) * std::pow(rule.points[q][1], b);
                const Real exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                EXPECT_NEAR(s, exact, 1e-13 * exact) << deg << " " << a << " " << b;
            }
    }
}

TEST(Quadrature, VolumeOfUnitPrisms)
{
    const PrismGeometry<1> square{Interval(0, 1), Simplex<1>({{{0}, {1}}})};
    const auto r1 = make_quadrature<1>(square, 0, 0);
    Real v1 = 0;
    for (Real w : r1.weights)
        v1 += w;
    EXPECT_NEAR(v1, 1.0, 1e-15);

    const auto r2 = make_quadrature<2>(unit_triangle_prism(), 0, 0);
    Real v2 = 0;
    for (Real w : r2.weights)
        v2 += w;
    EXPECT_NEAR(v2, 0.5, 1e-15);
}

TEST(Quadrature, TensorProductT2X2)
{
    const PrismGeometry<1> square{Interval(0, 1), Simplex<1>({{{0}, {1}}})};
    const auto rule = make_quadrature<1>(square, 2, 2);
    Real s = 0;
    for (std::size_t q = 0; q < rule.size(); ++q)
        s += rule.weights[q] * rule.points[q].t * rule.points[q].t * rule.points[q].x[0] * rule.points[q].x[0];
    EXPECT_NEAR(s, 1.0 / 9.0, 1e-15);
}

TEST(Quadrature, AffineFunctionEqualsCentroidValueTimesVolume)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<Real> u(-2, 2);
    const PrismGeometry<2> prism{Interval(0.25, 0.75), Simplex<2>({{{0.1, 0.2}, {1.3, 0.4}, {0.5, 1.1}}})};
    const auto rule = make_quadrature<2>(prism, 1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const Real a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        auto f = [&](const SpaceTimePoint<2>& p) { return a + b * p.t + c * p.x[0] + d * p.x[1]; };
        Real s = 0;
        for (std::size_t q = 0; q < rule.size(); ++q)
            s += rule.weights[q] * f(rule.points[q]);
        const auto cx = prism.base.centroid();
        const Real expected = f({prism.time.midpoint(), cx}) * prism.volume();
        EXPECT_NEAR(s, expected, 1e-13 * (1 + std::abs(expected)));
    }
}

TEST(Quadrature, TensorExactnessOnPhysicalPrism)
{
    // Integrate t^p * x^a y^b on a scaled prism against the reference formula.
    const PrismGeometry<2> prism{Interval(0, 2), Simplex<2>({{{0, 0}, {2, 0}, {0, 2}}})};
    for (int p = 0; p <= 6; ++p)
        for (int a = 0; a <= 4; ++a)
            for (int b = 0; a + b <= 4; ++b) {
                const auto rule = make_quadrature<2>(prism, p, a + b);
                Real s = 0;
                for (std::size_t q = 0; q < rule.size(); ++q) {
                    const auto& pt = rule.points[q];
                    s += rule.weights[q] * std::pow(pt.t, p) * std::pow(pt.x[0], a) * std::pow(pt.x[1], b);
                }
                const Real exact = std::pow(2.0, p + 1) / (p + 1) * std::pow(2.0, a + b + 2) * factorial(a) *
                                   factorial(b) / factorial(a + b + 2);
                EXPECT_NEAR(s, exact, 1e-13 * exact);
            }
}

TEST(Quadrature, UnsupportedDegreeThrows)
{
    EXPECT_THROW(make_quadrature<2>(unit_triangle_prism(), -1, 2), InvalidArgument);
    EXPECT_THROW(make_quadrature<2>(unit_triangle_prism(), 2, 500), InvalidArgument);
}

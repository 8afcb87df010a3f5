#pragma once

#include <cmath>
#include <vector>

#include "../core.hpp"

namespace stfosls::fe {

template <int D>
using Exponent = std::array<int, D>;

/// All exponents of total degree <= n (or == n if `homogeneous`), graded ordering.
template <int D>
std::vector<Exponent<D>> monomial_exponents(int n, bool homogeneous = false)
{
    std::vector<Exponent<D>> e;
    for (int deg = homogeneous ? n : 0; deg <= n; ++deg) {
        if constexpr (D == 1) {
            e.push_back({deg});
        } else {
            for (int j = 0; j <= deg; ++j)
                e.push_back({deg - j, j});
        }
    }
    return e;
}

inline int simplex_dim(int d, int n)
{
    return d == 1 ? n + 1 : (n + 1) * (n + 2) / 2;
}

inline Real ipow(Real x, int n)
{
    Real r = 1;
    for (int i = 0; i < n; ++i)
        r *= x;
    return r;
}

/// Value and gradient of a monomial xi^alpha.
template <int D>
struct MonomialValue
{
    Real value = 0;
    Vec<D> grad = Vec<D>::Zero();
};

template <int D>
MonomialValue<D> eval_monomial(const Exponent<D>& a, const SpacePoint<D>& xi)
{
    MonomialValue<D> m;
    if constexpr (D == 1) {
        m.value = ipow(xi[0], a[0]);
        m.grad[0] = a[0] > 0 ? a[0] * ipow(xi[0], a[0] - 1) : 0;
    } else {
        const Real px = ipow(xi[0], a[0]);
        const Real py = ipow(xi[1], a[1]);
        m.value = px * py;
        m.grad[0] = a[0] > 0 ? a[0] * ipow(xi[0], a[0] - 1) * py : 0;
        m.grad[1] = a[1] > 0 ? a[1] * px * ipow(xi[1], a[1] - 1) : 0;
    }
    return m;
}

/// Principal lattice of order n on the reference simplex; order 0 is the centroid.
/// Ordering: second coordinate major, so order 1 lists the vertices 0, e_1, e_2.
template <int D>
std::vector<SpacePoint<D>> principal_lattice(int n)
{
    std::vector<SpacePoint<D>> pts;
    if (n == 0) {
        SpacePoint<D> c;
        c.fill(Real(1) / (D + 1));
        pts.push_back(c);
        return pts;
    }
    if constexpr (D == 1) {
        for (int i = 0; i <= n; ++i)
            pts.push_back({Real(i) / n});
    } else {
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i + j <= n; ++i)
                pts.push_back({Real(i) / n, Real(j) / n});
    }
    return pts;
}

/// Nodal basis of P_n on the reference simplex at the principal lattice of order n.
template <int D>
class LagrangeBasis
{
public:
    LagrangeBasis() = default;
    explicit LagrangeBasis(int degree)
        : degree_(degree), exponents_(monomial_exponents<D>(degree)), nodes_(principal_lattice<D>(degree))
    {
        const int n = static_cast<int>(exponents_.size());
        DenseMatrix v(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                v(i, j) = eval_monomial<D>(exponents_[j], nodes_[i]).value;
        // Column i of coeffs_ holds the monomial coefficients of basis function i.
        coeffs_ = v.inverse();
    }

    int degree() const { return degree_; }
    int size() const { return static_cast<int>(exponents_.size()); }
    const std::vector<SpacePoint<D>>& nodes() const { return nodes_; }

    void eval(const SpacePoint<D>& xi, DenseVector& values, Eigen::Matrix<Real, Eigen::Dynamic, D>& grads) const
    {
        const int n = size();
        DenseVector mv(n);
        Eigen::Matrix<Real, Eigen::Dynamic, D> mg(n, D);
        for (int j = 0; j < n; ++j) {
            const auto m = eval_monomial<D>(exponents_[j], xi);
            mv[j] = m.value;
            mg.row(j) = m.grad.transpose();
        }
        values = coeffs_.transpose() * mv;
        grads = coeffs_.transpose() * mg;
    }

    DenseVector values(const SpacePoint<D>& xi) const
    {
        DenseVector v;
        Eigen::Matrix<Real, Eigen::Dynamic, D> g;
        eval(xi, v, g);
        return v;
    }

private:
    int degree_ = 0;
    std::vector<Exponent<D>> exponents_;
    std::vector<SpacePoint<D>> nodes_;
    DenseMatrix coeffs_;
};

/// L2([0,1])-orthonormal Legendre polynomials sqrt(2m+1) P_m(2 tau - 1), m = 0..n, and derivatives in tau.
inline void legendre_orthonormal(int n, Real tau, DenseVector& values, DenseVector& derivs)
{
    values.resize(n + 1);
    derivs.resize(n + 1);
    const Real x = 2 * tau - 1;
    Real p0 = 1, p1 = x, d0 = 0, d1 = 1;
    for (int m = 0; m <= n; ++m) {
        Real p, d;
        if (m == 0) {
            p = 1;
            d = 0;
        } else if (m == 1) {
            p = x;
            d = 1;
        } else {
            p = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
            d = ((2 * m - 1) * (p1 + x * d1) - (m - 1) * d0) / m;
            p0 = p1;
            p1 = p;
            d0 = d1;
            d1 = d;
        }
        const Real s = std::sqrt(2.0 * m + 1);
        values[m] = s * p;
        derivs[m] = s * 2 * d;
    }
}

} // namespace stfosls::fe

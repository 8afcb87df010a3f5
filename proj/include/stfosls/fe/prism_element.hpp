#pragma once

#include <functional>
#include <string>
#include <vector>

#include "../geometry.hpp"
#include "polynomial.hpp"

namespace stfosls::fe {

template <int D>
using ScalarField = std::function<Real(const SpaceTimePoint<D>&)>;
template <int D>
using VectorField = std::function<Vec<D>(const SpaceTimePoint<D>&)>;

/// A pair v = (v1, v2) of a scalar and a d-vector field on the cylinder.
template <int D>
struct FieldPair
{
    ScalarField<D> v1;
    VectorField<D> v2;
};

/// A field pair together with the derivatives entering G and the U-norm.
template <int D>
struct DifferentiableField : FieldPair<D>
{
    ScalarField<D> dt_v1;
    VectorField<D> grad_v1;
    ScalarField<D> div_v2;

    Real div(const SpaceTimePoint<D>& p) const { return dt_v1(p) + div_v2(p); }
};

template <int D>
struct ShapeValues
{
    DenseVector u1;
    DenseVector u1_dt;
    Eigen::Matrix<Real, Eigen::Dynamic, D> u1_grad;
    Eigen::Matrix<Real, Eigen::Dynamic, D> u2;
    DenseVector u2_div;
};

/// Raviart-Thomas space RT_k on a physical simplex (P_{k+1} for d = 1), with the basis
/// dual to the facet normal moments against P_k(e) and interior moments against P_{k-1}(K)^d.
///
/// Raw functions are monomial fields on the reference simplex carried over by the
/// contravariant Piola map; the dual basis is then computed against the physical DoFs.
template <int D>
class RaviartThomas
{
public:
    RaviartThomas() = default;
    RaviartThomas(const Simplex<D>& k_simplex, int k) : simplex_(k_simplex), k_(k)
    {
        if (k < 1)
            throw InvalidArgument("RaviartThomas: order k >= 1 required");
        build_raw();
        facet_lagrange_ = LagrangeBasis<1>(k);
        const int n = size();
        DenseMatrix m(n, n);
        for (int j = 0; j < n; ++j) {
            auto column = dofs([&](const SpacePoint<D>& x) { return raw_physical(j, x); }, 2 * k + 2);
            m.col(j) = column;
        }
        raw_dof_matrix_ = m;
        dual_ = m.transpose().inverse(); // row i: raw coefficients of basis function i
    }

    int order() const { return k_; }
    const Simplex<D>& simplex() const { return simplex_; }

    int facet_dof_count() const { return D == 1 ? 1 : k_ + 1; }
    int interior_dof_count() const { return D == 1 ? k_ : k_ * (k_ + 1); }
    int size() const { return (D + 1) * facet_dof_count() + interior_dof_count(); }

    /// Local index of the DoF attached to facet j and facet lattice point a.
    int facet_dof(int j, int a) const { return j * facet_dof_count() + a; }
    bool is_facet_dof(int r) const { return r < (D + 1) * facet_dof_count(); }
    int facet_of(int r) const { return r / facet_dof_count(); }

    /// Physical location of facet lattice point a on facet j.
    SpacePoint<D> facet_point(int j, int a) const
    {
        const auto f = simplex_.facet_vertices(j);
        if constexpr (D == 1) {
            return simplex_.vertex(f[0]);
        } else {
            const Real s = facet_lagrange_.nodes()[a][0];
            const Vec<D> p0 = to_vec<D>(simplex_.vertex(f[0]));
            const Vec<D> p1 = to_vec<D>(simplex_.vertex(f[1]));
            return to_point<D>(p0 + s * (p1 - p0));
        }
    }

    /// Values (size x D) and divergences of the dual basis at x.
    void eval(const SpacePoint<D>& x, Eigen::Matrix<Real, Eigen::Dynamic, D>& values, DenseVector& divs) const
    {
        Eigen::Matrix<Real, Eigen::Dynamic, D> rv;
        DenseVector rd;
        eval_raw_physical(x, rv, rd);
        values = dual_ * rv;
        divs = dual_ * rd;
    }

    /// The DoF functionals applied to a vector field w on K; facet/interior integrals of given degree.
    template <class F>
    DenseVector dofs(const F& w, int degree) const
    {
        DenseVector d = DenseVector::Zero(size());
        for (int j = 0; j <= D; ++j) {
            const Vec<D> n = simplex_.outward_normal(j);
            const auto rule = make_facet_quadrature<D>(simplex_, j, degree + k_);
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                const Real wn = Vec<D>(w(rule.points[q])).dot(n) * rule.weights[q];
                const DenseVector qv = facet_test_values(j, rule.points[q]);
                for (int a = 0; a < facet_dof_count(); ++a)
                    d[facet_dof(j, a)] += wn * qv[a];
            }
        }
        const auto interior_exps = monomial_exponents<D>(k_ - 1);
        const auto rule = make_simplex_quadrature<D>(simplex_, degree + k_);
        const int base = (D + 1) * facet_dof_count();
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec<D> wv = w(rule.points[q]);
            const SpacePoint<D> xi = simplex_.pull_back(rule.points[q]);
            int r = base;
            for (int c = 0; c < D; ++c)
                for (const auto& e : interior_exps)
                    d[r++] += wv[c] * eval_monomial<D>(e, xi).value * rule.weights[q];
        }
        return d;
    }

    /// DoF matrix of the raw (Piola-mapped monomial) basis; column j holds the DoFs of raw function j.
    const DenseMatrix& raw_dof_matrix() const { return raw_dof_matrix_; }

    /// Test function q_a of facet j evaluated at a point x on that facet.
    DenseVector facet_test_values(int j, const SpacePoint<D>& x) const
    {
        if constexpr (D == 1) {
            (void)j;
            (void)x;
            return DenseVector::Ones(1);
        } else {
            const auto f = simplex_.facet_vertices(j);
            const Vec<D> p0 = to_vec<D>(simplex_.vertex(f[0]));
            const Vec<D> p1 = to_vec<D>(simplex_.vertex(f[1]));
            const Real s = (to_vec<D>(x) - p0).dot(p1 - p0) / (p1 - p0).squaredNorm();
            return facet_lagrange_.values({s});
        }
    }

    /// Raw function j on the reference simplex (value, reference divergence).
    void eval_raw_reference(const SpacePoint<D>& xi, Eigen::Matrix<Real, Eigen::Dynamic, D>& values,
                            DenseVector& divs) const
    {
        const int n = size();
        values.setZero(n, D);
        divs.setZero(n);
        int r = 0;
        for (int c = 0; c < D; ++c) {
            for (const auto& e : full_) {
                const auto m = eval_monomial<D>(e, xi);
                values(r, c) = m.value;
                divs[r] = m.grad[c];
                ++r;
            }
        }
        if constexpr (D == 2) {
            for (const auto& e : homogeneous_) {
                const auto m = eval_monomial<D>(e, xi);
                values(r, 0) = xi[0] * m.value;
                values(r, 1) = xi[1] * m.value;
                divs[r] = (D + k_) * m.value;
                ++r;
            }
        }
    }

private:
    void build_raw()
    {
        if constexpr (D == 1) {
            full_ = monomial_exponents<D>(k_ + 1);
        } else {
            full_ = monomial_exponents<D>(k_);
            homogeneous_ = monomial_exponents<D>(k_, true);
        }
    }

    void eval_raw_physical(const SpacePoint<D>& x, Eigen::Matrix<Real, Eigen::Dynamic, D>& values,
                           DenseVector& divs) const
    {
        Eigen::Matrix<Real, Eigen::Dynamic, D> rv;
        DenseVector rd;
        eval_raw_reference(simplex_.pull_back(x), rv, rd);
        const Real det = simplex_.det();
        values = rv * simplex_.jacobian().transpose() / det;
        divs = rd / det;
    }

    Vec<D> raw_physical(int j, const SpacePoint<D>& x) const
    {
        Eigen::Matrix<Real, Eigen::Dynamic, D> rv;
        DenseVector rd;
        eval_raw_physical(x, rv, rd);
        return rv.row(j).transpose();
    }

    Simplex<D> simplex_;
    int k_ = 1;
    std::vector<Exponent<D>> full_;
    std::vector<Exponent<D>> homogeneous_;
    LagrangeBasis<1> facet_lagrange_;
    DenseMatrix raw_dof_matrix_;
    DenseMatrix dual_;
};

/// Shape system S_{l,k}(P) = (P_{l+1}(J) x P_k(K)) x (P_l(J) x RT_k(K)) on a prism P = J x K.
///
/// Local ordering: u1 functions first (time lattice major, space lattice minor), then u2
/// functions (Legendre time index major, RT DoF index minor). The u1 basis is nodal, the u2
/// basis is dual to its DoFs.
template <int D>
class PrismElement
{
public:
    PrismElement(const PrismGeometry<D>& geometry, int ell, int k)
        : geometry_(geometry), ell_(ell), k_(k), time_lagrange_(ell + 1), space_lagrange_(k),
          rt_(geometry.base, k)
    {
        if (ell < 0 || k < 1)
            throw InvalidArgument("PrismElement: requires l >= 0, k >= 1");
    }

    const PrismGeometry<D>& geometry() const { return geometry_; }
    int ell() const { return ell_; }
    int k() const { return k_; }
    const RaviartThomas<D>& rt() const { return rt_; }
    const LagrangeBasis<D>& space_lagrange() const { return space_lagrange_; }

    int n_time_u1() const { return ell_ + 2; }
    int n_space_u1() const { return space_lagrange_.size(); }
    int n_u1() const { return n_time_u1() * n_space_u1(); }
    int n_u2() const { return (ell_ + 1) * rt_.size(); }
    int size() const { return n_u1() + n_u2(); }

    int u1_index(int it, int ix) const { return it * n_space_u1() + ix; }
    int u2_index(int m, int r) const { return m * rt_.size() + r; }

    /// Physical location of u1 node (it, ix).
    SpaceTimePoint<D> u1_node(int it, int ix) const
    {
        const Real tau = time_lagrange_.nodes()[it][0];
        return {geometry_.time.map(tau), geometry_.base.map(space_lagrange_.nodes()[ix])};
    }

    void eval(const SpaceTimePoint<D>& p, ShapeValues<D>& out) const
    {
        const Real len = geometry_.time.length();
        const Real tau = (p.t - geometry_.time.a) / len;
        DenseVector lt, lx, pt, dpt;
        Eigen::Matrix<Real, Eigen::Dynamic, 1> dlt;
        Eigen::Matrix<Real, Eigen::Dynamic, D> glx;
        time_lagrange_.eval({tau}, lt, dlt);
        space_lagrange_.eval(geometry_.base.pull_back(p.x), lx, glx);
        const Eigen::Matrix<Real, Eigen::Dynamic, D> grad_x = glx * geometry_.base.inverse_jacobian();

        const int nt = n_time_u1(), nx = n_space_u1();
        out.u1.resize(n_u1());
        out.u1_dt.resize(n_u1());
        out.u1_grad.resize(n_u1(), D);
        for (int it = 0; it < nt; ++it)
            for (int ix = 0; ix < nx; ++ix) {
                const int i = u1_index(it, ix);
                out.u1[i] = lt[it] * lx[ix];
                out.u1_dt[i] = dlt[it] / len * lx[ix];
                out.u1_grad.row(i) = lt[it] * grad_x.row(ix);
            }

        legendre_orthonormal(ell_, tau, pt, dpt);
        pt /= std::sqrt(len);
        Eigen::Matrix<Real, Eigen::Dynamic, D> rv;
        DenseVector rd;
        rt_.eval(p.x, rv, rd);
        const int nr = rt_.size();
        out.u2.resize(n_u2(), D);
        out.u2_div.resize(n_u2());
        for (int m = 0; m <= ell_; ++m)
            for (int r = 0; r < nr; ++r) {
                const int i = u2_index(m, r);
                out.u2.row(i) = pt[m] * rv.row(r);
                out.u2_div[i] = pt[m] * rd[r];
            }
    }

    ShapeValues<D> eval(const SpaceTimePoint<D>& p) const
    {
        ShapeValues<D> v;
        eval(p, v);
        return v;
    }

    Real eval_u1(int i, const SpaceTimePoint<D>& p) const { return eval(p).u1[check_u1(i)]; }
    Real eval_dt_u1(int i, const SpaceTimePoint<D>& p) const { return eval(p).u1_dt[check_u1(i)]; }
    Vec<D> eval_grad_x_u1(int i, const SpaceTimePoint<D>& p) const
    {
        return eval(p).u1_grad.row(check_u1(i)).transpose();
    }
    Vec<D> eval_u2(int i, const SpaceTimePoint<D>& p) const { return eval(p).u2.row(check_u2(i)).transpose(); }
    Real eval_div_x_u2(int i, const SpaceTimePoint<D>& p) const { return eval(p).u2_div[check_u2(i)]; }

    /// u1 DoFs: (endpoint values, moments against P_{l-1}(J)) x (moments against P_k(K)).
    DenseVector u1_dofs(const ScalarField<D>& v1, int degree) const
    {
        const int nx = n_space_u1();
        DenseVector d = DenseVector::Zero(n_u1());
        const auto srule = make_simplex_quadrature<D>(geometry_.base, degree + k_);
        // Point evaluations at both ends of J.
        for (int a = 0; a < 2; ++a) {
            const Real t = a == 0 ? geometry_.time.a : geometry_.time.b;
            for (std::size_t q = 0; q < srule.points.size(); ++q) {
                const DenseVector lx = space_lagrange_.values(geometry_.base.pull_back(srule.points[q]));
                d.segment(a * nx, nx) += v1({t, srule.points[q]}) * srule.weights[q] * lx;
            }
        }
        if (ell_ >= 1) {
            const auto& g = gauss_legendre(gauss_points_for_degree(degree + ell_));
            const Real len = geometry_.time.length();
            DenseVector pt, dpt;
            for (std::size_t i = 0; i < g.points.size(); ++i) {
                legendre_orthonormal(ell_ - 1, g.points[i], pt, dpt);
                pt /= std::sqrt(len);
                const Real t = geometry_.time.map(g.points[i]);
                for (std::size_t q = 0; q < srule.points.size(); ++q) {
                    const DenseVector lx = space_lagrange_.values(geometry_.base.pull_back(srule.points[q]));
                    const Real w = g.weights[i] * len * srule.weights[q] * v1({t, srule.points[q]});
                    for (int a = 0; a < ell_; ++a)
                        d.segment((2 + a) * nx, nx) += w * pt[a] * lx;
                }
            }
        }
        return d;
    }

    /// u2 DoFs: (moments against P_l(J)) x (RT_k DoFs).
    DenseVector u2_dofs(const VectorField<D>& v2, int degree) const
    {
        const int nr = rt_.size();
        DenseVector d = DenseVector::Zero(n_u2());
        const auto& g = gauss_legendre(gauss_points_for_degree(degree + ell_));
        const Real len = geometry_.time.length();
        DenseVector pt, dpt;
        for (std::size_t i = 0; i < g.points.size(); ++i) {
            legendre_orthonormal(ell_, g.points[i], pt, dpt);
            pt /= std::sqrt(len);
            const Real t = geometry_.time.map(g.points[i]);
            const DenseVector r = rt_.dofs([&](const SpacePoint<D>& x) { return v2({t, x}); }, degree);
            for (int m = 0; m <= ell_; ++m)
                d.segment(m * nr, nr) += g.weights[i] * len * pt[m] * r;
        }
        return d;
    }

    /// Column j: u1 DoFs of the j-th u1 basis function.
    DenseMatrix u1_dof_matrix() const
    {
        DenseMatrix m(n_u1(), n_u1());
        for (int j = 0; j < n_u1(); ++j)
            m.col(j) = u1_dofs([&](const SpaceTimePoint<D>& p) { return eval_u1(j, p); }, 2 * (k_ + ell_) + 2);
        return m;
    }

    DenseMatrix u2_dof_matrix() const
    {
        DenseMatrix m(n_u2(), n_u2());
        for (int j = 0; j < n_u2(); ++j)
            m.col(j) = u2_dofs([&](const SpaceTimePoint<D>& p) { return eval_u2(j, p); }, 2 * (k_ + ell_) + 2);
        return m;
    }

    /// 2-norm condition number of the full (block diagonal) DoF matrix.
    Real dof_condition_number() const
    {
        DenseMatrix m = DenseMatrix::Zero(size(), size());
        m.topLeftCorner(n_u1(), n_u1()) = u1_dof_matrix();
        m.bottomRightCorner(n_u2(), n_u2()) = u2_dof_matrix();
        Eigen::JacobiSVD<DenseMatrix> svd(m);
        const auto& s = svd.singularValues();
        return s[0] / s[s.size() - 1];
    }

private:
    int check_u1(int i) const
    {
        if (i < 0 || i >= n_u1())
            throw std::out_of_range("u1 basis index " + std::to_string(i));
        return i;
    }
    int check_u2(int i) const
    {
        if (i < 0 || i >= n_u2())
            throw std::out_of_range("u2 basis index " + std::to_string(i));
        return i;
    }

    PrismGeometry<D> geometry_;
    int ell_;
    int k_;
    LagrangeBasis<1> time_lagrange_;
    LagrangeBasis<D> space_lagrange_;
    RaviartThomas<D> rt_;
};

/// Field represented by local coefficients (u1 block followed by u2 block) on one element.
template <int D>
struct LocalField
{
    Real v1 = 0;
    Real dt_v1 = 0;
    Vec<D> grad_v1 = Vec<D>::Zero();
    Vec<D> v2 = Vec<D>::Zero();
    Real div_v2 = 0;

    Real div() const { return dt_v1 + div_v2; }
};

template <int D>
LocalField<D> evaluate(const PrismElement<D>& element, const DenseVector& coeffs, const SpaceTimePoint<D>& p)
{
    const auto s = element.eval(p);
    const int n1 = element.n_u1();
    const int n2 = element.n_u2();
    LocalField<D> f;
    f.v1 = s.u1.dot(coeffs.head(n1));
    f.dt_v1 = s.u1_dt.dot(coeffs.head(n1));
    f.grad_v1 = s.u1_grad.transpose() * coeffs.head(n1);
    f.v2 = s.u2.transpose() * coeffs.tail(n2);
    f.div_v2 = s.u2_div.dot(coeffs.tail(n2));
    return f;
}

/// The local interpolant: the unique element of S_{l,k}(P) sharing all DoFs with v.
/// DoF integrals use Gauss rules of the given exactness degree.
template <int D>
DenseVector local_interpolant(const PrismElement<D>& element, const FieldPair<D>& v, int degree = 20)
{
    DenseVector c(element.size());
    const auto lu1 = element.u1_dof_matrix().fullPivLu();
    if (!lu1.isInvertible())
        throw Error("local_interpolant: singular u1 DoF matrix");
    const auto lu2 = element.u2_dof_matrix().fullPivLu();
    if (!lu2.isInvertible())
        throw Error("local_interpolant: singular u2 DoF matrix");
    c.head(element.n_u1()) = lu1.solve(element.u1_dofs(v.v1, degree));
    c.tail(element.n_u2()) = lu2.solve(element.u2_dofs(v.v2, degree));
    return c;
}

/// Element of P_l(J) x P_k(K): Legendre in time times Lagrange in space.
template <int D>
class TensorPolynomial
{
public:
    TensorPolynomial(const PrismGeometry<D>& geometry, int ell, int k, DenseVector coeffs = {})
        : geometry_(geometry), ell_(ell), space_(k), coeffs_(std::move(coeffs))
    {
        if (coeffs_.size() == 0)
            coeffs_ = DenseVector::Zero(size());
    }

    int size() const { return (ell_ + 1) * space_.size(); }
    const DenseVector& coefficients() const { return coeffs_; }
    DenseVector& coefficients() { return coeffs_; }

    DenseVector basis(const SpaceTimePoint<D>& p) const
    {
        const Real len = geometry_.time.length();
        DenseVector pt, dpt;
        legendre_orthonormal(ell_, (p.t - geometry_.time.a) / len, pt, dpt);
        pt /= std::sqrt(len);
        const DenseVector lx = space_.values(geometry_.base.pull_back(p.x));
        DenseVector b(size());
        for (int m = 0; m <= ell_; ++m)
            b.segment(m * space_.size(), space_.size()) = pt[m] * lx;
        return b;
    }

    Real operator()(const SpaceTimePoint<D>& p) const { return basis(p).dot(coeffs_); }

private:
    PrismGeometry<D> geometry_;
    int ell_;
    LagrangeBasis<D> space_;
    DenseVector coeffs_;
};

/// L2(P)-orthogonal projection onto P_l(J) x P_k(K).
template <int D>
TensorPolynomial<D> local_l2_project(const PrismGeometry<D>& geometry, int ell, int k, const ScalarField<D>& w,
                                     int degree = 20)
{
    TensorPolynomial<D> result(geometry, ell, k);
    const int n = result.size();
    DenseMatrix mass = DenseMatrix::Zero(n, n);
    DenseVector rhs = DenseVector::Zero(n);
    const auto rule = make_quadrature<D>(geometry, degree, degree);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const DenseVector b = result.basis(rule.points[q]);
        mass.noalias() += rule.weights[q] * b * b.transpose();
        rhs += rule.weights[q] * w(rule.points[q]) * b;
    }
    result.coefficients() = mass.ldlt().solve(rhs);
    return result;
}

} // namespace stfosls::fe

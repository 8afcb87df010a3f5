#pragma once

#include <map>
#include <memory>

#include "../mesh/prismatic_mesh.hpp"
#include "problem.hpp"

namespace stfosls::assembly {

/// Assembly rule exactness: products of degree <= k + 1 factors plus a margin of 2.
inline int assembly_degree(int k) { return 2 * (k + 1) + 2; }

/// Data and estimator rule exactness; raised so that singular data is not under-integrated.
inline constexpr int data_degree = 10;

/// Shape-function rows at the points of one quadrature rule; every matrix is nq x n.
template <int D>
struct TabulatedRule
{
    std::vector<SpaceTimePoint<D>> points; // on the class representative
    DenseVector weights;
    DenseMatrix v1;                  // u1
    DenseMatrix div;                 // dt u1 + div_x u2
    std::array<DenseMatrix, D> grad; // component c of grad_x u1
    std::array<DenseMatrix, D> vec;  // component c of u2
    std::array<DenseMatrix, D> flux; // component c of u2 + grad_x u1

    std::size_t size() const { return points.size(); }
};

/// Tabulated element data shared by all prisms that are translates of each other. The shape
/// functions are affine-covariant, so values at corresponding points coincide.
template <int D>
struct ElementClass
{
    PrismGeometry<D> geometry;
    int n_u1 = 0;
    int n = 0;
    TabulatedRule<D> volume;
    TabulatedRule<D> data;
    TabulatedRule<D> initial;      // bottom facet, assembly degree
    TabulatedRule<D> initial_data; // bottom facet, data degree
    DenseMatrix volume_matrix;     // integral of div div + flux . flux
    DenseMatrix initial_matrix;    // integral of u1 u1 over the bottom facet
};

/// Cache of ElementClass keyed by the exact time length and base Jacobian.
template <int D>
class ElementTable
{
public:
    ElementTable(int ell, int k) : ell_(ell), k_(k) {}

    int ell() const { return ell_; }
    int k() const { return k_; }
    std::size_t n_classes() const { return classes_.size(); }

    const ElementClass<D>& get(const PrismGeometry<D>& g)
    {
        Key key{};
        key[0] = g.time.length();
        const auto& jac = g.base.jacobian();
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j)
                key[1 + i * D + j] = jac(i, j);
        auto it = classes_.find(key);
        if (it == classes_.end())
            it = classes_.emplace(key, build(g)).first;
        return *it->second;
    }

    /// Point q of a class rule carried over to the prism g of that class.
    static SpaceTimePoint<D> map_point(const ElementClass<D>& c, const PrismGeometry<D>& g,
                                       const SpaceTimePoint<D>& q)
    {
        SpaceTimePoint<D> p;
        p.t = q.t + (g.time.a - c.geometry.time.a);
        for (int i = 0; i < D; ++i)
            p.x[i] = q.x[i] + (g.base.vertex(0)[i] - c.geometry.base.vertex(0)[i]);
        return p;
    }

private:
    using Key = std::array<Real, 1 + D * D>;

    std::unique_ptr<ElementClass<D>> build(const PrismGeometry<D>& g) const
    {
        auto c = std::make_unique<ElementClass<D>>();
        const fe::PrismElement<D> e(g, ell_, k_);
        c->geometry = g;
        c->n_u1 = e.n_u1();
        c->n = e.size();
        const int deg = assembly_degree(k_);
        c->volume = tabulate(e, make_quadrature<D>(g, deg, deg));
        c->data = tabulate(e, make_quadrature<D>(g, data_degree, data_degree));
        c->initial = tabulate(e, make_prism_facet_quadrature<D>(g, 0, deg, deg));
        c->initial_data = tabulate(e, make_prism_facet_quadrature<D>(g, 0, data_degree, data_degree));

        const auto& v = c->volume;
        const auto w = v.weights.asDiagonal();
        DenseMatrix a = v.div.transpose() * w * v.div;
        for (int i = 0; i < D; ++i)
            a += v.flux[i].transpose() * w * v.flux[i];
        c->volume_matrix = 0.5 * (a + a.transpose());
        const auto& b = c->initial;
        const DenseMatrix m = b.v1.transpose() * b.weights.asDiagonal() * b.v1;
        c->initial_matrix = 0.5 * (m + m.transpose());
        return c;
    }

    static TabulatedRule<D> tabulate(const fe::PrismElement<D>& e, const QuadratureRule<D>& rule)
    {
        const int nq = static_cast<int>(rule.size());
        const int n = e.size(), n1 = e.n_u1();
        TabulatedRule<D> t;
        t.points = rule.points;
        t.weights = Eigen::Map<const DenseVector>(rule.weights.data(), nq);
        t.v1 = DenseMatrix::Zero(nq, n);
        t.div = DenseMatrix::Zero(nq, n);
        for (int c = 0; c < D; ++c) {
            t.grad[c] = DenseMatrix::Zero(nq, n);
            t.vec[c] = DenseMatrix::Zero(nq, n);
        }
        fe::ShapeValues<D> s;
        for (int q = 0; q < nq; ++q) {
            e.eval(rule.points[q], s);
            t.v1.row(q).head(n1) = s.u1.transpose();
            t.div.row(q).head(n1) = s.u1_dt.transpose();
            t.div.row(q).tail(n - n1) = s.u2_div.transpose();
            for (int c = 0; c < D; ++c) {
                t.grad[c].row(q).head(n1) = s.u1_grad.col(c).transpose();
                t.vec[c].row(q).tail(n - n1) = s.u2.col(c).transpose();
            }
        }
        for (int c = 0; c < D; ++c)
            t.flux[c] = t.grad[c] + t.vec[c];
        return t;
    }

    int ell_;
    int k_;
    std::map<Key, std::unique_ptr<ElementClass<D>>> classes_;
};

} // namespace stfosls::assembly

#pragma once

#include <cmath>
#include <optional>
#include <ostream>

#include <Eigen/Sparse>

#include "../space/discrete_field.hpp"
#include "element_table.hpp"

namespace stfosls {

using SparseMatrix = Eigen::SparseMatrix<Real>;

} // namespace stfosls

namespace stfosls::assembly {

/// Components of G u = (dt u1 + div_x u2, -u2 - grad_x u1, u1(0, .)) at one point.
template <int D>
struct GValue
{
    Real r1 = 0;
    Vec<D> r2 = Vec<D>::Zero();
    std::optional<Real> r0; // present only for prisms whose time interval starts at 0
};

/// G applied to local coefficients on one prism; the trace uses the point's spatial part.
template <int D>
GValue<D> apply_G_local(const fe::PrismElement<D>& element, const DenseVector& coeffs, const SpaceTimePoint<D>& p)
{
    const auto f = fe::evaluate(element, coeffs, p);
    GValue<D> g;
    g.r1 = f.div();
    g.r2 = -f.v2 - f.grad_v1;
    if (element.geometry().time.a == 0)
        g.r0 = fe::evaluate(element, coeffs, {0.0, p.x}).v1;
    return g;
}

/// Normal equations A x = b of the least-squares problem over the free DoFs.
struct SparseSystem
{
    SparseMatrix A;
    DenseVector b;
};

namespace detail {

template <int D>
Real checked(Real v, const mesh::Prism<D>& p, const char* what)
{
    if (!std::isfinite(v))
        throw DataError(std::string("non-finite ") + what + " at a quadrature point", p.id);
    return v;
}

/// Local load: integral of f1 div phi - f2 . (phi2 + grad phi1), plus u0 phi1(0) at t = 0.
template <int D>
DenseVector local_load(const ElementClass<D>& c, const mesh::Prism<D>& p, const ProblemSpec<D>& problem)
{
    const auto g = p.geometry();
    const auto& r = c.data;
    const int nq = static_cast<int>(r.size());
    DenseVector w1(nq);
    std::array<DenseVector, D> w2;
    for (int i = 0; i < D; ++i)
        w2[i].resize(nq);
    for (int q = 0; q < nq; ++q) {
        const auto x = ElementTable<D>::map_point(c, g, r.points[q]);
        w1[q] = r.weights[q] * checked(problem.f1(x), p, "f1");
        const Vec<D> f2 = problem.f2(x);
        for (int i = 0; i < D; ++i)
            w2[i][q] = -r.weights[q] * checked(f2[i], p, "f2");
    }
    DenseVector b = r.div.transpose() * w1;
    for (int i = 0; i < D; ++i)
        b.noalias() += r.flux[i].transpose() * w2[i];
    if (p.starts_at_zero()) {
        const auto& r0 = c.initial_data;
        DenseVector w0(r0.size());
        for (std::size_t q = 0; q < r0.size(); ++q) {
            const auto x = ElementTable<D>::map_point(c, g, r0.points[q]);
            w0[q] = r0.weights[q] * checked(problem.u0(x.x), p, "u0");
        }
        b.noalias() += r0.v1.transpose() * w0;
    }
    return b;
}

} // namespace detail

/// A = C^T A_hat C and b = C^T b_hat, where hats are element-wise least-squares contributions
/// and C maps free DoFs to local DoFs.
template <int D>
SparseSystem assemble(const space::DiscreteSpace<D>& space, const ProblemSpec<D>& problem, ElementTable<D>& table)
{
    if (table.ell() != space.ell() || table.k() != space.k())
        throw InvalidArgument("assemble: element table does not match the space");
    const auto& mesh = space.mesh();
    const auto& dm = space.dof_map();
    const auto& cm = space.constraints();
    SparseSystem sys;
    sys.b = DenseVector::Zero(space.n_dofs());
    std::vector<Eigen::Triplet<Real, Index>> triplets;
    if (mesh.size() > 0) {
        const Index n_local = dm.local_offset[1] - dm.local_offset[0];
        triplets.reserve(mesh.size() * n_local * n_local);
    }
    DenseMatrix a;
    for (std::size_t pos = 0; pos < mesh.size(); ++pos) {
        const auto& p = mesh.prism(pos);
        const auto& c = table.get(p.geometry());
        a = c.volume_matrix;
        if (p.starts_at_zero())
            a += c.initial_matrix;
        const DenseVector bl = detail::local_load(c, p, problem);
        const Index off = dm.local_offset[pos];
        for (int i = 0; i < c.n; ++i) {
            const auto* bi = cm.begin(off + i);
            const auto* ei = cm.end(off + i);
            for (auto e = bi; e != ei; ++e)
                sys.b[e->col] += e->val * bl[i];
            for (int j = 0; j < c.n; ++j) {
                const Real v = a(i, j);
                if (v == 0)
                    continue;
                for (auto e = bi; e != ei; ++e)
                    for (auto f = cm.begin(off + j); f != cm.end(off + j); ++f)
                        triplets.emplace_back(e->col, f->col, (e->val * f->val) * v);
            }
        }
    }
    sys.A.resize(space.n_dofs(), space.n_dofs());
    sys.A.setFromTriplets(triplets.begin(), triplets.end());
    sys.A.makeCompressed();
    return sys;
}

template <int D>
SparseSystem assemble(const space::DiscreteSpace<D>& space, const ProblemSpec<D>& problem)
{
    ElementTable<D> table(space.ell(), space.k());
    return assemble(space, problem, table);
}

/// Coordinate dump, one `row col value` line per stored entry, 0-based, 17 significant digits.
inline void write_matrix(std::ostream& os, const SparseMatrix& a)
{
    const auto old = os.precision(17);
    for (Index c = 0; c < a.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(a, c); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    os.precision(old);
}

} // namespace stfosls::assembly

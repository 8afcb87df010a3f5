#pragma once

#include <algorithm>
#include <numeric>

#include "../assembly/assemble.hpp"

namespace stfosls::adapt {

/// Local indicators eta(P; f, v) and the global estimator eta(f, v) = ||f - G v||_L.
struct IndicatorSet
{
    std::vector<Index> ids;  // element ids, in mesh order
    std::vector<Real> local; // eta(P) >= 0
    Real total = 0;          // eta, accumulated component-wise over the whole mesh

    Real sum_of_squares() const
    {
        Real s = 0;
        for (Real e : local)
            s += e * e;
        return s;
    }

    /// |eta^2 - sum_P eta(P)^2| / eta^2; zero when eta vanishes.
    Real partition_defect() const
    {
        const Real t2 = total * total;
        return t2 == 0 ? std::abs(sum_of_squares()) : std::abs(t2 - sum_of_squares()) / t2;
    }
};

/// Accumulates the squared residual components of one element; the global estimator sums the
/// components separately so that the partition identity is a genuine cross-check.
struct ResidualAccumulator
{
    long double div = 0;   // ||f1 - div v||^2
    long double flux = 0;  // ||f2 + v2 + grad_x v1||^2
    long double trace = 0; // ||u0 - v1(0, .)||^2

    void add_element(Real d, Real f, Real t, Real& local)
    {
        div += d;
        flux += f;
        trace += t;
        local = std::sqrt(d + f + t);
    }

    Real total() const { return static_cast<Real>(std::sqrt(div + flux + trace)); }
};

/// eta(P)^2 = ||f1 - (dt v1 + div_x v2)||^2_P + ||f2 + v2 + grad_x v1||^2_P
///          + ||u0 - v1(0, .)||^2 over K x {0} for prisms starting at t = 0.
template <int D>
IndicatorSet estimate(const space::DiscreteField<D>& field, const assembly::ProblemSpec<D>& problem,
                      assembly::ElementTable<D>& table)
{
    const auto& space = field.space();
    const auto& mesh = space.mesh();
    IndicatorSet out;
    out.ids.resize(mesh.size());
    out.local.resize(mesh.size());
    ResidualAccumulator acc;
    for (std::size_t pos = 0; pos < mesh.size(); ++pos) {
        const auto& p = mesh.prism(pos);
        const auto g = p.geometry();
        const auto& c = table.get(g);
        const DenseVector coeffs = field.local(pos);
        const auto& r = c.data;
        const DenseVector div = r.div * coeffs;
        std::array<DenseVector, D> flux;
        for (int i = 0; i < D; ++i)
            flux[i] = r.flux[i] * coeffs;
        Real e_div = 0, e_flux = 0, e_trace = 0;
        for (std::size_t q = 0; q < r.size(); ++q) {
            const auto x = assembly::ElementTable<D>::map_point(c, g, r.points[q]);
            const Real d = assembly::detail::checked(problem.f1(x), p, "f1") - div[q];
            const Vec<D> f2 = problem.f2(x);
            Real s = 0;
            for (int i = 0; i < D; ++i) {
                const Real fi = assembly::detail::checked(f2[i], p, "f2") + flux[i][q];
                s += fi * fi;
            }
            e_div += r.weights[q] * d * d;
            e_flux += r.weights[q] * s;
        }
        if (p.starts_at_zero()) {
            const auto& r0 = c.initial_data;
            const DenseVector v1 = r0.v1 * coeffs;
            for (std::size_t q = 0; q < r0.size(); ++q) {
                const auto x = assembly::ElementTable<D>::map_point(c, g, r0.points[q]);
                const Real d = assembly::detail::checked(problem.u0(x.x), p, "u0") - v1[q];
                e_trace += r0.weights[q] * d * d;
            }
        }
        out.ids[pos] = p.id;
        acc.add_element(e_div, e_flux, e_trace, out.local[pos]);
    }
    out.total = acc.total();
    return out;
}

/// Graph-norm error ||u - v||_U with ||w||_U^2 = ||w1||^2 + ||grad_x w1||^2 + ||w2||^2 + ||div w||^2.
template <int D>
Real u_norm_error(const space::DiscreteField<D>& field, const fe::DifferentiableField<D>& exact,
                  assembly::ElementTable<D>& table)
{
    const auto& mesh = field.space().mesh();
    long double sum = 0;
    for (std::size_t pos = 0; pos < mesh.size(); ++pos) {
        const auto g = mesh.prism(pos).geometry();
        const auto& c = table.get(g);
        const DenseVector coeffs = field.local(pos);
        const auto& r = c.data;
        const DenseVector v1 = r.v1 * coeffs;
        const DenseVector div = r.div * coeffs;
        std::array<DenseVector, D> grad, vec;
        for (int i = 0; i < D; ++i) {
            grad[i] = r.grad[i] * coeffs;
            vec[i] = r.vec[i] * coeffs;
        }
        Real local = 0;
        for (std::size_t q = 0; q < r.size(); ++q) {
            const auto x = assembly::ElementTable<D>::map_point(c, g, r.points[q]);
            const Vec<D> gu = exact.grad_v1(x);
            const Vec<D> u2 = exact.v2(x);
            Real s = std::pow(exact.v1(x) - v1[q], 2) + std::pow(exact.div(x) - div[q], 2);
            for (int i = 0; i < D; ++i)
                s += std::pow(gu[i] - grad[i][q], 2) + std::pow(u2[i] - vec[i][q], 2);
            local += r.weights[q] * s;
        }
        sum += local;
    }
    return static_cast<Real>(std::sqrt(sum));
}

/// Minimal-cardinality Doerfler set: the shortest prefix of the indicators sorted by value
/// (descending, ties by ascending id) whose squares reach theta * eta^2. Returns element ids.
inline std::vector<Index> doerfler_mark(const std::vector<Real>& local, const std::vector<Index>& ids, Real theta)
{
    if (!(theta > 0 && theta <= 1))
        throw InvalidArgument("doerfler_mark: theta must lie in (0, 1]");
    if (local.size() != ids.size())
        throw InvalidArgument("doerfler_mark: indicator and id lists differ in size");
    std::vector<std::size_t> order(local.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (local[a] != local[b])
            return local[a] > local[b];
        return ids[a] < ids[b];
    });
    std::vector<Index> marked;
    if (theta == 1) {
        for (std::size_t i : order)
            if (local[i] > 0)
                marked.push_back(ids[i]);
        return marked;
    }
    // Total in sorted order so the full prefix reproduces it exactly.
    Real total = 0;
    for (std::size_t i : order)
        total += local[i] * local[i];
    const Real goal = theta * total;
    Real acc = 0;
    for (std::size_t i : order) {
        if (acc >= goal && !marked.empty())
            break;
        if (local[i] == 0)
            break;
        acc += local[i] * local[i];
        marked.push_back(ids[i]);
    }
    return marked;
}

inline std::vector<Index> doerfler_mark(const IndicatorSet& indicators, Real theta)
{
    return doerfler_mark(indicators.local, indicators.ids, theta);
}

} // namespace stfosls::adapt

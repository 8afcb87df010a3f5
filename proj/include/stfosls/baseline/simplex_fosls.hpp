#pragma once

#include "../adapt/adaptive_loop.hpp"
#include "../mesh/nvb.hpp"

namespace stfosls::baseline {

/// Continuous P1 x P1 space on a conforming triangulation of the (t, x) rectangle, with
/// u1 = 0 on x in {0, 1}. Local order per triangle: u1 at v0, v1, v2, then u2 at v0, v1, v2.
class SimplexSpace
{
public:
    explicit SimplexSpace(const mesh::TriMesh& m) : mesh_(m), triangles_(m.active())
    {
        std::vector<char> used(m.n_vertices(), 0);
        for (int id : triangles_)
            for (int v : m.triangle(id).v)
                used[v] = 1;
        u1_.assign(m.n_vertices(), -1);
        u2_.assign(m.n_vertices(), -1);
        Index next = 0;
        for (int v = 0; v < m.n_vertices(); ++v) {
            const Real x = m.vertex(v)[1];
            if (used[v] && x != 0 && x != 1)
                u1_[v] = next++;
        }
        for (int v = 0; v < m.n_vertices(); ++v)
            if (used[v])
                u2_[v] = next++;
        n_dofs_ = next;
    }
    // The space refers to the mesh; a temporary would dangle.
    explicit SimplexSpace(mesh::TriMesh&&) = delete;

    const mesh::TriMesh& mesh() const { return mesh_; }
    const std::vector<int>& triangles() const { return triangles_; }
    Index n_dofs() const { return n_dofs_; }

    /// Free DoF of local function i on triangle id, or -1 for a fixed u1 value.
    Index dof(int id, int i) const
    {
        const int v = mesh_.triangle(id).v[i % 3];
        return i < 3 ? u1_[v] : u2_[v];
    }

private:
    const mesh::TriMesh& mesh_;
    std::vector<int> triangles_;
    std::vector<Index> u1_;
    std::vector<Index> u2_;
    Index n_dofs_ = 0;
};

namespace detail {

/// Rows of G on a P1 triangle at reference points; barycentric gradients are constant.
struct TriangleRows
{
    Simplex<2> k;
    Eigen::Matrix<Real, 6, 1> div;              // dt u1 + dx u2, constant
    std::array<Real, 3> dx{};                  // dx of the barycentric coordinates
    std::vector<SpacePoint<2>> points;         // (t, x)
    std::vector<Real> weights;
    std::vector<Eigen::Matrix<Real, 6, 1>> flux; // u2 + dx u1 per point
    std::vector<std::array<Real, 3>> lambda;
};

inline TriangleRows triangle_rows(const Simplex<2>& k, int degree)
{
    TriangleRows r;
    r.k = k;
    for (int j = 0; j < 3; ++j) {
        const Vec<2> g = k.grad_barycentric(j);
        r.div[j] = g[0];
        r.div[3 + j] = g[1];
        r.dx[j] = g[1];
    }
    const auto rule = make_simplex_quadrature<2>(k, degree);
    r.points = rule.points;
    r.weights = rule.weights;
    for (const auto& p : rule.points) {
        const auto l = k.barycentric(p);
        Eigen::Matrix<Real, 6, 1> f;
        for (int j = 0; j < 3; ++j) {
            f[j] = r.dx[j];
            f[3 + j] = l[j];
        }
        r.flux.push_back(f);
        r.lambda.push_back(l);
    }
    return r;
}

/// Edges of the triangle on t = 0 as pairs of local vertex indices.
inline std::vector<std::pair<int, int>> initial_edges(const Simplex<2>& k)
{
    std::vector<std::pair<int, int>> e;
    for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3;
        if (k.vertex(a)[0] == 0 && k.vertex(b)[0] == 0)
            e.emplace_back(a, b);
    }
    return e;
}

/// Gauss points (x, weight, lambda_a, lambda_b) along an edge on t = 0.
template <class F>
void for_initial_edge(const Simplex<2>& k, std::pair<int, int> e, int degree, F&& f)
{
    const auto& g = gauss_legendre(gauss_points_for_degree(degree));
    const Real xa = k.vertex(e.first)[1], xb = k.vertex(e.second)[1];
    for (std::size_t q = 0; q < g.points.size(); ++q) {
        const Real s = g.points[q];
        f(xa + s * (xb - xa), g.weights[q] * std::abs(xb - xa), 1 - s, s);
    }
}

inline SpaceTimePoint<1> to_st(const SpacePoint<2>& p) { return {p[0], {p[1]}}; }

} // namespace detail

inline assembly::SparseSystem assemble(const SimplexSpace& s, const assembly::ProblemSpec<1>& problem)
{
    assembly::SparseSystem sys;
    sys.b = DenseVector::Zero(s.n_dofs());
    std::vector<Eigen::Triplet<Real, Index>> triplets;
    triplets.reserve(s.triangles().size() * 36);
    for (int id : s.triangles()) {
        const auto k = s.mesh().simplex(id);
        const auto r = detail::triangle_rows(k, 2);
        Eigen::Matrix<Real, 6, 6> a = k.volume() * r.div * r.div.transpose();
        for (std::size_t q = 0; q < r.points.size(); ++q)
            a += r.weights[q] * r.flux[q] * r.flux[q].transpose();
        for (auto e : detail::initial_edges(k))
            detail::for_initial_edge(k, e, 2, [&](Real, Real w, Real la, Real lb) {
                Eigen::Matrix<Real, 6, 1> v = Eigen::Matrix<Real, 6, 1>::Zero();
                v[e.first] = la;
                v[e.second] = lb;
                a += w * v * v.transpose();
            });
        a = 0.5 * (a + a.transpose()).eval();

        const auto rd = detail::triangle_rows(k, assembly::data_degree);
        Eigen::Matrix<Real, 6, 1> bl = Eigen::Matrix<Real, 6, 1>::Zero();
        for (std::size_t q = 0; q < rd.points.size(); ++q) {
            const auto x = detail::to_st(rd.points[q]);
            bl += rd.weights[q] * (problem.f1(x) * rd.div - problem.f2(x)[0] * rd.flux[q]);
        }
        for (auto e : detail::initial_edges(k))
            detail::for_initial_edge(k, e, assembly::data_degree, [&](Real x, Real w, Real la, Real lb) {
                const Real u0 = problem.u0({x});
                bl[e.first] += w * u0 * la;
                bl[e.second] += w * u0 * lb;
            });
        for (int i = 0; i < 6; ++i) {
            const Index gi = s.dof(id, i);
            if (gi < 0)
                continue;
            if (!std::isfinite(bl[i]))
                throw DataError("non-finite data at a quadrature point", id);
            sys.b[gi] += bl[i];
            for (int j = 0; j < 6; ++j) {
                const Index gj = s.dof(id, j);
                if (gj >= 0 && a(i, j) != 0)
                    triplets.emplace_back(gi, gj, a(i, j));
            }
        }
    }
    sys.A.resize(s.n_dofs(), s.n_dofs());
    sys.A.setFromTriplets(triplets.begin(), triplets.end());
    sys.A.makeCompressed();
    return sys;
}

/// Local coefficients (6) of a free-DoF vector on triangle id.
inline Eigen::Matrix<Real, 6, 1> local_coefficients(const SimplexSpace& s, int id, const DenseVector& x)
{
    Eigen::Matrix<Real, 6, 1> c;
    for (int i = 0; i < 6; ++i) {
        const Index g = s.dof(id, i);
        c[i] = g < 0 ? 0 : x[g];
    }
    return c;
}

/// Same indicator definition as the prismatic estimator, per triangle.
inline adapt::IndicatorSet estimate(const SimplexSpace& s, const DenseVector& x, const assembly::ProblemSpec<1>& problem)
{
    adapt::IndicatorSet out;
    adapt::ResidualAccumulator acc;
    out.ids.reserve(s.triangles().size());
    out.local.resize(s.triangles().size());
    std::size_t n = 0;
    for (int id : s.triangles()) {
        const auto k = s.mesh().simplex(id);
        const auto c = local_coefficients(s, id, x);
        const auto r = detail::triangle_rows(k, assembly::data_degree);
        const Real div = r.div.dot(c);
        Real e_div = 0, e_flux = 0, e_trace = 0;
        for (std::size_t q = 0; q < r.points.size(); ++q) {
            const auto p = detail::to_st(r.points[q]);
            const Real d = problem.f1(p) - div;
            const Real f = problem.f2(p)[0] + r.flux[q].dot(c);
            e_div += r.weights[q] * d * d;
            e_flux += r.weights[q] * f * f;
        }
        for (auto e : detail::initial_edges(k))
            detail::for_initial_edge(k, e, assembly::data_degree, [&](Real xq, Real w, Real la, Real lb) {
                const Real d = problem.u0({xq}) - (la * c[e.first] + lb * c[e.second]);
                e_trace += w * d * d;
            });
        out.ids.push_back(id);
        acc.add_element(e_div, e_flux, e_trace, out.local[n++]);
    }
    out.total = acc.total();
    return out;
}

inline Real u_norm_error(const SimplexSpace& s, const DenseVector& x, const fe::DifferentiableField<1>& exact)
{
    long double sum = 0;
    for (int id : s.triangles()) {
        const auto k = s.mesh().simplex(id);
        const auto c = local_coefficients(s, id, x);
        const auto r = detail::triangle_rows(k, assembly::data_degree);
        const Real div = r.div.dot(c);
        Real dx1 = 0;
        for (int j = 0; j < 3; ++j)
            dx1 += r.dx[j] * c[j];
        Real local = 0;
        for (std::size_t q = 0; q < r.points.size(); ++q) {
            const auto p = detail::to_st(r.points[q]);
            const auto& l = r.lambda[q];
            const Real v1 = l[0] * c[0] + l[1] * c[1] + l[2] * c[2];
            const Real v2 = l[0] * c[3] + l[1] * c[4] + l[2] * c[5];
            local += r.weights[q] * (std::pow(exact.v1(p) - v1, 2) + std::pow(exact.grad_v1(p)[0] - dx1, 2) +
                                     std::pow(exact.v2(p)[0] - v2, 2) + std::pow(exact.div(p) - div, 2));
        }
        sum += local;
    }
    return static_cast<Real>(std::sqrt(sum));
}

/// The simplicial baseline driven by the adaptive loop; marked triangles are bisected twice.
class SimplexDiscretization
{
public:
    SimplexDiscretization(assembly::ProblemSpec<1> problem, mesh::TriMesh initial)
        : problem_(std::move(problem)), mesh_(std::make_unique<mesh::TriMesh>(std::move(initial)))
    {
        space_ = std::make_unique<SimplexSpace>(*mesh_);
    }

    const mesh::TriMesh& mesh() const { return *mesh_; }
    const SimplexSpace& space() const { return *space_; }
    const DenseVector& solution() const { return x_; }
    Index n_dofs() const { return space_->n_dofs(); }
    Index n_elements() const { return static_cast<Index>(mesh_->size()); }

    adapt::StepResult solve_and_estimate(const assembly::SolverOptions& opt)
    {
        auto sol = assembly::solve(assemble(*space_, problem_), opt);
        x_ = std::move(sol.x);
        adapt::StepResult r;
        r.indicators = estimate(*space_, x_, problem_);
        if (problem_.exact)
            r.error_u = u_norm_error(*space_, x_, *problem_.exact);
        r.stats = std::move(sol.stats);
        return r;
    }

    void refine(const std::vector<Index>& ids)
    {
        std::vector<int> marked(ids.begin(), ids.end());
        reset(mesh::nvb_refine(*mesh_, marked));
    }

    void refine_uniform()
    {
        const auto a = mesh_->active();
        reset(mesh::nvb_refine(*mesh_, a));
    }

private:
    void reset(mesh::TriMesh m)
    {
        space_.reset();
        mesh_ = std::make_unique<mesh::TriMesh>(std::move(m));
        space_ = std::make_unique<SimplexSpace>(*mesh_);
        x_.resize(0);
    }

    assembly::ProblemSpec<1> problem_;
    std::unique_ptr<mesh::TriMesh> mesh_;
    std::unique_ptr<SimplexSpace> space_;
    DenseVector x_;
};

} // namespace stfosls::baseline

#pragma once

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "../geometry.hpp"

namespace stfosls::mesh {

/// Conforming triangulation of the (t, x) rectangle [0,T] x [0,1] refined by newest vertex
/// bisection. Each triangle stores (v0, v1, v2) with refinement edge (v0, v1) and newest
/// vertex v2. Points are stored as (t, x).
class TriMesh
{
public:
    struct Triangle
    {
        std::array<int, 3> v{};
        std::array<int, 2> children{-1, -1};
        bool active = true;
    };

    Real end_time() const { return T_; }
    const SpacePoint<2>& vertex(int i) const { return vertices_[i]; }
    int n_vertices() const { return static_cast<int>(vertices_.size()); }

    /// Ids of active triangles in creation order.
    std::vector<int> active() const
    {
        std::vector<int> a;
        for (int i = 0; i < static_cast<int>(tris_.size()); ++i)
            if (tris_[i].active)
                a.push_back(i);
        return a;
    }
    std::size_t size() const { return n_active_; }
    const Triangle& triangle(int id) const { return tris_[id]; }
    std::size_t n_created() const { return tris_.size(); }

    Simplex<2> simplex(int id) const
    {
        const auto& v = tris_[id].v;
        return Simplex<2>({vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]});
    }

    /// Bisects the triangle, first bisecting neighbors as needed to keep conformity.
    void bisect(int id)
    {
        if (!tris_[id].active)
            return;
        const auto e = edge(tris_[id].v[0], tris_[id].v[1]);
        int nb = neighbor(id, e);
        while (nb >= 0 && edge(tris_[nb].v[0], tris_[nb].v[1]) != e) {
            bisect(nb);
            nb = neighbor(id, e);
        }
        const int m = midpoint(e);
        split(id, m);
        if (nb >= 0)
            split(nb, m);
    }

    friend TriMesh nvb_initial(Real T);

private:
    using Edge = std::pair<int, int>;

    static Edge edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

    int add_vertex(const SpacePoint<2>& p)
    {
        auto [it, inserted] = vertex_index_.try_emplace(p, static_cast<int>(vertices_.size()));
        if (inserted)
            vertices_.push_back(p);
        return it->second;
    }

    int midpoint(const Edge& e)
    {
        const auto& a = vertices_[e.first];
        const auto& b = vertices_[e.second];
        return add_vertex({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])});
    }

    int neighbor(int id, const Edge& e) const
    {
        auto it = edges_.find(e);
        if (it == edges_.end())
            return -1;
        for (int t : it->second)
            if (t != id)
                return t;
        return -1;
    }

    void link(int id, bool add)
    {
        const auto& v = tris_[id].v;
        for (int i = 0; i < 3; ++i) {
            auto& list = edges_[edge(v[i], v[(i + 1) % 3])];
            if (add)
                list.push_back(id);
            else
                list.erase(std::remove(list.begin(), list.end(), id), list.end());
        }
    }

    int add_triangle(const std::array<int, 3>& v)
    {
        Triangle t;
        t.v = v;
        tris_.push_back(t);
        const int id = static_cast<int>(tris_.size()) - 1;
        link(id, true);
        ++n_active_;
        return id;
    }

    // Children (v0, v2, m) and (v2, v1, m): refinement edges are the parent's other edges.
    void split(int id, int m)
    {
        link(id, false);
        tris_[id].active = false;
        --n_active_;
        const auto v = tris_[id].v;
        const int c0 = add_triangle({v[0], v[2], m});
        const int c1 = add_triangle({v[2], v[1], m});
        tris_[id].children = {c0, c1};
    }

    Real T_ = 1;
    std::vector<SpacePoint<2>> vertices_;
    std::map<SpacePoint<2>, int> vertex_index_;
    std::vector<Triangle> tris_;
    std::map<Edge, std::vector<int>> edges_;
    std::size_t n_active_ = 0;
};

/// Four triangles through the center of [0,T] x [0,1]; refinement edge of each is its longest
/// edge, ties broken by the lowest local vertex index.
inline TriMesh nvb_initial(Real T = 1)
{
    if (!(T > 0))
        throw InvalidArgument("nvb_initial: T must be positive");
    TriMesh m;
    m.T_ = T;
    const int a = m.add_vertex({0, 0}), b = m.add_vertex({T, 0}), c = m.add_vertex({T, 1}), d = m.add_vertex({0, 1});
    const int z = m.add_vertex({T / 2, 0.5});
    for (auto tri : {std::array<int, 3>{a, b, z}, {b, c, z}, {c, d, z}, {d, a, z}}) {
        int best = 0;
        Real longest = -1;
        for (int i = 0; i < 3; ++i) {
            const auto& p = m.vertices_[tri[i]];
            const auto& q = m.vertices_[tri[(i + 1) % 3]];
            const Real len = std::hypot(p[0] - q[0], p[1] - q[1]);
            if (len > longest) {
                longest = len;
                best = i;
            }
        }
        m.add_triangle({tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]});
    }
    return m;
}

/// Bisects each marked triangle twice (four descendants), with conforming closure.
inline TriMesh nvb_refine(const TriMesh& mesh, const std::vector<int>& marked)
{
    TriMesh out = mesh;
    for (int id : marked) {
        if (id < 0 || id >= static_cast<int>(out.n_created()) || !mesh.triangle(id).active)
            throw InvalidArgument("nvb_refine: unknown or inactive triangle " + std::to_string(id));
    }
    for (int id : marked) {
        out.bisect(id);
        for (int c : out.triangle(id).children)
            out.bisect(c);
    }
    return out;
}

/// Every edge of an active triangle is shared by exactly two triangles or lies on the boundary.
inline bool is_conforming(const TriMesh& m)
{
    std::map<std::pair<int, int>, int> count;
    for (int id : m.active()) {
        const auto& v = m.triangle(id).v;
        for (int i = 0; i < 3; ++i) {
            const int a = v[i], b = v[(i + 1) % 3];
            ++count[{std::min(a, b), std::max(a, b)}];
        }
    }
    for (const auto& [e, n] : count) {
        const auto& p = m.vertex(e.first);
        const auto& q = m.vertex(e.second);
        const bool boundary = (p[0] == q[0] && (p[0] == 0 || p[0] == m.end_time())) ||
                              (p[1] == q[1] && (p[1] == 0 || p[1] == 1));
        if (n != (boundary ? 1 : 2))
            return false;
    }
    return true;
}

} // namespace stfosls::mesh

#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "../geometry.hpp"

namespace stfosls::mesh {

/// A spatial simplex in the refinement forest.
template <int D>
struct SpatialCell
{
    std::array<int, D + 1> vertices{};
    int parent = -1;
    int level = 0;
    int child_index = -1;
    std::array<int, (1 << D)> children{};

    bool has_children() const { return children[0] >= 0; }
};

/// Hierarchy of nested simplicial partitions of Omega: bisection (d = 1) or red refinement
/// (d = 2) of a conforming root mesh. Vertex coordinates stay dyadic when the roots are, so
/// all incidence tests below are exact in double precision.
template <int D>
class SpatialForest
{
public:
    static constexpr int n_children = 1 << D;

    int add_vertex(const SpacePoint<D>& p)
    {
        auto [it, inserted] = vertex_index_.try_emplace(p, static_cast<int>(vertices_.size()));
        if (inserted)
            vertices_.push_back(p);
        return it->second;
    }

    int add_root(const std::array<SpacePoint<D>, D + 1>& vertices)
    {
        SpatialCell<D> c;
        for (int i = 0; i <= D; ++i)
            c.vertices[i] = add_vertex(vertices[i]);
        c.children.fill(-1);
        if (Simplex<D>(vertices).det() <= 0)
            throw InvalidArgument("root simplices must be positively oriented");
        cells_.push_back(c);
        roots_.push_back(static_cast<int>(cells_.size()) - 1);
        return roots_.back();
    }

    const std::vector<int>& roots() const { return roots_; }
    const SpatialCell<D>& cell(int c) const { return cells_[c]; }
    int size() const { return static_cast<int>(cells_.size()); }
    const SpacePoint<D>& vertex(int v) const { return vertices_[v]; }
    int n_vertices() const { return static_cast<int>(vertices_.size()); }

    /// Vertex id of an existing vertex at exactly p, or -1.
    int find_vertex(const SpacePoint<D>& p) const
    {
        auto it = vertex_index_.find(p);
        return it == vertex_index_.end() ? -1 : it->second;
    }

    Simplex<D> simplex(int c) const
    {
        std::array<SpacePoint<D>, D + 1> v;
        for (int i = 0; i <= D; ++i)
            v[i] = vertices_[cells_[c].vertices[i]];
        return Simplex<D>(v);
    }

    /// Children of c, created on first request. Order for d = 2: three corner children
    /// (at vertices 0, 1, 2) followed by the middle one.
    const std::array<int, (1 << D)>& refine(int c)
    {
        if (cells_[c].has_children())
            return cells_[c].children;
        const auto v = cells_[c].vertices;
        auto mid = [&](int a, int b) {
            SpacePoint<D> m;
            for (int i = 0; i < D; ++i)
                m[i] = 0.5 * (vertices_[a][i] + vertices_[b][i]);
            return add_vertex(m);
        };
        std::vector<std::array<int, D + 1>> kids;
        if constexpr (D == 1) {
            const int m = mid(v[0], v[1]);
            kids = {{v[0], m}, {m, v[1]}};
        } else {
            const int m01 = mid(v[0], v[1]);
            const int m12 = mid(v[1], v[2]);
            const int m20 = mid(v[2], v[0]);
            kids = {{v[0], m01, m20}, {m01, v[1], m12}, {m20, m12, v[2]}, {m12, m20, m01}};
        }
        std::array<int, (1 << D)> ids{};
        for (int i = 0; i < n_children; ++i) {
            SpatialCell<D> child;
            child.vertices = kids[i];
            child.parent = c;
            child.level = cells_[c].level + 1;
            child.child_index = i;
            child.children.fill(-1);
            cells_.push_back(child);
            ids[i] = static_cast<int>(cells_.size()) - 1;
        }
        cells_[c].children = ids;
        return cells_[c].children;
    }

    /// Exact closed-simplex containment for dyadic data.
    bool contains(int c, const SpacePoint<D>& x) const
    {
        const auto& v = cells_[c].vertices;
        if constexpr (D == 1) {
            return vertices_[v[0]][0] <= x[0] && x[0] <= vertices_[v[1]][0];
        } else {
            for (int i = 0; i < 3; ++i) {
                const auto& a = vertices_[v[i]];
                const auto& b = vertices_[v[(i + 1) % 3]];
                const Real orient = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                if (orient < 0)
                    return false;
            }
            return true;
        }
    }

    /// True iff x lies on the closed facet j (opposite vertex j) of cell c.
    bool on_facet(int c, int j, const SpacePoint<D>& x) const
    {
        const auto& v = cells_[c].vertices;
        if constexpr (D == 1) {
            return x[0] == vertices_[v[1 - j]][0];
        } else {
            const auto& a = vertices_[v[(j + 1) % 3]];
            const auto& b = vertices_[v[(j + 2) % 3]];
            const Real orient = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
            return orient == 0 && contains(c, x);
        }
    }

    /// Existing cells of each level 0..max_level containing x; result[l] lists level-l cells.
    std::vector<std::vector<int>> cells_containing(const SpacePoint<D>& x, int max_level) const
    {
        std::vector<std::vector<int>> out(max_level + 1);
        for (int r : roots_)
            if (contains(r, x))
                out[0].push_back(r);
        for (int l = 0; l < max_level; ++l)
            for (int c : out[l])
                if (cells_[c].has_children())
                    for (int ch : cells_[c].children)
                        if (contains(ch, x) &&
                            std::find(out[l + 1].begin(), out[l + 1].end(), ch) == out[l + 1].end())
                            out[l + 1].push_back(ch);
        return out;
    }

    /// Spatial facet j of c lies on the boundary of the (unit box) domain.
    bool facet_on_boundary(int c, int j) const
    {
        const auto& v = cells_[c].vertices;
        if constexpr (D == 1) {
            const Real x = vertices_[v[1 - j]][0];
            return x == 0 || x == 1;
        } else {
            const auto& a = vertices_[v[(j + 1) % 3]];
            const auto& b = vertices_[v[(j + 2) % 3]];
            for (int i = 0; i < 2; ++i)
                if (a[i] == b[i] && (a[i] == 0 || a[i] == 1))
                    return true;
            return false;
        }
    }

    /// Sorted vertex ids of facet j of c.
    std::array<int, D> facet_key(int c, int j) const
    {
        std::array<int, D> k{};
        int n = 0;
        for (int i = 0; i <= D; ++i)
            if (i != j)
                k[n++] = cells_[c].vertices[i];
        std::sort(k.begin(), k.end());
        return k;
    }

    /// Midpoint of facet j of c (the facet itself for d = 1).
    SpacePoint<D> facet_midpoint(int c, int j) const
    {
        SpacePoint<D> m{};
        for (int i = 0; i <= D; ++i)
            if (i != j)
                for (int k = 0; k < D; ++k)
                    m[k] += vertices_[cells_[c].vertices[i]][k] / D;
        return m;
    }

private:
    std::vector<SpacePoint<D>> vertices_;
    std::map<SpacePoint<D>, int> vertex_index_;
    std::vector<SpatialCell<D>> cells_;
    std::vector<int> roots_;
};

/// Point on the boundary of the unit box (0,1)^d.
template <int D>
bool on_domain_boundary(const SpacePoint<D>& x)
{
    for (int i = 0; i < D; ++i)
        if (x[i] == 0 || x[i] == 1)
            return true;
    return false;
}

} // namespace stfosls::mesh

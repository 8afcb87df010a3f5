#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <set>
#include <unordered_map>
#include <variant>
#include <vector>

#include "spatial_forest.hpp"

namespace stfosls::mesh {

/// Time coordinates are tracked as integer ticks, t = T * tick / 2^max_time_level.
inline constexpr int max_time_level = 40;
using Tick = std::int64_t;

inline Tick time_tick(int level, std::int64_t index)
{
    return index << (max_time_level - level);
}

inline constexpr Tick final_tick = Tick(1) << max_time_level;

/// Space-time prism J x K with its position in the refinement hierarchy.
template <int D>
struct Prism
{
    Index id = 0;
    int level = 0;
    std::int64_t time_index = 0;
    int cell = 0;
    Interval time;
    Simplex<D> base;

    PrismGeometry<D> geometry() const { return {time, base}; }
    Tick tick0() const { return time_tick(level, time_index); }
    Tick tick1() const { return time_tick(level, time_index + 1); }
    bool starts_at_zero() const { return time_index == 0; }
};

enum class InitialDiagonal { main, anti };

template <int D>
class PrismaticMesh;

template <int D>
PrismaticMesh<D> initial_prism_mesh(Real T, InitialDiagonal diagonal = InitialDiagonal::main);

template <int D>
PrismaticMesh<D> refine(const PrismaticMesh<D>& mesh, const std::vector<Index>& marked);

/// Partition of [0,T] x [0,1]^d into prisms of a common refinement hierarchy.
/// Active prisms are stored in ascending id order.
template <int D>
class PrismaticMesh
{
public:
    Real end_time() const { return T_; }
    std::size_t size() const { return prisms_.size(); }
    const std::vector<Prism<D>>& prisms() const { return prisms_; }
    const Prism<D>& prism(std::size_t pos) const { return prisms_[pos]; }
    const SpatialForest<D>& forest() const { return forest_; }
    int max_level() const { return max_level_; }

    Real time_of(Tick tick) const { return T_ * (static_cast<Real>(tick) / static_cast<Real>(final_tick)); }

    /// Position of the active prism (level, time_index, cell), or -1.
    int find(std::int64_t time_index, int cell) const
    {
        auto it = lookup_.find(key(time_index, cell));
        return it == lookup_.end() ? -1 : it->second;
    }

    /// Position of the prism with the given id, or -1.
    int position_of(Index id) const
    {
        auto it = std::lower_bound(prisms_.begin(), prisms_.end(), id,
                                   [](const Prism<D>& p, Index v) { return p.id < v; });
        return (it != prisms_.end() && it->id == id) ? static_cast<int>(it - prisms_.begin()) : -1;
    }

    /// Positions of all active prisms containing the closed point (tick, x); x must be a
    /// mesh-compatible dyadic point for exactness.
    std::vector<int> containing(Tick tick, const SpacePoint<D>& x) const
    {
        std::vector<int> out;
        const auto cells = forest_.cells_containing(x, max_level_);
        for (int l = 0; l <= max_level_; ++l) {
            if (cells[l].empty())
                continue;
            const int shift = max_time_level - l;
            const std::int64_t i = tick >> shift;
            const std::int64_t n = std::int64_t(1) << l;
            for (std::int64_t ti : {i - 1, i}) {
                if (ti < 0 || ti >= n)
                    continue;
                if (ti == i - 1 && (tick & ((Tick(1) << shift) - 1)) != 0)
                    continue;
                for (int c : cells[l]) {
                    const int pos = find(ti, c);
                    if (pos >= 0)
                        out.push_back(pos);
                }
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    Real total_volume() const
    {
        Real v = 0;
        for (const auto& p : prisms_)
            v += p.geometry().volume();
        return v;
    }

    /// One line per prism: `id level t0 t1 v0 ... vd`, 17 significant digits.
    void dump(std::ostream& os) const
    {
        const auto old = os.precision(17);
        for (const auto& p : prisms_) {
            os << p.id << ' ' << p.level << ' ' << p.time.a << ' ' << p.time.b;
            for (const auto& v : p.base.vertices())
                for (Real c : v)
                    os << ' ' << c;
            os << '\n';
        }
        os.precision(old);
    }

private:
    friend PrismaticMesh<D> initial_prism_mesh<D>(Real, InitialDiagonal);
    friend PrismaticMesh<D> refine<D>(const PrismaticMesh<D>&, const std::vector<Index>&);

    static std::uint64_t key(std::int64_t time_index, int cell)
    {
        return (static_cast<std::uint64_t>(cell) << max_time_level) ^ static_cast<std::uint64_t>(time_index);
    }

    Prism<D> make_prism(int level, std::int64_t time_index, int cell)
    {
        Prism<D> p;
        p.id = next_id_++;
        p.level = level;
        p.time_index = time_index;
        p.cell = cell;
        p.time = Interval(time_of(time_tick(level, time_index)), time_of(time_tick(level, time_index + 1)));
        p.base = forest_.simplex(cell);
        return p;
    }

    void rebuild_index()
    {
        lookup_.clear();
        lookup_.reserve(prisms_.size() * 2);
        max_level_ = 0;
        for (std::size_t i = 0; i < prisms_.size(); ++i) {
            lookup_[key(prisms_[i].time_index, prisms_[i].cell)] = static_cast<int>(i);
            max_level_ = std::max(max_level_, prisms_[i].level);
        }
    }

    /// Replaces the prisms at the given positions by their children.
    void split(const std::vector<int>& positions)
    {
        std::vector<char> flag(prisms_.size(), 0);
        for (int p : positions)
            flag[p] = 1;
        std::vector<Prism<D>> kept;
        std::vector<Prism<D>> children;
        for (std::size_t i = 0; i < prisms_.size(); ++i) {
            if (!flag[i]) {
                kept.push_back(prisms_[i]);
                continue;
            }
            const Prism<D> parent = prisms_[i];
            if (parent.level + 1 > max_time_level)
                throw InvalidArgument("refine: maximum refinement level exceeded");
            const auto kids = forest_.refine(parent.cell);
            for (int tc = 0; tc < 2; ++tc)
                for (int sc = 0; sc < SpatialForest<D>::n_children; ++sc)
                    children.push_back(make_prism(parent.level + 1, 2 * parent.time_index + tc, kids[sc]));
        }
        kept.insert(kept.end(), children.begin(), children.end());
        prisms_ = std::move(kept);
        rebuild_index();
    }

    Real T_ = 1;
    SpatialForest<D> forest_;
    std::vector<Prism<D>> prisms_;
    std::unordered_map<std::uint64_t, int> lookup_;
    Index next_id_ = 0;
    int max_level_ = 0;
};

template <int D>
PrismaticMesh<D> initial_prism_mesh(Real T, InitialDiagonal diagonal)
{
    static_assert(D == 1 || D == 2, "only d = 1 and d = 2 are supported");
    if (!(T > 0))
        throw InvalidArgument("initial_prism_mesh: T must be positive");
    PrismaticMesh<D> m;
    m.T_ = T;
    std::vector<int> roots;
    if constexpr (D == 1) {
        roots.push_back(m.forest_.add_root({SpacePoint<1>{0}, SpacePoint<1>{1}}));
    } else {
        if (diagonal == InitialDiagonal::main) {
            roots.push_back(m.forest_.add_root({SpacePoint<2>{0, 0}, SpacePoint<2>{1, 0}, SpacePoint<2>{1, 1}}));
            roots.push_back(m.forest_.add_root({SpacePoint<2>{0, 0}, SpacePoint<2>{1, 1}, SpacePoint<2>{0, 1}}));
        } else {
            roots.push_back(m.forest_.add_root({SpacePoint<2>{0, 0}, SpacePoint<2>{1, 0}, SpacePoint<2>{0, 1}}));
            roots.push_back(m.forest_.add_root({SpacePoint<2>{1, 0}, SpacePoint<2>{1, 1}, SpacePoint<2>{0, 1}}));
        }
    }
    for (int r : roots)
        m.prisms_.push_back(m.make_prism(0, 0, r));
    m.rebuild_index();
    return m;
}

/// Runtime-dimension entry point.
using AnyPrismaticMesh = std::variant<PrismaticMesh<1>, PrismaticMesh<2>>;

inline AnyPrismaticMesh initial_prism_mesh(int dim, Real T, InitialDiagonal diagonal = InitialDiagonal::main)
{
    if (dim == 1)
        return initial_prism_mesh<1>(T, diagonal);
    if (dim == 2)
        return initial_prism_mesh<2>(T, diagonal);
    throw InvalidArgument("initial_prism_mesh: unsupported dimension " + std::to_string(dim));
}

namespace detail {

struct NodeKey
{
    Tick tick;
    int vertex;
    bool operator==(const NodeKey&) const = default;
};

struct NodeKeyHash
{
    std::size_t operator()(const NodeKey& k) const
    {
        return std::hash<std::uint64_t>()(static_cast<std::uint64_t>(k.tick) * 1000003u ^
                                          static_cast<std::uint64_t>(k.vertex));
    }
};

/// Distinct prism vertices of the mesh as (tick, spatial vertex id).
template <int D>
std::vector<NodeKey> prism_vertices(const PrismaticMesh<D>& mesh)
{
    std::unordered_map<NodeKey, char, NodeKeyHash> seen;
    std::vector<NodeKey> out;
    seen.reserve(mesh.size() * 2);
    for (const auto& p : mesh.prisms())
        for (Tick t : {p.tick0(), p.tick1()})
            for (int v : mesh.forest().cell(p.cell).vertices)
                if (seen.emplace(NodeKey{t, v}, 1).second)
                    out.push_back({t, v});
    return out;
}

/// Positions of prisms with level <= L - 2 that intersect a prism of level L.
template <int D>
std::vector<int> closure_violators(const PrismaticMesh<D>& mesh)
{
    std::set<int> bad;
    for (const auto& node : prism_vertices(mesh)) {
        const auto c = mesh.containing(node.tick, mesh.forest().vertex(node.vertex));
        int hi = 0;
        for (int pos : c)
            hi = std::max(hi, mesh.prism(pos).level);
        for (int pos : c)
            if (mesh.prism(pos).level <= hi - 2)
                bad.insert(pos);
    }
    return {bad.begin(), bad.end()};
}

} // namespace detail

/// Largest level difference between two intersecting prisms. Two closed prisms intersect iff
/// one contains a vertex of the other, so scanning all vertices is exhaustive.
template <int D>
int max_level_jump(const PrismaticMesh<D>& mesh)
{
    int jump = 0;
    for (const auto& node : detail::prism_vertices(mesh)) {
        const auto c = mesh.containing(node.tick, mesh.forest().vertex(node.vertex));
        int lo = mesh.max_level(), hi = 0;
        for (int pos : c) {
            lo = std::min(lo, mesh.prism(pos).level);
            hi = std::max(hi, mesh.prism(pos).level);
        }
        if (!c.empty())
            jump = std::max(jump, hi - lo);
    }
    return jump;
}

/// Refines the marked prisms (by id) and then the minimal closure keeping intersecting
/// prisms within one level of each other.
template <int D>
PrismaticMesh<D> refine(const PrismaticMesh<D>& mesh, const std::vector<Index>& marked)
{
    PrismaticMesh<D> out = mesh;
    std::vector<int> positions;
    for (Index id : marked) {
        const int pos = mesh.position_of(id);
        if (pos < 0)
            throw InvalidArgument("refine: unknown prism id " + std::to_string(id));
        positions.push_back(pos);
    }
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    if (positions.empty())
        return out;
    out.split(positions);
    for (;;) {
        const auto bad = detail::closure_violators(out);
        if (bad.empty())
            break;
        out.split(bad);
    }
    if (max_level_jump(out) > 1)
        throw InvalidMesh("refine: level rule violated after closure");
    return out;
}

template <int D>
PrismaticMesh<D> uniform_refine(const PrismaticMesh<D>& mesh)
{
    std::vector<Index> all;
    all.reserve(mesh.size());
    for (const auto& p : mesh.prisms())
        all.push_back(p.id);
    return refine(mesh, all);
}

// ---------------------------------------------------------------------------------------
// Facet topology

/// Facet numbering of a prism: 0 bottom (t = J.a), 1 top (t = J.b), 2 + j lateral J x e_j
/// with e_j the spatial facet opposite vertex j.
inline constexpr int bottom_facet = 0;
inline constexpr int top_facet = 1;
inline constexpr int lateral_facet(int j) { return 2 + j; }

struct FacetRef
{
    int prism = -1; // position in PrismaticMesh::prisms()
    int facet = -1;
    bool operator==(const FacetRef&) const = default;
};

enum class RelationKind { shared, master_slave };
enum class FacetOrientation { horizontal, lateral };
enum class BoundaryKind { initial, terminal, lateral };

/// Interior facet pairing. For shared facets `slave` is the prism with the lower id; the
/// names only carry meaning for master-slave relations.
struct FacetRelation
{
    RelationKind kind = RelationKind::shared;
    FacetOrientation orientation = FacetOrientation::horizontal;
    FacetRef slave;
    FacetRef master;
};

struct BoundaryFacet
{
    FacetRef facet;
    BoundaryKind kind = BoundaryKind::initial;
};

struct FacetTopology
{
    std::vector<FacetRelation> relations;
    std::vector<BoundaryFacet> boundary;

    std::size_t count(RelationKind k) const
    {
        return static_cast<std::size_t>(std::count_if(relations.begin(), relations.end(),
                                                      [&](const FacetRelation& r) { return r.kind == k; }));
    }
};

namespace detail {

template <int D>
int matching_facet(const SpatialForest<D>& f, int cell, const std::array<int, D>& key)
{
    for (int j = 0; j <= D; ++j)
        if (f.facet_key(cell, j) == key)
            return j;
    return -1;
}

template <int D>
int other_cell(const std::vector<int>& cells, int exclude)
{
    for (int c : cells)
        if (c != exclude)
            return c;
    return -1;
}

} // namespace detail

/// Classifies every facet of every prism; throws InvalidMesh on gaps or level jumps > 1.
template <int D>
FacetTopology facet_relations(const PrismaticMesh<D>& mesh)
{
    FacetTopology topo;
    const auto& forest = mesh.forest();
    auto gap = [&](const Prism<D>& p, int facet) {
        throw InvalidMesh("facet_relations: no neighbor matches facet " + std::to_string(facet) + " of prism " +
                          std::to_string(p.id));
    };

    for (std::size_t pos = 0; pos < mesh.size(); ++pos) {
        const auto& p = mesh.prism(pos);
        const int ip = static_cast<int>(pos);
        const std::int64_t n_time = std::int64_t(1) << p.level;
        const auto& cell = forest.cell(p.cell);

        // Bottom facet; shared relations are recorded from here.
        if (p.time_index == 0) {
            topo.boundary.push_back({{ip, bottom_facet}, BoundaryKind::initial});
        } else if (int q = mesh.find(p.time_index - 1, p.cell); q >= 0) {
            const bool p_first = p.id < mesh.prism(q).id;
            FacetRef a{ip, bottom_facet}, b{q, top_facet};
            topo.relations.push_back({RelationKind::shared, FacetOrientation::horizontal, p_first ? a : b,
                                      p_first ? b : a});
        } else if (p.level > 0 && p.time_index % 2 == 0 &&
                   (q = mesh.find(p.time_index / 2 - 1, cell.parent)) >= 0) {
            topo.relations.push_back(
                {RelationKind::master_slave, FacetOrientation::horizontal, {ip, bottom_facet}, {q, top_facet}});
        } else {
            bool fine = cell.has_children();
            if (fine)
                for (int ch : cell.children)
                    fine = fine && mesh.find(2 * p.time_index - 1, ch) >= 0;
            if (!fine)
                gap(p, bottom_facet);
        }

        // Top facet; only master-slave relations with a coarser prism above are recorded here.
        if (p.time_index == n_time - 1) {
            topo.boundary.push_back({{ip, top_facet}, BoundaryKind::terminal});
        } else if (mesh.find(p.time_index + 1, p.cell) >= 0) {
            // recorded by the prism above
        } else if (int q = -1; p.level > 0 && p.time_index % 2 == 1 &&
                               (q = mesh.find((p.time_index + 1) / 2, cell.parent)) >= 0) {
            topo.relations.push_back(
                {RelationKind::master_slave, FacetOrientation::horizontal, {ip, top_facet}, {q, bottom_facet}});
        } else {
            bool fine = cell.has_children();
            if (fine)
                for (int ch : cell.children)
                    fine = fine && mesh.find(2 * p.time_index + 2, ch) >= 0;
            if (!fine)
                gap(p, top_facet);
        }

        for (int j = 0; j <= D; ++j) {
            const int facet = lateral_facet(j);
            if (forest.facet_on_boundary(p.cell, j)) {
                topo.boundary.push_back({{ip, facet}, BoundaryKind::lateral});
                continue;
            }
            const auto mid = forest.facet_midpoint(p.cell, j);
            const auto cells = forest.cells_containing(mid, p.level);
            const int same = detail::other_cell<D>(cells[p.level], p.cell);
            if (same >= 0) {
                if (int q = mesh.find(p.time_index, same); q >= 0) {
                    if (p.id < mesh.prism(q).id) {
                        const int jq = detail::matching_facet<D>(forest, same, forest.facet_key(p.cell, j));
                        topo.relations.push_back({RelationKind::shared, FacetOrientation::lateral, {ip, facet},
                                                  {q, lateral_facet(jq)}});
                    }
                    continue;
                }
            }
            if (p.level > 0) {
                const int coarse = detail::other_cell<D>(cells[p.level - 1], cell.parent);
                if (coarse >= 0) {
                    if (int q = mesh.find(p.time_index / 2, coarse); q >= 0) {
                        int jq = -1;
                        for (int jj = 0; jj <= D; ++jj)
                            if (forest.on_facet(coarse, jj, mid))
                                jq = jj;
                        topo.relations.push_back({RelationKind::master_slave, FacetOrientation::lateral,
                                                  {ip, facet}, {q, lateral_facet(jq)}});
                        continue;
                    }
                }
            }
            // Finer neighbors: each sub-facet sample point must be covered by level + 1 prisms.
            bool fine = same >= 0 && forest.cell(same).has_children();
            if (fine) {
                const auto& verts = cell.vertices;
                std::vector<SpacePoint<D>> samples;
                if constexpr (D == 1) {
                    samples.push_back(forest.vertex(verts[1 - j]));
                } else {
                    const auto& a = forest.vertex(verts[(j + 1) % 3]);
                    const auto& b = forest.vertex(verts[(j + 2) % 3]);
                    samples.push_back({0.75 * a[0] + 0.25 * b[0], 0.75 * a[1] + 0.25 * b[1]});
                    samples.push_back({0.25 * a[0] + 0.75 * b[0], 0.25 * a[1] + 0.75 * b[1]});
                }
                for (const auto& s : samples) {
                    int child = -1;
                    for (int ch : forest.cell(same).children)
                        if (forest.contains(ch, s))
                            child = ch;
                    fine = fine && child >= 0 && mesh.find(2 * p.time_index, child) >= 0 &&
                           mesh.find(2 * p.time_index + 1, child) >= 0;
                }
            }
            if (!fine)
                gap(p, facet);
        }
    }
    return topo;
}

} // namespace stfosls::mesh

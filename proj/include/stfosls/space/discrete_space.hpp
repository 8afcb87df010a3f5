#pragma once

#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "../fe/prism_element.hpp"
#include "../mesh/prismatic_mesh.hpp"

namespace stfosls::space {

enum class DofKind { free, fixed, slave };
enum class DofComponent { u1, u2 };

struct GlobalDof
{
    DofKind kind = DofKind::free;
    DofComponent component = DofComponent::u1;
    Index free_id = -1;
};

/// Global DoF entities and the map from each prism's local DoFs to them. u1 entities are the
/// space-time nodal points; u2 entities are lateral-facet moments (shared between same-level
/// neighbors) and interior moments.
struct DofMap
{
    std::vector<GlobalDof> dofs;
    std::vector<Index> local_offset; // prism p owns local rows [local_offset[p], local_offset[p+1])
    std::vector<Index> local_to_global;
    std::vector<signed char> sign; // local u2 function = sign * global function
    Index n_free = 0;
    Index n_free_u1 = 0;

    Index count(DofKind kind) const
    {
        return static_cast<Index>(
            std::count_if(dofs.begin(), dofs.end(), [&](const GlobalDof& d) { return d.kind == kind; }));
    }
    Index count(DofKind kind, DofComponent c) const
    {
        return static_cast<Index>(std::count_if(dofs.begin(), dofs.end(), [&](const GlobalDof& d) {
            return d.kind == kind && d.component == c;
        }));
    }
};

/// Sparse map C from free coefficients to local coefficients; rows indexed like
/// DofMap::local_to_global.
struct ConstraintMap
{
    struct Entry
    {
        Index col;
        Real val;
    };
    std::vector<Index> row_start;
    std::vector<Entry> entries;

    const Entry* begin(Index row) const { return entries.data() + row_start[row]; }
    const Entry* end(Index row) const { return entries.data() + row_start[row + 1]; }
};

namespace detail {

/// Canonical normal of a spatial facet, independent of the prism it is seen from.
template <int D>
Vec<D> global_facet_normal(const Simplex<D>& k, int j)
{
    if constexpr (D == 1) {
        (void)k;
        (void)j;
        return Vec<1>::Ones();
    } else {
        const auto f = k.facet_vertices(j);
        SpacePoint<2> p = k.vertex(f[0]), q = k.vertex(f[1]);
        if (q < p)
            std::swap(p, q);
        Vec<2> n(q[1] - p[1], p[0] - q[0]);
        return n / n.norm();
    }
}

/// Facet lattice point a on facet j of k; matches RaviartThomas::facet_point.
template <int D>
SpacePoint<D> facet_lattice_point(const Simplex<D>& k, int j, const fe::LagrangeBasis<1>& lattice, int a)
{
    const auto f = k.facet_vertices(j);
    if constexpr (D == 1) {
        (void)lattice;
        (void)a;
        return k.vertex(f[0]);
    } else {
        const Real s = lattice.nodes()[a][0];
        const Vec<D> p0 = to_vec<D>(k.vertex(f[0]));
        const Vec<D> p1 = to_vec<D>(k.vertex(f[1]));
        return to_point<D>(p0 + s * (p1 - p0));
    }
}

template <int D>
struct U2Key
{
    mesh::Tick tick0;
    std::array<int, D> facet;
    SpacePoint<D> point;
    int m;
    auto operator<=>(const U2Key&) const = default;
};

} // namespace detail

/// Conforming subspace of U built from S_{l,k}(P) on a (possibly 1-irregular) prismatic mesh:
/// u1 continuous and zero on I x boundary, u2 with continuous spatial normal trace.
template <int D>
class DiscreteSpace
{
public:
    DiscreteSpace(const mesh::PrismaticMesh<D>& m, int ell, int k) : mesh_(m), ell_(ell), k_(k)
    {
        if (ell < 0 || k < 1)
            throw InvalidArgument("build_space: requires l >= 0, k >= 1");
        build();
    }

    const mesh::PrismaticMesh<D>& mesh() const { return mesh_; }
    const mesh::FacetTopology& topology() const { return topology_; }
    const DofMap& dof_map() const { return dofs_; }
    const ConstraintMap& constraints() const { return constraints_; }
    int ell() const { return ell_; }
    int k() const { return k_; }

    /// Number of free scalar DoFs; the size of the linear system.
    Index n_dofs() const { return dofs_.n_free; }

    fe::PrismElement<D> element(std::size_t pos) const
    {
        return fe::PrismElement<D>(mesh_.prism(pos).geometry(), ell_, k_);
    }

    Index local_row(std::size_t pos, int i) const { return dofs_.local_offset[pos] + i; }

    DenseVector local_coefficients(std::size_t pos, const DenseVector& free) const
    {
        const Index off = dofs_.local_offset[pos];
        const int n = static_cast<int>(dofs_.local_offset[pos + 1] - off);
        DenseVector c = DenseVector::Zero(n);
        for (int i = 0; i < n; ++i)
            for (auto e = constraints_.begin(off + i); e != constraints_.end(off + i); ++e)
                c[i] += e->val * free[e->col];
        return c;
    }

private:
    struct Node
    {
        mesh::Tick tick;
        SpacePoint<D> x;
        int min_level;
    };

    void build();
    std::vector<ConstraintMap::Entry> hanging_row(std::size_t node, int master,
                                                  const std::vector<int>& local_node) const;

    mesh::PrismaticMesh<D> mesh_;
    int ell_;
    int k_;
    mesh::FacetTopology topology_;
    DofMap dofs_;
    ConstraintMap constraints_;
    std::vector<Node> nodes_;
};

template <int D>
void DiscreteSpace<D>::build()
{
    using namespace stfosls::mesh;
    topology_ = facet_relations(mesh_);
    const std::size_t n_prisms = mesh_.size();
    const auto& forest = mesh_.forest();

    // Lateral facet roles; master sides are not listed.
    enum class Role { none, slave_side };
    std::vector<Role> role(n_prisms * (D + 3), Role::none);
    for (const auto& rel : topology_.relations) {
        if (rel.orientation != FacetOrientation::lateral || rel.kind != RelationKind::master_slave)
            continue;
        role[static_cast<std::size_t>(rel.slave.prism) * (D + 3) + rel.slave.facet] = Role::slave_side;
    }

    const auto space_lattice = fe::principal_lattice<D>(k_);
    const int n_t = ell_ + 2;
    const int n_x = static_cast<int>(space_lattice.size());
    const int n_u1 = n_t * n_x;

    std::map<std::pair<Tick, SpacePoint<D>>, int> node_index;
    std::map<detail::U2Key<D>, Index> u2_index;
    std::vector<DofKind> u2_kind;
    std::vector<int> local_node;     // per local u1 row
    std::vector<Index> local_u2;     // per local u2 row
    std::vector<signed char> u2_sign;

    // Counts are geometry independent; one reference RT element serves every prism.
    const fe::RaviartThomas<D> rt(mesh_.prism(0).base, k_);
    const fe::LagrangeBasis<1> facet_lattice(k_);
    const int n_local = n_u1 + (ell_ + 1) * rt.size();

    dofs_.local_offset.assign(n_prisms + 1, 0);
    for (std::size_t pos = 0; pos < n_prisms; ++pos) {
        const auto& p = mesh_.prism(pos);
        const Tick dt = p.tick1() - p.tick0();
        if (dt % (ell_ + 1) != 0)
            throw InvalidArgument("build_space: time lattice not representable for this l");
        for (int it = 0; it < n_t; ++it) {
            const Tick tick = p.tick0() + it * (dt / (ell_ + 1));
            for (int ix = 0; ix < n_x; ++ix) {
                const SpacePoint<D> x = p.base.map(space_lattice[ix]);
                auto [itn, inserted] = node_index.try_emplace({tick, x}, static_cast<int>(nodes_.size()));
                if (inserted)
                    nodes_.push_back({tick, x, p.level});
                else
                    nodes_[itn->second].min_level = std::min(nodes_[itn->second].min_level, p.level);
                local_node.push_back(itn->second);
            }
        }
        for (int m = 0; m <= ell_; ++m)
            for (int r = 0; r < rt.size(); ++r) {
                if (!rt.is_facet_dof(r)) {
                    local_u2.push_back(static_cast<Index>(u2_kind.size()));
                    u2_kind.push_back(DofKind::free);
                    u2_sign.push_back(1);
                    continue;
                }
                const int j = rt.facet_of(r);
                const int a = r - rt.facet_dof(j, 0);
                const Real s = p.base.outward_normal(j).dot(detail::global_facet_normal<D>(p.base, j));
                u2_sign.push_back(s > 0 ? 1 : -1);
                if (role[pos * (D + 3) + lateral_facet(j)] == Role::slave_side) {
                    local_u2.push_back(static_cast<Index>(u2_kind.size()));
                    u2_kind.push_back(DofKind::slave);
                    continue;
                }
                const detail::U2Key<D> key{p.tick0(), forest.facet_key(p.cell, j),
                                           detail::facet_lattice_point<D>(p.base, j, facet_lattice, a), m};
                auto [itk, inserted] = u2_index.try_emplace(key, static_cast<Index>(u2_kind.size()));
                if (inserted)
                    u2_kind.push_back(DofKind::free);
                local_u2.push_back(itk->second);
            }
        dofs_.local_offset[pos + 1] = dofs_.local_offset[pos] + n_local;
    }

    // u1 node classification.
    std::vector<int> node_master(nodes_.size(), -1);
    std::vector<DofKind> node_kind(nodes_.size(), DofKind::free);
    for (std::size_t nd = 0; nd < nodes_.size(); ++nd) {
        const auto& node = nodes_[nd];
        if (mesh::on_domain_boundary<D>(node.x)) {
            node_kind[nd] = DofKind::fixed;
            continue;
        }
        if (node.min_level == 0)
            continue;
        for (int q : mesh_.containing(node.tick, node.x))
            if (mesh_.prism(q).level == node.min_level - 1) {
                node_kind[nd] = DofKind::slave;
                node_master[nd] = q;
                break;
            }
    }

    // Entities: u1 nodes, then u2; free ids in the same order.
    const Index n_nodes = static_cast<Index>(nodes_.size());
    dofs_.dofs.resize(nodes_.size() + u2_kind.size());
    Index next = 0;
    for (Index i = 0; i < n_nodes; ++i) {
        dofs_.dofs[i] = {node_kind[i], DofComponent::u1, -1};
        if (node_kind[i] == DofKind::free)
            dofs_.dofs[i].free_id = next++;
    }
    dofs_.n_free_u1 = next;
    for (std::size_t i = 0; i < u2_kind.size(); ++i) {
        auto& g = dofs_.dofs[n_nodes + i];
        g = {u2_kind[i], DofComponent::u2, -1};
        if (u2_kind[i] == DofKind::free)
            g.free_id = next++;
    }
    dofs_.n_free = next;

    // Local rows.
    dofs_.local_to_global.resize(dofs_.local_offset.back());
    dofs_.sign.resize(dofs_.local_offset.back());
    constraints_.row_start.assign(dofs_.local_offset.back() + 1, 0);
    std::vector<std::vector<ConstraintMap::Entry>> rows(dofs_.local_offset.back());
    std::unordered_map<std::size_t, std::vector<ConstraintMap::Entry>> hanging_cache;

    std::size_t u1_cursor = 0, u2_cursor = 0;
    for (std::size_t pos = 0; pos < n_prisms; ++pos) {
        const Index off = dofs_.local_offset[pos];
        for (int i = 0; i < n_u1; ++i) {
            const int nd = local_node[u1_cursor++];
            dofs_.local_to_global[off + i] = nd;
            dofs_.sign[off + i] = 1;
            const auto& g = dofs_.dofs[nd];
            if (g.kind == DofKind::free)
                rows[off + i] = {{g.free_id, 1.0}};
            else if (g.kind == DofKind::slave) {
                auto it = hanging_cache.find(nd);
                if (it == hanging_cache.end())
                    it = hanging_cache.emplace(nd, hanging_row(nd, node_master[nd], local_node)).first;
                rows[off + i] = it->second;
            }
        }
        for (int i = n_u1; i < n_local; ++i) {
            const Index ent = n_nodes + local_u2[u2_cursor];
            dofs_.local_to_global[off + i] = ent;
            dofs_.sign[off + i] = u2_sign[u2_cursor];
            ++u2_cursor;
            const auto& g = dofs_.dofs[ent];
            if (g.kind == DofKind::free)
                rows[off + i] = {{g.free_id, Real(dofs_.sign[off + i])}};
        }
    }

    // Slave lateral facets: the slave's DoF functionals applied to the master's basis.
    const int n_fd = rt.facet_dof_count();
    for (const auto& rel : topology_.relations) {
        if (rel.orientation != FacetOrientation::lateral || rel.kind != RelationKind::master_slave)
            continue;
        const auto ep = element(rel.slave.prism);
        const auto eq = element(rel.master.prism);
        const int js = rel.slave.facet - 2, jm = rel.master.facet - 2;
        const auto& gp = ep.geometry();
        const Vec<D> normal = gp.base.outward_normal(js);
        std::vector<int> master_local;
        for (int m = 0; m <= ell_; ++m)
            for (int a = 0; a < n_fd; ++a)
                master_local.push_back(eq.n_u1() + eq.u2_index(m, eq.rt().facet_dof(jm, a)));
        DenseMatrix w = DenseMatrix::Zero((ell_ + 1) * n_fd, master_local.size());
        const auto rule = make_prism_facet_quadrature<D>(gp, rel.slave.facet, 2 * ell_ + 2, 2 * k_ + 2);
        DenseVector lt, dlt;
        fe::ShapeValues<D> sv;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& pt = rule.points[q];
            eq.eval(pt, sv);
            const DenseVector test = ep.rt().facet_test_values(js, pt.x);
            fe::legendre_orthonormal(ell_, (pt.t - gp.time.a) / gp.time.length(), lt, dlt);
            lt /= std::sqrt(gp.time.length());
            for (std::size_t s = 0; s < master_local.size(); ++s) {
                const Real flux = sv.u2.row(master_local[s] - eq.n_u1()).dot(normal.transpose()) * rule.weights[q];
                for (int m = 0; m <= ell_; ++m)
                    for (int a = 0; a < n_fd; ++a)
                        w(m * n_fd + a, s) += flux * test[a] * lt[m];
            }
        }
        const Index off_p = dofs_.local_offset[rel.slave.prism];
        const Index off_q = dofs_.local_offset[rel.master.prism];
        for (int m = 0; m <= ell_; ++m)
            for (int a = 0; a < n_fd; ++a) {
                const Index row = off_p + ep.n_u1() + ep.u2_index(m, ep.rt().facet_dof(js, a));
                std::vector<ConstraintMap::Entry> entries;
                for (std::size_t s = 0; s < master_local.size(); ++s) {
                    const Real v = w(m * n_fd + a, s);
                    if (std::abs(v) < 1e-14)
                        continue;
                    const Index mrow = off_q + master_local[s];
                    const auto& g = dofs_.dofs[dofs_.local_to_global[mrow]];
                    if (g.kind != DofKind::free)
                        throw ConstraintChainError("build_space: master facet DoF of prism " +
                                                   std::to_string(mesh_.prism(rel.master.prism).id) +
                                                   " is not free");
                    entries.push_back({g.free_id, v * dofs_.sign[mrow]});
                }
                rows[row] = std::move(entries);
            }
    }

    for (std::size_t r = 0; r < rows.size(); ++r)
        constraints_.row_start[r + 1] = constraints_.row_start[r] + static_cast<Index>(rows[r].size());
    constraints_.entries.reserve(constraints_.row_start.back());
    for (auto& row : rows)
        constraints_.entries.insert(constraints_.entries.end(), row.begin(), row.end());
}

template <int D>
std::vector<ConstraintMap::Entry> DiscreteSpace<D>::hanging_row(std::size_t node, int master,
                                                                const std::vector<int>& local_node) const
{
    const auto e = element(master);
    const auto& nd = nodes_[node];
    const auto values = e.eval({mesh_.time_of(nd.tick), nd.x}).u1;
    std::vector<ConstraintMap::Entry> row;
    for (int j = 0; j < e.n_u1(); ++j) {
        if (std::abs(values[j]) < 1e-14)
            continue;
        const auto& g = dofs_.dofs[local_node[static_cast<std::size_t>(master) * e.n_u1() + j]];
        if (g.kind == DofKind::slave)
            throw ConstraintChainError("build_space: hanging node depends on hanging node of prism " +
                                       std::to_string(mesh_.prism(master).id));
        if (g.kind == DofKind::free)
            row.push_back({g.free_id, values[j]});
    }
    return row;
}

} // namespace stfosls::space

namespace stfosls::space {

template <int D>
std::shared_ptr<const DiscreteSpace<D>> build_space(const mesh::PrismaticMesh<D>& mesh, int ell = 0, int k = 1)
{
    return std::make_shared<const DiscreteSpace<D>>(mesh, ell, k);
}

} // namespace stfosls::space

#pragma once

#include "discrete_space.hpp"

namespace stfosls::space {

/// Member of a DiscreteSpace given by its free coefficients.
template <int D>
class DiscreteField
{
public:
    DiscreteField(std::shared_ptr<const DiscreteSpace<D>> space, DenseVector coefficients)
        : space_(std::move(space)), coeffs_(std::move(coefficients))
    {
        if (coeffs_.size() != space_->n_dofs())
            throw InvalidArgument("DiscreteField: coefficient vector has wrong size");
    }

    explicit DiscreteField(std::shared_ptr<const DiscreteSpace<D>> space)
        : DiscreteField(space, DenseVector::Zero(space->n_dofs()))
    {
    }

    const DiscreteSpace<D>& space() const { return *space_; }
    const std::shared_ptr<const DiscreteSpace<D>>& space_ptr() const { return space_; }
    const DenseVector& coefficients() const { return coeffs_; }
    DenseVector& coefficients() { return coeffs_; }

    DenseVector local(std::size_t pos) const { return space_->local_coefficients(pos, coeffs_); }

    fe::LocalField<D> evaluate(std::size_t pos, const SpaceTimePoint<D>& p) const
    {
        return fe::evaluate(space_->element(pos), local(pos), p);
    }

private:
    std::shared_ptr<const DiscreteSpace<D>> space_;
    DenseVector coeffs_;
};

/// Element-wise local interpolant, then each free DoF takes the mean of the values proposed by
/// the prisms that carry it directly. Exact on fields already in the space.
template <int D>
DiscreteField<D> interp_onto_space(std::shared_ptr<const DiscreteSpace<D>> space, const fe::FieldPair<D>& v)
{
    const auto& dm = space->dof_map();
    DenseVector sum = DenseVector::Zero(space->n_dofs());
    DenseVector count = DenseVector::Zero(space->n_dofs());
    for (std::size_t pos = 0; pos < space->mesh().size(); ++pos) {
        const DenseVector c = fe::local_interpolant(space->element(pos), v);
        const Index off = dm.local_offset[pos];
        for (int i = 0; i < c.size(); ++i) {
            const auto& g = dm.dofs[dm.local_to_global[off + i]];
            if (g.kind != DofKind::free)
                continue;
            sum[g.free_id] += dm.sign[off + i] * c[i];
            count[g.free_id] += 1;
        }
    }
    return DiscreteField<D>(space, sum.cwiseQuotient(count.cwiseMax(1.0)));
}

struct FacetJump
{
    std::size_t relation = 0; // index into DiscreteSpace::topology().relations
    Real u1 = 0;              // L2 norm of [u1] over the smaller facet
    Real u2n = 0;             // L2 norm of [u2 . n_x]; zero on horizontal facets
};

/// Jumps across every interior facet, integrated over the slave (or either shared) facet, for
/// arbitrary per-prism local coefficients.
template <int D, class LocalCoefficients>
std::vector<FacetJump> facet_jump_norms(const DiscreteSpace<D>& space, const LocalCoefficients& local)
{
    const auto& rels = space.topology().relations;
    std::vector<FacetJump> out;
    out.reserve(rels.size());
    const int deg = 2 * (space.k() + space.ell()) + 2;
    for (std::size_t r = 0; r < rels.size(); ++r) {
        const auto& rel = rels[r];
        const auto es = space.element(rel.slave.prism);
        const auto em = space.element(rel.master.prism);
        const DenseVector cs = local(static_cast<std::size_t>(rel.slave.prism));
        const DenseVector cm = local(static_cast<std::size_t>(rel.master.prism));
        const auto rule = make_prism_facet_quadrature<D>(es.geometry(), rel.slave.facet, deg, deg);
        const bool lateral = rel.orientation == mesh::FacetOrientation::lateral;
        const Vec<D> n = lateral ? es.geometry().base.outward_normal(rel.slave.facet - 2) : Vec<D>::Zero();
        FacetJump j;
        j.relation = r;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto a = fe::evaluate(es, cs, rule.points[q]);
            const auto b = fe::evaluate(em, cm, rule.points[q]);
            j.u1 += rule.weights[q] * (a.v1 - b.v1) * (a.v1 - b.v1);
            if (lateral) {
                const Real d = (a.v2 - b.v2).dot(n);
                j.u2n += rule.weights[q] * d * d;
            }
        }
        j.u1 = std::sqrt(j.u1);
        j.u2n = std::sqrt(j.u2n);
        out.push_back(j);
    }
    return out;
}

template <int D>
std::vector<FacetJump> facet_jump_norms(const DiscreteField<D>& field)
{
    return facet_jump_norms(field.space(), [&](std::size_t pos) { return field.local(pos); });
}

} // namespace stfosls::space

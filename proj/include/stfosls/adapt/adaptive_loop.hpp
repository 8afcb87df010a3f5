#pragma once

#include <chrono>
#include <functional>

#include "../assembly/solve.hpp"
#include "estimate.hpp"

namespace stfosls::adapt {

enum class RefinementMode { uniform, adaptive };

/// One step of the adaptive algorithm.
struct RunRecord
{
    int step = 0;
    Index dofs = 0;
    Index elements = 0;
    Real estimator = 0;
    std::optional<Real> error_u;
    Real wall_time = 0; // seconds for solve, estimate and marking; 0 in deterministic mode
    Real partition_defect = 0;
    Index solver_iterations = 0;
};

struct LoopOptions
{
    RefinementMode mode = RefinementMode::adaptive;
    Real theta = 0.5;
    Index max_dofs = 100000; // a step whose system would exceed this is not solved
    int max_steps = 200;
    bool deterministic = true;
    assembly::SolverOptions solver;
    std::function<void(const RunRecord&)> on_step;
};

/// Solve, estimate and report for the current mesh of a discretization.
struct StepResult
{
    IndicatorSet indicators;
    std::optional<Real> error_u;
    assembly::SolverStats stats;
};

/// Prismatic discretization S_{l,k} with the element table kept across refinements.
template <int D>
class PrismDiscretization
{
public:
    PrismDiscretization(assembly::ProblemSpec<D> problem, mesh::PrismaticMesh<D> initial, int ell = 0, int k = 1)
        : problem_(std::move(problem)), mesh_(std::move(initial)), ell_(ell), k_(k), table_(ell, k)
    {
        space_ = space::build_space(mesh_, ell_, k_);
    }

    const mesh::PrismaticMesh<D>& mesh() const { return mesh_; }
    const std::shared_ptr<const space::DiscreteSpace<D>>& space() const { return space_; }
    const std::optional<space::DiscreteField<D>>& solution() const { return solution_; }
    Index n_dofs() const { return space_->n_dofs(); }
    Index n_elements() const { return static_cast<Index>(mesh_.size()); }

    StepResult solve_and_estimate(const assembly::SolverOptions& opt)
    {
        auto s = assembly::solve_least_squares(space_, problem_, table_, opt);
        StepResult r;
        r.indicators = estimate(s.field, problem_, table_);
        if (problem_.exact)
            r.error_u = u_norm_error(s.field, *problem_.exact, table_);
        r.stats = std::move(s.stats);
        solution_.emplace(std::move(s.field));
        return r;
    }

    void refine(const std::vector<Index>& ids) { reset(mesh::refine(mesh_, ids)); }
    void refine_uniform() { reset(mesh::uniform_refine(mesh_)); }

private:
    void reset(mesh::PrismaticMesh<D> m)
    {
        mesh_ = std::move(m);
        space_ = space::build_space(mesh_, ell_, k_);
        solution_.reset();
    }

    assembly::ProblemSpec<D> problem_;
    mesh::PrismaticMesh<D> mesh_;
    int ell_;
    int k_;
    assembly::ElementTable<D> table_;
    std::shared_ptr<const space::DiscreteSpace<D>> space_;
    std::optional<space::DiscreteField<D>> solution_;
};

namespace detail {

[[noreturn]] inline void rethrow_with_step(int step)
{
    const std::string prefix = "step " + std::to_string(step) + ": ";
    try {
        throw;
    } catch (const SolverError& e) {
        throw SolverError(prefix + e.what(), e.history());
    } catch (const DataError& e) {
        throw DataError(prefix + e.what(), e.element());
    } catch (const InvalidMesh& e) {
        throw InvalidMesh(prefix + e.what());
    } catch (const ConstraintChainError& e) {
        throw ConstraintChainError(prefix + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    }
}

} // namespace detail

/// Iterates solve, estimate, mark and refine. Stops before solving a system with more than
/// max_dofs unknowns (the first step is always solved) or after max_steps steps.
template <class Discretization>
std::vector<RunRecord> adaptive_loop(Discretization& disc, const LoopOptions& opt)
{
    if (!(opt.theta > 0 && opt.theta <= 1))
        throw InvalidArgument("adaptive_loop: theta must lie in (0, 1]");
    std::vector<RunRecord> records;
    for (int step = 0; step < opt.max_steps; ++step) {
        if (step > 0 && disc.n_dofs() > opt.max_dofs)
            break;
        RunRecord rec;
        try {
            const auto start = std::chrono::steady_clock::now();
            auto r = disc.solve_and_estimate(opt.solver);
            rec.step = step;
            rec.dofs = disc.n_dofs();
            rec.elements = disc.n_elements();
            rec.estimator = r.indicators.total;
            rec.error_u = r.error_u;
            rec.partition_defect = r.indicators.partition_defect();
            rec.solver_iterations = r.stats.iterations;
            const bool last = step + 1 >= opt.max_steps;
            if (!last) {
                if (opt.mode == RefinementMode::uniform)
                    disc.refine_uniform();
                else
                    disc.refine(doerfler_mark(r.indicators, opt.theta));
            }
            const std::chrono::duration<Real> elapsed = std::chrono::steady_clock::now() - start;
            rec.wall_time = opt.deterministic ? 0 : elapsed.count();
        } catch (const Error&) {
            detail::rethrow_with_step(step);
        }
        records.push_back(rec);
        if (opt.on_step)
            opt.on_step(rec);
    }
    return records;
}

} // namespace stfosls::adapt

#pragma once

#include <sstream>

#include <Eigen/SparseCholesky>

#include "assemble.hpp"

namespace stfosls::assembly {

enum class SolverMethod { automatic, direct, cg };

struct SolverOptions
{
    SolverMethod method = SolverMethod::automatic;
    Real tol = 1e-10;          // relative residual in the Jacobi-scaled norm
    Index max_iterations = 0;  // CG; 0 means 10 n
    Index direct_limit = 2000000; // automatic picks direct at or below this size; Jacobi CG stalls on graded meshes
    const DenseVector* initial_guess = nullptr; // CG only; must outlive the call
    // Direct only: once iterative refinement stops improving, a residual up to this bound is
    // accepted as the attainable accuracy (about eps * cond on strongly graded meshes).
    Real direct_floor = 1e-6;
};

struct SolverStats
{
    SolverMethod method = SolverMethod::direct;
    Index iterations = 0;
    Real residual = 0;         // final relative residual, Jacobi-scaled norm
    std::vector<Real> history; // relative residual per CG iteration
};

struct LinearSolution
{
    DenseVector x;
    SolverStats stats;
};

namespace detail {

/// Relative residual in the diagonally scaled norm ||D^(-1/2) r|| / ||D^(-1/2) b||, D = diag(A),
/// so that rows of very different magnitude count alike.
inline Real relative_residual(const SparseMatrix& a, const DenseVector& x, const DenseVector& b,
                              const DenseVector& scale)
{
    const Real nb = scale.cwiseProduct(b).norm();
    const DenseVector r = b - a * x;
    return nb == 0 ? scale.cwiseProduct(r).norm() : scale.cwiseProduct(r).norm() / nb;
}

inline DenseVector jacobi_scale(const SparseMatrix& a)
{
    const DenseVector d = a.diagonal();
    if (!(d.minCoeff() > 0))
        throw SolverError("solve: matrix has a non-positive diagonal entry");
    return d.cwiseSqrt().cwiseInverse();
}

inline std::string sci(Real v)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

/// Jacobi-preconditioned CG; the loop is explicit so the residual history can be reported.
inline LinearSolution solve_cg(const SparseMatrix& a, const DenseVector& b, const SolverOptions& opt)
{
    const Index n = b.size();
    const Index max_it = opt.max_iterations > 0 ? opt.max_iterations : 10 * std::max<Index>(n, 1);
    LinearSolution s;
    s.stats.method = SolverMethod::cg;
    const DenseVector scale = jacobi_scale(a);
    const DenseVector inv_diag = scale.cwiseProduct(scale);
    s.x = opt.initial_guess != nullptr ? *opt.initial_guess : DenseVector::Zero(n);
    if (s.x.size() != n)
        throw InvalidArgument("solve: initial guess has wrong size");
    const Real nb = std::sqrt(b.dot(inv_diag.cwiseProduct(b)));
    DenseVector r = b - a * s.x;
    DenseVector z = inv_diag.cwiseProduct(r);
    DenseVector p = z;
    DenseVector ap(n);
    Real rz = r.dot(z);
    Real res = std::sqrt(rz) / nb;
    s.stats.history.push_back(res);
    Index it = 0;
    while (res > opt.tol) {
        if (it >= max_it)
            throw SolverError("solve: CG did not reach the tolerance in " + std::to_string(max_it) +
                                  " iterations, residual " + sci(res),
                              s.stats.history);
        ap.noalias() = a * p;
        const Real pap = p.dot(ap);
        if (!(pap > 0))
            throw SolverError("solve: matrix is not positive definite along a CG direction", s.stats.history);
        const Real alpha = rz / pap;
        s.x.noalias() += alpha * p;
        r.noalias() -= alpha * ap;
        ++it;
        // Replace the recursive residual periodically to avoid drift.
        if (it % 500 == 0)
            r = b - a * s.x;
        z = inv_diag.cwiseProduct(r);
        const Real rz_new = r.dot(z);
        res = std::sqrt(rz_new) / nb;
        s.stats.history.push_back(res);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    s.stats.iterations = it;
    s.stats.residual = relative_residual(a, s.x, b, scale);
    return s;
}

/// Sparse LDL^T of the diagonally equilibrated matrix S A S, S = diag(A)^(-1/2); the u1 and
/// u2 basis functions scale differently with the mesh size.
inline LinearSolution solve_direct(const SparseMatrix& a, const DenseVector& b, const SolverOptions& opt)
{
    LinearSolution s;
    s.stats.method = SolverMethod::direct;
    const DenseVector scale = jacobi_scale(a);
    const SparseMatrix scaled = scale.asDiagonal() * a * scale.asDiagonal();
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(scaled);
    if (ldlt.info() != Eigen::Success)
        throw SolverError("solve: sparse LDL^T factorization failed");
    auto apply = [&](const DenseVector& rhs) {
        return DenseVector(scale.cwiseProduct(ldlt.solve(DenseVector(scale.cwiseProduct(rhs)))));
    };
    s.x = apply(b);
    s.stats.residual = relative_residual(a, s.x, b, scale);
    s.stats.history.push_back(s.stats.residual);
    // Iterative refinement while rounding leaves the residual above tolerance and it still halves.
    for (int step = 0; step < 5 && s.stats.residual > opt.tol; ++step) {
        const DenseVector x = s.x + apply(b - a * s.x);
        const Real res = relative_residual(a, x, b, scale);
        s.stats.history.push_back(res);
        ++s.stats.iterations;
        const bool stalled = !(res < 0.5 * s.stats.residual);
        if (res < s.stats.residual) {
            s.x = x;
            s.stats.residual = res;
        }
        if (stalled)
            break;
    }
    if (!(s.stats.residual <= std::max(opt.tol, opt.direct_floor)))
        throw SolverError("solve: direct solve residual " + sci(s.stats.residual) + " above tolerance",
                          s.stats.history);
    return s;
}

} // namespace detail

/// Solves the SPD system to a scaled relative residual of at most opt.tol. Both methods are
/// single-threaded and deterministic.
inline LinearSolution solve(const SparseSystem& sys, const SolverOptions& opt = {})
{
    const Index n = sys.b.size();
    if (sys.A.rows() != n || sys.A.cols() != n)
        throw InvalidArgument("solve: matrix and vector sizes differ");
    if (!(opt.tol > 0))
        throw InvalidArgument("solve: tolerance must be positive");
    if (n == 0 || sys.b.norm() == 0) {
        LinearSolution s;
        s.x = DenseVector::Zero(n);
        s.stats.method = opt.method == SolverMethod::cg ? SolverMethod::cg : SolverMethod::direct;
        return s;
    }
    SolverMethod m = opt.method;
    if (m == SolverMethod::automatic)
        m = n <= opt.direct_limit ? SolverMethod::direct : SolverMethod::cg;
    return m == SolverMethod::direct ? detail::solve_direct(sys.A, sys.b, opt) : detail::solve_cg(sys.A, sys.b, opt);
}

/// Discrete least-squares solution together with its solver statistics.
template <int D>
struct Solution
{
    space::DiscreteField<D> field;
    SolverStats stats;
};

template <int D>
Solution<D> solve_least_squares(std::shared_ptr<const space::DiscreteSpace<D>> space,
                                const ProblemSpec<D>& problem, ElementTable<D>& table,
                                const SolverOptions& opt = {})
{
    auto sys = assemble(*space, problem, table);
    auto s = solve(sys, opt);
    return {space::DiscreteField<D>(std::move(space), std::move(s.x)), std::move(s.stats)};
}

} // namespace stfosls::assembly

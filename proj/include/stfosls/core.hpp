#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stfosls {

using Real = double;
using Index = std::int64_t;

/// A point in the spatial domain Omega, d in {1, 2}.
template <int D>
using SpacePoint = std::array<Real, D>;

/// A point (t, x) of the space-time cylinder.
template <int D>
struct SpaceTimePoint
{
    Real t = 0;
    SpacePoint<D> x{};
};

template <int D>
using Vec = Eigen::Matrix<Real, D, 1>;

using DenseMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using DenseVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Overlap, gap, or a violated level rule.
class InvalidMesh : public Error
{
public:
    using Error::Error;
};

/// A hanging DoF whose master is itself constrained.
class ConstraintChainError : public Error
{
public:
    using Error::Error;
};

/// Failed or stagnated linear solve; carries the relative residual history when available.
class SolverError : public Error
{
public:
    explicit SolverError(const std::string& what, std::vector<double> history = {})
        : Error(what), history_(std::move(history))
    {
    }

    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Non-finite data sampled at a quadrature point.
class DataError : public Error
{
public:
    DataError(const std::string& what, Index element)
        : Error(what + " (element " + std::to_string(element) + ")"), element_(element)
    {
    }

    Index element() const { return element_; }

private:
    Index element_;
};

template <int D>
inline Vec<D> to_vec(const SpacePoint<D>& p)
{
    Vec<D> v;
    for (int i = 0; i < D; ++i)
        v[i] = p[i];
    return v;
}

template <int D>
inline SpacePoint<D> to_point(const Vec<D>& v)
{
    SpacePoint<D> p;
    for (int i = 0; i < D; ++i)
        p[i] = v[i];
    return p;
}

} // namespace stfosls

#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "../assembly/problem.hpp"

namespace stfosls::experiments {

struct ProblemInfo
{
    std::string id;
    int dim; // 0 for problems available in every dimension
    std::string description;
};

/// The six experiments plus a smooth manufactured problem with known solution.
inline const std::vector<ProblemInfo>& registry()
{
    static const std::vector<ProblemInfo> r = {
        {"1d-nonmatching", 1, "(f1, f2, u0) = (2, 0, 1)"},
        {"1d-interior-kink", 1, "(f1, f2, u0) = (1, 0, 1 - 2|x - 1/2|)"},
        {"1d-boundary-singularity", 1, "(f1, f2, u0) = (0, 0, x^(1/2) (1 - x))"},
        {"2d-nonmatching", 2, "(f1, f2, u0) = (0, 0, 1)"},
        {"2d-interior-kink", 2, "(f1, f2, u0) = (0, 0, |x - (1/2, 1/2)| sin(pi x1) sin(pi x2))"},
        {"2d-boundary-singularity", 2, "(f1, f2, u0) = (0, 0, x1^(3/4) (1 - x1) x2 (1 - x2))"},
        {"manufactured", 0, "u = exp(-d pi^2 t) prod sin(pi x_i); f1 = 0, f2 = 0"},
    };
    return r;
}

inline const ProblemInfo& problem_info(const std::string& id)
{
    for (const auto& p : registry())
        if (p.id == id)
            return p;
    throw InvalidArgument("unknown problem '" + id + "'");
}

namespace detail {

template <int D>
assembly::ProblemSpec<D> homogeneous(const std::string& id, Real f1, assembly::InitialField<D> u0)
{
    assembly::ProblemSpec<D> p;
    p.name = id;
    p.end_time = 1;
    p.f1 = [f1](const SpaceTimePoint<D>&) { return f1; };
    p.f2 = [](const SpaceTimePoint<D>&) { return Vec<D>::Zero().eval(); };
    p.u0 = std::move(u0);
    return p;
}

template <int D>
assembly::ProblemSpec<D> manufactured()
{
    using std::numbers::pi;
    auto p = homogeneous<D>("manufactured", 0, [](const SpacePoint<D>& x) {
        Real s = 1;
        for (int i = 0; i < D; ++i)
            s *= std::sin(pi * x[i]);
        return s;
    });
    // u1 = e(t) prod sin(pi x_i) with e(t) = exp(-d pi^2 t); u2 = -grad_x u1 and div u = 0.
    auto mode = [](const SpaceTimePoint<D>& p, int skip) {
        Real s = std::exp(-D * pi * pi * p.t);
        for (int i = 0; i < D; ++i)
            s *= i == skip ? pi * std::cos(pi * p.x[i]) : std::sin(pi * p.x[i]);
        return s;
    };
    fe::DifferentiableField<D> u;
    u.v1 = [mode](const SpaceTimePoint<D>& x) { return mode(x, -1); };
    u.dt_v1 = [mode](const SpaceTimePoint<D>& x) { return -D * pi * pi * mode(x, -1); };
    u.grad_v1 = [mode](const SpaceTimePoint<D>& x) {
        Vec<D> g;
        for (int i = 0; i < D; ++i)
            g[i] = mode(x, i);
        return g;
    };
    u.v2 = [g = u.grad_v1](const SpaceTimePoint<D>& x) { return Vec<D>(-g(x)); };
    u.div_v2 = [mode](const SpaceTimePoint<D>& x) { return D * pi * pi * mode(x, -1); };
    p.exact = std::move(u);
    return p;
}

} // namespace detail

/// Data of a registered problem on (0, 1) x (0,1)^d.
template <int D>
assembly::ProblemSpec<D> make_problem(const std::string& id)
{
    using std::numbers::pi;
    const auto& info = problem_info(id);
    if (info.dim != 0 && info.dim != D)
        throw InvalidArgument("problem '" + id + "' is defined for d = " + std::to_string(info.dim));
    if (id == "manufactured")
        return detail::manufactured<D>();
    if constexpr (D == 1) {
        if (id == "1d-nonmatching")
            return detail::homogeneous<1>(id, 2, [](const SpacePoint<1>&) { return 1.0; });
        if (id == "1d-interior-kink")
            return detail::homogeneous<1>(id, 1, [](const SpacePoint<1>& x) { return 1 - 2 * std::abs(x[0] - 0.5); });
        if (id == "1d-boundary-singularity")
            return detail::homogeneous<1>(id, 0, [](const SpacePoint<1>& x) { return std::sqrt(x[0]) * (1 - x[0]); });
    } else {
        if (id == "2d-nonmatching")
            return detail::homogeneous<2>(id, 0, [](const SpacePoint<2>&) { return 1.0; });
        if (id == "2d-interior-kink")
            return detail::homogeneous<2>(id, 0, [](const SpacePoint<2>& x) {
                return std::hypot(x[0] - 0.5, x[1] - 0.5) * std::sin(pi * x[0]) * std::sin(pi * x[1]);
            });
        if (id == "2d-boundary-singularity")
            return detail::homogeneous<2>(id, 0, [](const SpacePoint<2>& x) {
                return std::pow(x[0], 0.75) * (1 - x[0]) * x[1] * (1 - x[1]);
            });
    }
    throw InvalidArgument("problem '" + id + "' has no definition");
}

} // namespace stfosls::experiments

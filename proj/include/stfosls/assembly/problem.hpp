#pragma once

#include <functional>
#include <optional>
#include <string>

#include "../fe/prism_element.hpp"

namespace stfosls::assembly {

template <int D>
using InitialField = std::function<Real(const SpacePoint<D>&)>;

/// Data f = (f1, f2, u0) of G u = f on (0, T) x (0,1)^d, with an optional exact solution
/// u = (u1, u2) used only for error reporting.
template <int D>
struct ProblemSpec
{
    std::string name;
    Real end_time = 1;
    fe::ScalarField<D> f1;
    fe::VectorField<D> f2;
    InitialField<D> u0;
    std::optional<fe::DifferentiableField<D>> exact;
};

} // namespace stfosls::assembly

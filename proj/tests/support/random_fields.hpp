#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <stfosls/fe/prism_element.hpp>

namespace stfosls::test_support {

/// Sum of a few plane waves sin(w t + k.x + phase); every derivative is analytic.
template <int D>
struct Wave
{
    Real amplitude;
    Real omega;
    Vec<D> wavenumber;
    Real phase;

    Real arg(const SpaceTimePoint<D>& p) const { return omega * p.t + wavenumber.dot(to_vec<D>(p.x)) + phase; }
};

template <int D>
std::vector<Wave<D>> random_waves(std::mt19937& rng, int count)
{
    std::uniform_real_distribution<Real> u(-1.5, 1.5);
    std::vector<Wave<D>> waves;
    for (int i = 0; i < count; ++i) {
        Wave<D> w;
        w.amplitude = u(rng);
        w.omega = u(rng);
        for (int c = 0; c < D; ++c)
            w.wavenumber[c] = u(rng);
        w.phase = 2 * u(rng);
        waves.push_back(w);
    }
    return waves;
}

/// Smooth random field pair with analytic derivatives.
template <int D>
fe::DifferentiableField<D> random_smooth_field(std::mt19937& rng)
{
    const auto w1 = random_waves<D>(rng, 3);
    std::vector<std::vector<Wave<D>>> w2;
    for (int c = 0; c < D; ++c)
        w2.push_back(random_waves<D>(rng, 3));

    fe::DifferentiableField<D> f;
    f.v1 = [w1](const SpaceTimePoint<D>& p) {
        Real s = 0;
        for (const auto& w : w1)
            s += w.amplitude * std::sin(w.arg(p));
        return s;
    };
    f.dt_v1 = [w1](const SpaceTimePoint<D>& p) {
        Real s = 0;
        for (const auto& w : w1)
            s += w.amplitude * w.omega * std::cos(w.arg(p));
        return s;
    };
    f.grad_v1 = [w1](const SpaceTimePoint<D>& p) {
        Vec<D> g = Vec<D>::Zero();
        for (const auto& w : w1)
            g += w.amplitude * std::cos(w.arg(p)) * w.wavenumber;
        return g;
    };
    f.v2 = [w2](const SpaceTimePoint<D>& p) {
        Vec<D> v;
        for (int c = 0; c < D; ++c) {
            v[c] = 0;
            for (const auto& w : w2[c])
                v[c] += w.amplitude * std::sin(w.arg(p));
        }
        return v;
    };
    f.div_v2 = [w2](const SpaceTimePoint<D>& p) {
        Real s = 0;
        for (int c = 0; c < D; ++c)
            for (const auto& w : w2[c])
                s += w.amplitude * w.wavenumber[c] * std::cos(w.arg(p));
        return s;
    };
    return f;
}

/// Random isotropic prism: J of length h, K a perturbed equilateral-ish simplex of diameter ~ h.
template <int D>
PrismGeometry<D> random_prism(std::mt19937& rng, Real h = 1)
{
    std::uniform_real_distribution<Real> u(-1, 1);
    const Real t0 = u(rng);
    std::array<SpacePoint<D>, D + 1> v;
    const SpacePoint<D> origin = [&] {
        SpacePoint<D> o;
        for (int c = 0; c < D; ++c)
            o[c] = u(rng);
        return o;
    }();
    if constexpr (D == 1) {
        v[0] = origin;
        v[1] = {origin[0] + h * (1 + 0.3 * u(rng))};
    } else {
        const std::array<SpacePoint<2>, 3> ref{{{0, 0}, {1, 0}, {0.5, 0.8660254037844386}}};
        for (int i = 0; i < 3; ++i)
            v[i] = {origin[0] + h * (ref[i][0] + 0.15 * u(rng)), origin[1] + h * (ref[i][1] + 0.15 * u(rng))};
    }
    return {Interval(t0, t0 + h * (1 + 0.3 * u(rng))), Simplex<D>(v)};
}

} // namespace stfosls::test_support

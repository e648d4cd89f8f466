#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace charfem {

/// Symmetric quadrature rule on a triangle.
///
/// Points are barycentric triples and weights sum to one, so that
/// `area * sum_i weight_i * g(point_i)` approximates the integral of g.
struct TriangleRule {
    int degree = 0;
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
};

namespace detail {

inline void add_orbit_center(TriangleRule& r, double w) {
    r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    r.weights.push_back(w);
}

// (a, a, 1-2a) and its rotations
inline void add_orbit_aab(TriangleRule& r, double a, double w) {
    const double b = 1.0 - 2.0 * a;
    r.points.push_back({a, a, b});
    r.points.push_back({a, b, a});
    r.points.push_back({b, a, a});
    for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

// all six permutations of (a, b, 1-a-b)
inline void add_orbit_abc(TriangleRule& r, double a, double b, double w) {
    const double c = 1.0 - a - b;
    r.points.push_back({a, b, c});
    r.points.push_back({a, c, b});
    r.points.push_back({b, a, c});
    r.points.push_back({b, c, a});
    r.points.push_back({c, a, b});
    r.points.push_back({c, b, a});
    for (int i = 0; i < 6; ++i) r.weights.push_back(w);
}

} // namespace detail

/// Seven-point rule exact for polynomials of degree five (Radon; Hammer, Marlowe and Stroud).
inline const TriangleRule& seven_point_degree5() {
    static const TriangleRule rule = [] {
        TriangleRule r;
        r.degree = 5;
        const double s15 = std::sqrt(15.0);
        detail::add_orbit_center(r, 9.0 / 40.0);
        detail::add_orbit_aab(r, (6.0 - s15) / 21.0, (155.0 - s15) / 1200.0);
        detail::add_orbit_aab(r, (6.0 + s15) / 21.0, (155.0 + s15) / 1200.0);
        return r;
    }();
    return rule;
}

/// Sixteen-point rule exact for polynomials of degree eight (Dunavant).
inline const TriangleRule& sixteen_point_degree8() {
    static const TriangleRule rule = [] {
        TriangleRule r;
        r.degree = 8;
        detail::add_orbit_center(r, 0.144315607677787);
        detail::add_orbit_aab(r, 0.459292588292723, 0.095091634267285);
        detail::add_orbit_aab(r, 0.170569307751760, 0.103217370534718);
        detail::add_orbit_aab(r, 0.050547228317031, 0.032458497623198);
        detail::add_orbit_abc(r, 0.008394777409958, 0.263112829634638, 0.027230314174435);
        return r;
    }();
    return rule;
}

/// The rule used for every exact integral of polynomial integrands.
inline const TriangleRule& exact_rule() { return sixteen_point_degree8(); }

} // namespace charfem

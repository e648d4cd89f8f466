#pragma once

#include "charfem/fem.hpp"
#include "charfem/mesh.hpp"

#include <memory>
#include <random>

namespace charfem::testing {

inline std::shared_ptr<const Mesh> unit_square(int n, MeshPattern pattern = MeshPattern::crisscross) {
    return std::make_shared<const Mesh>(generate_structured_unit_square(n, pattern));
}

inline Barycentric random_barycentric(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    return {1.0 - a - b, a, b};
}

/// Random vertex values in [-1, 1]^2, zero on the boundary, rescaled so that
/// dt * |w|_{1,inf} equals `target` (dt = 1).
inline P1Field random_p1_field(std::shared_ptr<const Mesh> mesh, std::mt19937_64& rng, double target) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    P1Field w = P1Field::zero(mesh);
    for (int v = 0; v < mesh->num_vertices(); ++v)
        if (!mesh->is_boundary_vertex(v)) w.values[v] = Point(u(rng), u(rng));
    const double s = sup_grad_p1(w);
    for (auto& x : w.values) x *= target / s;
    return w;
}

/// Smooth divergence-free-ish field vanishing on the boundary of the unit square.
inline Point smooth_velocity(const Point& x) {
    const double pi = 3.14159265358979323846;
    const double s = std::sin(pi * x.x()) * std::sin(pi * x.y());
    return {s * std::cos(pi * x.y()), -s * std::cos(pi * x.x()) + 0.3 * s};
}

} // namespace charfem::testing

#pragma once

#include "charfem/errors.hpp"
#include "charfem/fem.hpp"
#include "charfem/geometry.hpp"
#include "charfem/mesh.hpp"
#include "charfem/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace charfem {

/// Admissibility of a foot map x -> x - dt * w(x).
struct CflReport {
    double dt_times_grad = 0.0; ///< dt * |w|_{1,inf}
    bool bijective_ok = true;   ///< dt * |w|_{1,inf} < 1
    bool jacobian_ok = true;    ///< dt * |w|_{1,inf} <= 1/4, Jacobian in [1/2, 3/2]
    double step_vs_h = 0.0;     ///< dt / (c0 * h^{1/2}), diagnostic only
};

/// A time step refused because the foot map is not admissible.
class StepRejected : public Error {
public:
    StepRejected(const std::string& what, CflReport report) : Error(what), report_(report) {}
    const CflReport& report() const noexcept { return report_; }

private:
    CflReport report_;
};

inline CflReport check_admissibility(const P1Field& w, double dt, double h, double c0_user = 1.0) {
    CflReport r;
    r.dt_times_grad = dt * sup_grad_p1(w);
    r.bijective_ok = r.dt_times_grad < 1.0;
    r.jacobian_ok = r.dt_times_grad <= 0.25;
    r.step_vs_h = (c0_user > 0.0 && h > 0.0) ? dt / (c0_user * std::sqrt(h))
                                             : std::numeric_limits<double>::quiet_NaN();
    return r;
}

/// Parallel assembly settings.
///
/// In reproducible mode the element range is cut into a fixed number of
/// blocks whose partial sums are merged in block order, so results do not
/// depend on the thread count.
struct AssemblyOptions {
    int threads = 1;
    bool reproducible = true;
};

namespace detail {

constexpr int reproducible_blocks = 16;

/// Runs kernel(first, last, partial) over element blocks and sums the partial vectors.
template <class Kernel>
Eigen::VectorXd blocked_element_sum(int num_elements, Eigen::Index size, const AssemblyOptions& opts, Kernel&& kernel) {
    const int threads = std::max(1, opts.threads);
    const int blocks = std::max(1, std::min(num_elements, opts.reproducible ? reproducible_blocks : threads));
    std::vector<Eigen::VectorXd> partial(blocks, Eigen::VectorXd::Zero(size));
    std::vector<std::exception_ptr> errors(blocks);
    auto run_block = [&](int b) {
        const int first = static_cast<int>(static_cast<long>(num_elements) * b / blocks);
        const int last = static_cast<int>(static_cast<long>(num_elements) * (b + 1) / blocks);
        try {
            kernel(first, last, partial[b]);
        } catch (...) {
            errors[b] = std::current_exception();
        }
    };
    if (threads == 1) {
        for (int b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (int b = t; b < blocks; b += threads) run_block(b);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(size);
    for (const auto& p : partial) sum += p;
    return sum;
}

} // namespace detail

/// Exact composite term r_i = ∫ (u_prev ∘ X1(w)) · φ_i over the domain.
///
/// X1(w) is affine on each source element, so each source element is
/// split into clip polygons against the target elements and the polynomial
/// products are integrated by an exact rule.
inline Eigen::VectorXd assemble_composite_exact(const Field& u_prev, const P1Field& w, double dt,
                                                const AssemblyOptions& opts = {}) {
    if (u_prev.role != Role::velocity) throw InvalidArgument("composite term needs a velocity field");
    if (!(dt > 0.0)) throw InvalidArgument("time increment must be positive");
    const auto& space = *u_prev.space;
    const auto& mesh = space.mesh();
    const ElementPair pair = space.pair();
    const int nloc = space.num_local_velocity_dofs();
    const int n = space.num_scalar_velocity_dofs();
    const auto& rule = exact_rule();
    if (2 * velocity_degree(pair) > rule.degree) throw InternalError("exact rule degree too low for this element pair");

    return detail::blocked_element_sum(mesh.num_triangles(), space.num_velocity_dofs(), opts,
                                       [&](int first, int last, Eigen::VectorXd& r) {
        Locator locator(mesh);
        LocalValues phi0, phi1;
        for (int k0 = first; k0 < last; ++k0) {
            const auto f = foot_map_on_element(w, dt, k0);
            const auto& g0 = mesh.geometry(k0);
            const auto polys = find_overlaps(mesh, k0, f, locator);
            double covered = 0.0;
            std::array<double, 2 * max_local_velocity_dofs> local{};
            for (const auto& poly : polys) {
                covered += poly.area();
                const int k1 = poly.target_element;
                const auto& g1 = mesh.geometry(k1);
                const auto dofs1 = space.velocity_dofs(k1);
                std::array<double, max_local_velocity_dofs> ux{}, uy{};
                for (int j = 0; j < nloc; ++j) {
                    ux[j] = u_prev.coeffs[dofs1[j]];
                    uy[j] = u_prev.coeffs[n + dofs1[j]];
                }
                for_each_polygon_point(poly, rule, [&](const Point& x, double weight) {
                    velocity_shape(pair, g1.barycentric(f(x)), phi1);
                    double vx = 0.0, vy = 0.0;
                    for (int j = 0; j < nloc; ++j) {
                        vx += ux[j] * phi1[j];
                        vy += uy[j] * phi1[j];
                    }
                    velocity_shape(pair, g0.barycentric(x), phi0);
                    vx *= weight;
                    vy *= weight;
                    for (int i = 0; i < nloc; ++i) {
                        local[i] += vx * phi0[i];
                        local[nloc + i] += vy * phi0[i];
                    }
                });
            }
            if (std::abs(covered - g0.area) > 1e-8 * g0.area)
                throw GeometryConsistency("clip polygons of element " + std::to_string(k0) + " cover " +
                                          std::to_string(covered / g0.area) + " of its area");
            const auto dofs0 = space.velocity_dofs(k0);
            for (int i = 0; i < nloc; ++i) {
                r[dofs0[i]] += local[i];
                r[n + dofs0[i]] += local[nloc + i];
            }
        }
    });
}

/// Quadrature approximation of the composite term with the full (not
/// linearized) velocity in the foot map. Feet outside the domain are
/// projected onto the boundary.
inline Eigen::VectorXd assemble_composite_quadrature(const Field& u_prev, const Field& w_full, double dt,
                                                     const TriangleRule& rule = seven_point_degree5(),
                                                     const AssemblyOptions& opts = {}) {
    if (u_prev.role != Role::velocity || w_full.role != Role::velocity)
        throw InvalidArgument("composite term needs velocity fields");
    if (!(dt > 0.0)) throw InvalidArgument("time increment must be positive");
    const auto& space = *u_prev.space;
    const auto& mesh = space.mesh();
    const ElementPair pair = space.pair();
    const int nloc = space.num_local_velocity_dofs();
    const int n = space.num_scalar_velocity_dofs();

    return detail::blocked_element_sum(mesh.num_triangles(), space.num_velocity_dofs(), opts,
                                       [&](int first, int last, Eigen::VectorXd& r) {
        Locator locator(mesh);
        LocalValues phi;
        for (int k = first; k < last; ++k) {
            const auto& g = mesh.geometry(k);
            const auto dofs = space.velocity_dofs(k);
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const auto& l = rule.points[q];
                const Point x = g.point(l);
                Point foot = x - dt * w_full.velocity(k, l);
                auto loc = locator.try_locate(foot, k);
                if (!loc) {
                    foot = mesh.project_to_boundary(foot);
                    loc = locator.locate(foot, k);
                }
                const Point v = g.area * rule.weights[q] * u_prev.velocity(loc->element, loc->barycentric);
                velocity_shape(pair, l, phi);
                for (int i = 0; i < nloc; ++i) {
                    r[dofs[i]] += v.x() * phi[i];
                    r[n + dofs[i]] += v.y() * phi[i];
                }
            }
        }
    });
}

} // namespace charfem

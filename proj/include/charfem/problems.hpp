#pragma once

#include "charfem/analysis.hpp"
#include "charfem/errors.hpp"
#include "charfem/scheme.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace charfem {

namespace detail {

// φ(a,b,t) = -sin²(πa) sin(πb) {sin(π(a+t)) + 3 sin(π(a+2b+t))} and the
// derivatives needed for f = ∂t u + (u·∇)u − νΔu + ∇p.
struct PhiJet {
    double v, a, b, t, aa, bb;
};

inline PhiJet phi_jet(double a, double b, double t) {
    constexpr double pi = std::numbers::pi;
    const double sa = std::sin(pi * a), ca = std::cos(pi * a);
    const double s = sa * sa, s1 = 2.0 * pi * sa * ca, s2 = 2.0 * pi * pi * (ca * ca - sa * sa);
    const double bb0 = std::sin(pi * b), b1 = pi * std::cos(pi * b), b2 = -pi * pi * bb0;
    const double sin1 = std::sin(pi * (a + t)), cos1 = std::cos(pi * (a + t));
    const double sin2 = std::sin(pi * (a + 2.0 * b + t)), cos2 = std::cos(pi * (a + 2.0 * b + t));
    const double g = sin1 + 3.0 * sin2;
    const double ga = pi * cos1 + 3.0 * pi * cos2;
    const double gb = 6.0 * pi * cos2;
    const double gaa = -pi * pi * sin1 - 3.0 * pi * pi * sin2;
    const double gbb = -12.0 * pi * pi * sin2;
    PhiJet j;
    j.v = -s * bb0 * g;
    j.a = -(s1 * bb0 * g + s * bb0 * ga);
    j.b = -(s * b1 * g + s * bb0 * gb);
    j.t = -s * bb0 * ga;
    j.aa = -(s2 * bb0 * g + 2.0 * s1 * bb0 * ga + s * bb0 * gaa);
    j.bb = -(s * b2 * g + 2.0 * s * b1 * gb + s * bb0 * gbb);
    return j;
}

} // namespace detail

/// Closed-form solution and forcing of the manufactured test problem on (0,1)^2:
/// u1 = φ(x1,x2,t), u2 = −φ(x2,x1,t), p = sin(π(x1+2x2)+1+t).
struct ManufacturedSolution {
    double nu = 1e-2;

    Point velocity(const Point& x, double t) const {
        return {detail::phi_jet(x.x(), x.y(), t).v, -detail::phi_jet(x.y(), x.x(), t).v};
    }

    Eigen::Matrix2d velocity_gradient(const Point& x, double t) const {
        const auto p = detail::phi_jet(x.x(), x.y(), t);
        const auto q = detail::phi_jet(x.y(), x.x(), t);
        Eigen::Matrix2d j;
        j << p.a, p.b, -q.b, -q.a;
        return j;
    }

    double pressure(const Point& x, double t) const {
        return std::sin(std::numbers::pi * (x.x() + 2.0 * x.y()) + 1.0 + t);
    }

    Point force(const Point& x, double t) const {
        constexpr double pi = std::numbers::pi;
        const auto p = detail::phi_jet(x.x(), x.y(), t);
        const auto q = detail::phi_jet(x.y(), x.x(), t);
        const Point u(p.v, -q.v);
        const Point dudt(p.t, -q.t);
        const Point lap(p.aa + p.bb, -(q.aa + q.bb));
        Eigen::Matrix2d j;
        j << p.a, p.b, -q.b, -q.a;
        const double c = pi * std::cos(pi * (x.x() + 2.0 * x.y()) + 1.0 + t);
        return dudt + j * u - nu * lap + Point(c, 2.0 * c);
    }
};

inline ManufacturedSolution example1_fields(double nu) {
    if (!(nu > 0.0)) throw InvalidArgument("nu must be positive");
    return ManufacturedSolution{nu};
}

inline Problem make_example1(double nu) {
    const auto m = example1_fields(nu);
    Problem pb;
    pb.name = "example1";
    pb.force = [m](const Point& x, double t) { return m.force(x, t); };
    pb.initial_velocity = [m](const Point& x) { return m.velocity(x, 0.0); };
    pb.initial_velocity_gradient = [m](const Point& x) { return m.velocity_gradient(x, 0.0); };
    pb.exact = ExactSolution{[m](const Point& x, double t) { return m.velocity(x, t); },
                             [m](const Point& x, double t) { return m.velocity_gradient(x, t); },
                             [m](const Point& x, double t) { return m.pressure(x, t); }};
    return pb;
}

/// Lid velocity of the regularized cavity on the top side x2 = 1.
inline double cavity_lid_speed(double x1) { return 4.0 * x1 * (1.0 - x1); }

/// Regularized driven cavity: f = 0, u0 = 0, u = (4x1(1−x1), 0) on the lid.
inline Problem make_cavity() {
    Problem pb;
    pb.name = "cavity";
    pb.boundary = [](const Point& x, double) {
        return x.y() >= 1.0 - 1e-12 ? Point(cavity_lid_speed(x.x()), 0.0) : Point(0.0, 0.0);
    };
    return pb;
}

/// Zero velocity with a moving pressure p = cos(πx1) cos(πx2) sin(1+t), f = ∇p.
inline Problem make_hydrostatic() {
    constexpr double pi = std::numbers::pi;
    Problem pb;
    pb.name = "hydrostatic";
    pb.force = [](const Point& x, double t) {
        const double s = std::sin(1.0 + t);
        return Point(-pi * std::sin(pi * x.x()) * std::cos(pi * x.y()) * s,
                     -pi * std::cos(pi * x.x()) * std::sin(pi * x.y()) * s);
    };
    pb.exact = ExactSolution{[](const Point&, double) { return Point(0.0, 0.0); },
                             [](const Point&, double) { return Eigen::Matrix2d::Zero().eval(); },
                             [](const Point& x, double t) {
                                 return std::cos(pi * x.x()) * std::cos(pi * x.y()) * std::sin(1.0 + t);
                             }};
    return pb;
}

inline Problem make_problem(const std::string& name, double nu) {
    if (name == "example1") return make_example1(nu);
    if (name == "cavity") return make_cavity();
    if (name == "hydrostatic") return make_hydrostatic();
    throw InvalidArgument("unknown problem '" + name + "' (expected example1, cavity or hydrostatic)");
}

} // namespace charfem

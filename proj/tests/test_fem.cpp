#include "charfem/fem.hpp"
#include "charfem/quadrature.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace charfem;
using charfem::testing::random_barycentric;
using charfem::testing::unit_square;

namespace {

constexpr ElementPair pairs[] = {ElementPair::taylor_hood, ElementPair::mini};

const TriangleGeometry& reference_triangle() {
    static const auto g = make_triangle_geometry(Point(0, 0), Point(1, 0), Point(0, 1));
    return g;
}

double l2_interpolation_error(int n) {
    const auto mesh = unit_square(n);
    const auto space = std::make_shared<const FESpace>(mesh, ElementPair::taylor_hood);
    const auto f = [](const Point& x) { return std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y()); };
    const auto p = interpolate_pressure(space, f);
    const auto& rule = exact_rule();
    double s = 0.0;
    for (int k = 0; k < mesh->num_triangles(); ++k) {
        const auto& g = mesh->geometry(k);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double d = p.pressure(k, rule.points[q]) - f(g.point(rule.points[q]));
            s += g.area * rule.weights[q] * d * d;
        }
    }
    return std::sqrt(s);
}

} // namespace

TEST(Basis, P1IsKroneckerAtVertices) {
    for (int i = 0; i < 3; ++i) {
        Barycentric l{0, 0, 0};
        l[i] = 1;
        const auto v = eval_basis(ElementPair::taylor_hood, Role::pressure, l);
        for (int j = 0; j < 3; ++j) EXPECT_EQ(v[j], i == j ? 1.0 : 0.0);
        const auto m = eval_basis(ElementPair::mini, Role::velocity, l);
        for (int j = 0; j < 3; ++j) EXPECT_EQ(m[j], i == j ? 1.0 : 0.0);
        EXPECT_EQ(m[3], 0.0);
    }
}

TEST(Basis, P2IsKroneckerAtNodes) {
    for (int node = 0; node < 6; ++node) {
        Barycentric l{0, 0, 0};
        if (node < 3) {
            l[node] = 1;
        } else {
            l[(node - 3 + 1) % 3] = l[(node - 3 + 2) % 3] = 0.5;
        }
        const auto v = eval_basis(ElementPair::taylor_hood, Role::velocity, l);
        ASSERT_EQ(v.size(), 6u);
        for (int j = 0; j < 6; ++j) EXPECT_NEAR(v[j], node == j ? 1.0 : 0.0, 1e-15) << node << ' ' << j;
    }
    // midpoint of the edge between vertices 0 and 1 is local dof 5
    const auto v = eval_basis(ElementPair::taylor_hood, Role::velocity, {0.5, 0.5, 0.0});
    EXPECT_EQ(v[5], 1.0);
}

TEST(Basis, BubbleIsOneAtCentroid) {
    const auto v = eval_basis(ElementPair::mini, Role::velocity, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    EXPECT_NEAR(v[3], 1.0, 1e-15);
}

TEST(Basis, InvalidBarycentricThrows) {
    EXPECT_THROW(eval_basis(ElementPair::mini, Role::velocity, {-0.1, 0.6, 0.5}), InvalidArgument);
    EXPECT_THROW(eval_basis(ElementPair::mini, Role::velocity, {0.2, 0.2, 0.2}), InvalidArgument);
    EXPECT_NO_THROW(eval_basis(ElementPair::mini, Role::velocity, {-1e-13, 0.5, 0.5 + 1e-13}));
}

TEST(Basis, PartitionOfUnity) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto l = random_barycentric(rng);
        double s = 0.0;
        for (double v : eval_basis(ElementPair::taylor_hood, Role::velocity, l)) s += v;
        EXPECT_NEAR(s, 1.0, 1e-14);
        // P1 part of MINI sums to one; the bubble vanishes on the boundary only.
        const auto m = eval_basis(ElementPair::mini, Role::velocity, l);
        EXPECT_NEAR(m[0] + m[1] + m[2], 1.0, 1e-14);
        s = 0.0;
        for (double v : eval_basis(ElementPair::taylor_hood, Role::pressure, l)) s += v;
        EXPECT_NEAR(s, 1.0, 1e-14);
    }
}

TEST(BasisGrad, P1OnReferenceTriangle) {
    const auto d = eval_basis_grad(ElementPair::taylor_hood, Role::pressure, {0.2, 0.3, 0.5}, reference_triangle());
    EXPECT_NEAR((d[0] - Point(-1, -1)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((d[1] - Point(1, 0)).norm(), 0.0, 1e-15);
    EXPECT_NEAR((d[2] - Point(0, 1)).norm(), 0.0, 1e-15);
}

TEST(BasisGrad, SumOfGradientsVanishes) {
    std::mt19937_64 rng(2);
    const auto g = make_triangle_geometry(Point(0.1, 0.2), Point(0.9, 0.35), Point(0.3, 0.8));
    for (int i = 0; i < 20; ++i) {
        const auto l = random_barycentric(rng);
        Point s = Point::Zero();
        for (const auto& d : eval_basis_grad(ElementPair::taylor_hood, Role::pressure, l, g)) s += d;
        EXPECT_LT(s.norm(), 1e-13);
        s.setZero();
        for (const auto& d : eval_basis_grad(ElementPair::taylor_hood, Role::velocity, l, g)) s += d;
        EXPECT_LT(s.norm(), 1e-12);
    }
}

TEST(BasisGrad, MatchesFiniteDifferences) {
    std::mt19937_64 rng(3);
    const auto g = make_triangle_geometry(Point(0.1, 0.2), Point(0.9, 0.35), Point(0.3, 0.8));
    const double h = 1e-6;
    for (auto pair : pairs)
        for (int i = 0; i < 20; ++i) {
            auto l = random_barycentric(rng);
            // keep the stencil inside the element
            for (auto& x : l) x = 0.05 + 0.85 * x;
            const double s = l[0] + l[1] + l[2];
            for (auto& x : l) x /= s;
            const Point x = g.point(l);
            const auto d = eval_basis_grad(pair, Role::velocity, l, g);
            for (int dir = 0; dir < 2; ++dir) {
                Point e = Point::Zero();
                e[dir] = h;
                const auto vp = eval_basis(pair, Role::velocity, g.barycentric(x + e));
                const auto vm = eval_basis(pair, Role::velocity, g.barycentric(x - e));
                for (std::size_t j = 0; j < d.size(); ++j) {
                    const double fd = (vp[j] - vm[j]) / (2 * h);
                    EXPECT_NEAR(fd, d[j][dir], 1e-6 * std::max(1.0, std::abs(d[j][dir])));
                }
            }
        }
}

TEST(BasisGrad, DegenerateGeometryThrows) {
    EXPECT_THROW(make_triangle_geometry(Point(0, 0), Point(1, 1), Point(2, 2)), SingularGeometry);
}

TEST(FESpace, DofCountsAndDirichletMask) {
    const auto mesh = unit_square(3, MeshPattern::right);
    const FESpace th(mesh, ElementPair::taylor_hood);
    EXPECT_EQ(th.num_scalar_velocity_dofs(), mesh->num_vertices() + mesh->num_edges());
    EXPECT_EQ(th.num_pressure_dofs(), 16);
    const FESpace mini(mesh, ElementPair::mini);
    EXPECT_EQ(mini.num_scalar_velocity_dofs(), 16 + 18);
    for (const FESpace* s : {&th, &mini}) {
        const int n = s->num_scalar_velocity_dofs();
        for (int i = 0; i < n; ++i) {
            const Point x = s->velocity_node(i);
            const bool on_boundary = x.x() < 1e-14 || x.x() > 1 - 1e-14 || x.y() < 1e-14 || x.y() > 1 - 1e-14;
            EXPECT_EQ(s->is_dirichlet(i), on_boundary);
            EXPECT_EQ(s->is_dirichlet(n + i), on_boundary);
        }
    }
}

TEST(Interpolation, ReproducesLinearAndQuadraticFunctions) {
    std::mt19937_64 rng(4);
    const auto mesh = unit_square(4);
    for (auto pair : pairs) {
        const auto space = std::make_shared<const FESpace>(mesh, pair);
        const bool quadratic = pair == ElementPair::taylor_hood;
        const auto f = [&](const Point& x) {
            Point v(0.3 + 2 * x.x() - x.y(), -1 + x.x() + 0.5 * x.y());
            if (quadratic) v += Point(x.x() * x.y(), x.y() * x.y());
            return v;
        };
        const auto u = interpolate_velocity(space, f);
        for (int k = 0; k < mesh->num_triangles(); ++k) {
            const auto l = random_barycentric(rng);
            EXPECT_LT((u.velocity(k, l) - f(mesh->geometry(k).point(l))).norm(), 1e-13);
        }
        const auto p = interpolate_pressure(space, [](const Point& x) { return 1.5 - x.x() + 3 * x.y(); });
        for (int k = 0; k < mesh->num_triangles(); ++k) {
            const auto l = random_barycentric(rng);
            const Point x = mesh->geometry(k).point(l);
            EXPECT_NEAR(p.pressure(k, l), 1.5 - x.x() + 3 * x.y(), 1e-13);
        }
    }
}

TEST(Interpolation, ConstantPressureKeepsValuesUnlessMeanRemoved) {
    const auto space = std::make_shared<const FESpace>(unit_square(3), ElementPair::taylor_hood);
    const auto p = interpolate_pressure(space, [](const Point&) { return 2.5; });
    for (int i = 0; i < p.coeffs.size(); ++i) EXPECT_EQ(p.coeffs[i], 2.5);
    const auto q = interpolate_pressure(space, [](const Point& x) { return 2.5 + x.x(); }, MeanPolicy::remove);
    EXPECT_NEAR(pressure_mean(q), 0.0, 1e-14);
    EXPECT_NEAR(q.coeffs[1] - q.coeffs[0], space->mesh().vertex(1).x() - space->mesh().vertex(0).x(), 1e-14);
}

TEST(Interpolation, P1ErrorQuartersUnderRefinement) {
    const double r = l2_interpolation_error(8) / l2_interpolation_error(16);
    EXPECT_NEAR(r, 4.0, 0.2);
}

TEST(Linearize, ReproducesP1Fields) {
    std::mt19937_64 rng(5);
    const auto mesh = unit_square(4);
    for (auto pair : pairs) {
        const auto space = std::make_shared<const FESpace>(mesh, pair);
        const auto f = [](const Point& x) { return Point(x.x() - 2 * x.y(), 0.5 + x.y()); };
        const auto u = interpolate_velocity(space, f);
        const auto w = p1_linearize(u);
        for (int k = 0; k < mesh->num_triangles(); ++k) {
            const auto l = random_barycentric(rng);
            EXPECT_LT((w.at(k, l) - u.velocity(k, l)).norm(), 1e-14);
        }
        const auto z = p1_linearize(Field::zero(space, Role::velocity));
        for (const auto& v : z.values) EXPECT_EQ(v.norm(), 0.0);
    }
}

TEST(Linearize, IsIdempotentAndMaxStable) {
    const auto mesh = unit_square(5);
    for (auto pair : pairs) {
        const auto space = std::make_shared<const FESpace>(mesh, pair);
        const auto u = interpolate_velocity(space, charfem::testing::smooth_velocity);
        const auto w = p1_linearize(u);
        const auto w2 = p1_linearize(to_velocity_field(w, space));
        for (int v = 0; v < mesh->num_vertices(); ++v) EXPECT_EQ(w.values[v], w2.values[v]);
        const int n = space->num_scalar_velocity_dofs();
        double umax = 0.0, wmax = 0.0;
        for (int i = 0; i < n; ++i) umax = std::max({umax, std::abs(u.coeffs[i]), std::abs(u.coeffs[n + i])});
        for (const auto& v : w.values) wmax = std::max({wmax, std::abs(v.x()), std::abs(v.y())});
        EXPECT_LE(wmax, umax);
    }
}

TEST(Linearize, SecondOrderAccurate) {
    auto max_gap = [](int n) {
        const auto mesh = unit_square(n);
        const auto space = std::make_shared<const FESpace>(mesh, ElementPair::taylor_hood);
        const auto u = interpolate_velocity(space, [](const Point& x) {
            return Point(std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y()), 0.0);
        });
        const auto w = p1_linearize(u);
        std::mt19937_64 rng(6);
        double m = 0.0;
        for (int k = 0; k < mesh->num_triangles(); ++k)
            for (int s = 0; s < 10; ++s) {
                const auto l = random_barycentric(rng);
                m = std::max(m, (w.at(k, l) - u.velocity(k, l)).norm());
            }
        // include the edge midpoints, where the gap peaks
        for (int k = 0; k < mesh->num_triangles(); ++k)
            for (int e = 0; e < 3; ++e) {
                Barycentric l{0.5, 0.5, 0.5};
                l[e] = 0.0;
                m = std::max(m, (w.at(k, l) - u.velocity(k, l)).norm());
            }
        return m;
    };
    EXPECT_NEAR(max_gap(8) / max_gap(16), 4.0, 0.4);
}

TEST(SupGrad, ZeroAndLinearFields) {
    const auto mesh = unit_square(4);
    EXPECT_EQ(sup_grad_p1(P1Field::zero(mesh)), 0.0);
    auto w = P1Field::zero(mesh);
    for (int v = 0; v < mesh->num_vertices(); ++v) w.values[v] = Point(-2.5 * mesh->vertex(v).x(), 0.0);
    EXPECT_NEAR(sup_grad_p1(w), 2.5, 1e-13);
}

TEST(SupGrad, MatchesSampledFrobeniusNorm) {
    std::mt19937_64 rng(8);
    const auto mesh = unit_square(6);
    const auto w = charfem::testing::random_p1_field(mesh, rng, 1.7);
    double sampled = 0.0;
    const double h = 1e-7;
    for (int k = 0; k < mesh->num_triangles(); ++k) {
        // gradient from differences of element values
        const auto& g = mesh->geometry(k);
        const Point c = g.centroid();
        const auto at = [&](const Point& x) { return w.at(k, g.barycentric(x)); };
        Eigen::Matrix2d j;
        j.col(0) = (at(c + Point(h, 0)) - at(c - Point(h, 0))) / (2 * h);
        j.col(1) = (at(c + Point(0, h)) - at(c - Point(0, h))) / (2 * h);
        sampled = std::max(sampled, j.norm());
    }
    EXPECT_NEAR(sup_grad_p1(w), 1.7, 1e-12);
    EXPECT_NEAR(sampled, sup_grad_p1(w), 1e-6);
}
